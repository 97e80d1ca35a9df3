#pragma once

// Closed-form convergence-bound terms for reputation-weighted aggregation:
// the two error terms Δ₁ and Δ₂, the confidence factor D_ε, the minimum
// round count implied by them, and the asymptotic error-rate components.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>

#include "fedrep/error.hpp"

namespace fedrep::theory {

/// Constant from the Berry–Esseen step of the bound.
inline constexpr double kBerryEsseen = 0.4748;

struct TheoryInputs {
  double clients = 10;             // M
  double params = 100;             // N
  double attacker_fraction = 0.0;  // p
  double range = 2.0;              // ϖ
  double confidence = 0.1;         // δ
  double kappa = 0.3;
  double eta = 0.7;
  double prior = 0.5;         // a
  double prior_weight = 2.0;  // W
  double lipschitz = 1.0;     // L
  double strong_convexity = 1.0;  // μ, carried but unused by the bound
  double learning_rate = 0.01;    // r
  double dimension = 100;         // d
  double max_samples = 100;       // Q̂
  double grad_bound = 1.0;        // 𝒢_w
  double variance_bound = 1.0;    // 𝒱_w
  double residual_sup = 1.0;      // E
  double radius = 1.0;            // υ
  double quantile = 1.0;          // Φ(1−ε)
  double initial_distance = 1000.0;  // ‖w⁰ − w*‖

  void validate() const {
    require(clients >= 2 && params >= 1, "theory: need clients >= 2 and params >= 1");
    require(attacker_fraction >= 0.0 && attacker_fraction < 0.5, "theory: attacker fraction must lie in [0, 0.5)");
    require(range > 0 && confidence > 0 && prior_weight > 0 && prior >= 0 && prior <= 1,
            "theory: range, confidence and prior weight must be positive, prior in [0, 1]");
    require(kappa > 0 && eta > 0 && std::abs(kappa + eta - 1.0) < 1e-12, "theory: kappa + eta must equal 1");
    require(lipschitz > 0 && learning_rate > 0 && lipschitz * learning_rate < 1.0,
            "theory: need L > 0, r > 0 and L*r < 1");
    require(dimension > 0 && max_samples > 0 && radius > 0 && initial_distance > 0,
            "theory: dimension, max samples, radius and initial distance must be positive");
    require(grad_bound >= 0 && variance_bound >= 0 && residual_sup >= 0, "theory: bounds must be non-negative");
  }
};

inline double d_epsilon(double quantile) {
  return std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * quantile * quantile);
}

inline double delta1(const TheoryInputs& in) {
  const double m = in.clients, n = in.params, w = in.prior_weight, a = in.prior;
  const double numer = m * (in.range * (m - 1.0) + 2.0 * in.residual_sup / (std::sqrt(m) * in.confidence));
  const double denom =
      w * a * (m - 1.0) * (in.kappa * n + w) / ((in.eta * n + w) * (in.kappa * n + w * a)) + 1.0;
  return numer / denom;
}

inline double delta2(const TheoryInputs& in) {
  const double m = in.clients, q = in.max_samples, p = in.attacker_fraction;
  const double spread = std::sqrt(in.dimension * std::log(1.0 + q * m * in.lipschitz * in.radius) / (m * (1.0 - p)));
  return 2.0 * std::numbers::sqrt2 / (m * q) +
         std::sqrt(2.0 / q) * d_epsilon(in.quantile) * in.variance_bound *
             (spread + kBerryEsseen * in.grad_bound / std::sqrt(q) + p);
}

/// ⌈(1/(Lr))·log(L‖w⁰−w*‖ / (√N Δ₁ + Δ₂))⌉, never below zero.
inline long long min_iterations(const TheoryInputs& in, double d1, double d2) {
  const double floor_term = std::sqrt(in.params) * d1 + d2;
  require(floor_term > 0.0, "theory: sqrt(N)*delta1 + delta2 must be positive");
  const double lr = in.lipschitz * in.learning_rate;
  require(lr > 0.0 && lr < 1.0, "theory: L*r must lie in (0, 1)");
  const double t = std::log(in.lipschitz * in.initial_distance / floor_term) / lr;
  return std::max(0LL, static_cast<long long>(std::ceil(t)));
}

/// The six terms of the asymptotic error rate.
struct ErrorRate {
  double range_term;       // ϖ / (aκW√N)
  double reward_term;      // 1 / (κ√N)
  double confidence_term;  // 1 / (√M δ)
  double sample_term;      // 1 / Q̂
  double attacker_term;    // p / √Q̂
  double pooled_term;      // 1 / √(Q̂M)

  double total() const noexcept {
    return range_term + reward_term + confidence_term + sample_term + attacker_term + pooled_term;
  }
};

inline ErrorRate error_rate(const TheoryInputs& in) {
  const double sqrt_n = std::sqrt(in.params);
  return {in.range / (in.prior * in.kappa * in.prior_weight * sqrt_n),
          1.0 / (in.kappa * sqrt_n),
          1.0 / (std::sqrt(in.clients) * in.confidence),
          1.0 / in.max_samples,
          in.attacker_fraction / std::sqrt(in.max_samples),
          1.0 / std::sqrt(in.max_samples * in.clients)};
}

}  // namespace fedrep::theory
