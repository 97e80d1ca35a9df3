#pragma once

// Subjective-logic client reputation. Per round, a client's accepted and
// rejected parameter counts (P, N) become an opinion (b, d, u) and a
// Beta-expectation reputation R; a sliding window with exponential decay
// smooths R over recent rounds, and min-max normalization turns the
// smoothed scores into aggregation weights.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fedrep/error.hpp"

namespace fedrep {

struct ReputationConfig {
  double positive_weight = 0.3;  // κ
  double negative_weight = 0.7;  // η = 1 − κ
  double prior = 0.5;            // a
  double prior_weight = 2.0;     // W
  double decay = 0.5;            // c
  std::size_t window = 10;       // s

  /// Sets κ and derives η so that κ + η = 1.
  void set_positive_weight(double kappa) {
    positive_weight = kappa;
    negative_weight = 1.0 - kappa;
  }

  void validate() const {
    require(positive_weight > 0.0 && positive_weight < 1.0, "reputation: kappa must lie in (0, 1)");
    require(std::abs(positive_weight + negative_weight - 1.0) < 1e-12, "reputation: kappa + eta must equal 1");
    require(prior >= 0.0 && prior <= 1.0, "reputation: prior must lie in [0, 1]");
    require(prior_weight > 0.0, "reputation: prior weight must be positive");
    require(decay > 0.0, "reputation: decay must be positive");
    require(window >= 1, "reputation: window must be at least 1");
  }
};

struct Opinion {
  double belief = 0.0;
  double disbelief = 0.0;
  double uncertainty = 1.0;

  /// Expected value b + a·u.
  double expectation(double prior) const noexcept { return belief + prior * uncertainty; }
};

inline Opinion opinion(double positives, double negatives, const ReputationConfig& cfg) {
  require(positives >= 0.0 && negatives >= 0.0, "opinion: observation counts must be non-negative");
  const double kp = cfg.positive_weight * positives;
  const double en = cfg.negative_weight * negatives;
  const double total = kp + en + cfg.prior_weight;
  return {kp / total, en / total, cfg.prior_weight / total};
}

/// Beta expectation (κP + Wa) / (κP + ηN + W).
inline double round_reputation(double positives, double negatives, const ReputationConfig& cfg) {
  require(positives >= 0.0 && negatives >= 0.0, "reputation: observation counts must be non-negative");
  const double kp = cfg.positive_weight * positives;
  return (kp + cfg.prior_weight * cfg.prior) / (kp + cfg.negative_weight * negatives + cfg.prior_weight);
}

struct ReputationRecord {
  std::size_t round = 0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  double reputation = 0.0;

  friend bool operator==(const ReputationRecord&, const ReputationRecord&) = default;
};

/// Time-decayed mean of the per-round reputations whose round lies in
/// [max(t − s, 0), t]; weights exp(−c(t − j)).
inline double windowed_reputation(std::span<const ReputationRecord> history, const ReputationConfig& cfg,
                                  std::size_t t) {
  const std::size_t first = t > cfg.window ? t - cfg.window : 0;
  double num = 0.0, den = 0.0;
  for (const auto& rec : history) {
    if (rec.round < first || rec.round > t) continue;
    const double theta = std::exp(-cfg.decay * static_cast<double>(t - rec.round));
    num += theta * rec.reputation;
    den += theta;
  }
  require(den > 0.0, "windowed reputation: no history inside the window ending at round " + std::to_string(t));
  return num / den;
}

/// (v − min)/(max − min); all-equal input maps to 1/M everywhere.
inline std::vector<double> minmax_normalize(std::span<const double> values) {
  require(!values.empty(), "minmax: empty input");
  const auto [lo, hi] = std::ranges::minmax(values);
  std::vector<double> out(values.size());
  if (!(hi > lo)) {
    std::ranges::fill(out, 1.0 / static_cast<double>(values.size()));
    return out;
  }
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - lo) / (hi - lo);
  return out;
}

/// Reputation bookkeeping for one client.
class ClientReputationState {
 public:
  std::span<const ReputationRecord> history() const noexcept { return history_; }
  double windowed() const noexcept { return windowed_; }
  double normalized() const noexcept { return normalized_; }
  double weight() const noexcept { return weight_; }

  /// Appends round t's observations and refreshes the windowed score.
  /// Records older than the window are dropped.
  const ReputationRecord& record(std::size_t t, std::size_t positives, std::size_t negatives,
                                 const ReputationConfig& cfg) {
    require(history_.empty() || history_.back().round < t, "reputation: rounds must be recorded in order");
    history_.push_back({t, positives, negatives, round_reputation(static_cast<double>(positives),
                                                                  static_cast<double>(negatives), cfg)});
    const std::size_t first = t > cfg.window ? t - cfg.window : 0;
    while (!history_.empty() && history_.front().round < first) history_.erase(history_.begin());
    windowed_ = windowed_reputation(history_, cfg, t);
    return history_.back();
  }

  void set_weights(double normalized, double weight) noexcept {
    normalized_ = normalized;
    weight_ = weight;
  }

  friend bool operator==(const ClientReputationState&, const ClientReputationState&) = default;

 private:
  std::vector<ReputationRecord> history_;
  double windowed_ = 0.0;
  double normalized_ = 0.0;
  double weight_ = 0.0;
};

}  // namespace fedrep
