#pragma once

// Server aggregation rules over an M × N matrix of client parameter vectors.

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "fedrep/error.hpp"
#include "fedrep/linalg.hpp"
#include "fedrep/reputation.hpp"
#include "fedrep/robust_stats.hpp"

namespace fedrep {

/// One row per client; sample_counts[i] is Q_i.
struct UpdateMatrix {
  Matrix rows;
  std::vector<std::size_t> sample_counts;

  UpdateMatrix() = default;
  UpdateMatrix(std::size_t clients, std::size_t params)
      : rows(clients, params), sample_counts(clients, 1) {}

  /// Builds from per-client vectors with unit sample counts.
  static UpdateMatrix from_rows(std::span<const std::vector<double>> vectors) {
    require(!vectors.empty(), "updates: no client rows");
    UpdateMatrix u(vectors.size(), vectors.front().size());
    for (std::size_t i = 0; i < vectors.size(); ++i) u.set_row(i, vectors[i]);
    return u;
  }

  std::size_t clients() const noexcept { return rows.rows(); }
  std::size_t params() const noexcept { return rows.cols(); }

  void set_row(std::size_t i, std::span<const double> v) {
    require(v.size() == params(), "updates: row " + std::to_string(i) + " has length " + std::to_string(v.size()) +
                                      ", expected " + std::to_string(params()));
    std::ranges::copy(v, rows.row(i).begin());
  }

  void column(std::size_t n, std::span<double> out) const {
    for (std::size_t i = 0; i < clients(); ++i) out[i] = rows(i, n);
  }

  void validate() const {
    require(clients() >= 1, "updates: at least one client required");
    require(sample_counts.size() == clients(), "updates: sample count per client required");
    require(std::ranges::all_of(sample_counts, [](std::size_t q) { return q >= 1; }),
            "updates: every client needs at least one sample");
  }
};

/// Sample-count weighted mean Σ (Q_i/Q)·w_i.
inline std::vector<double> fedavg(const UpdateMatrix& u) {
  u.validate();
  const double total = static_cast<double>(std::accumulate(u.sample_counts.begin(), u.sample_counts.end(), std::size_t{0}));
  std::vector<double> out(u.params(), 0.0);
  for (std::size_t i = 0; i < u.clients(); ++i) {
    const double w = static_cast<double>(u.sample_counts[i]) / total;
    const auto row = u.rows.row(i);
    for (std::size_t n = 0; n < out.size(); ++n) out[n] += w * row[n];
  }
  return out;
}

inline std::vector<double> coord_median(const UpdateMatrix& u) {
  u.validate();
  std::vector<double> out(u.params());
  std::vector<double> col(u.clients());
  for (std::size_t n = 0; n < out.size(); ++n) {
    u.column(n, col);
    out[n] = median_inplace(col);
  }
  return out;
}

/// Per coordinate, drops the β largest and β smallest values and averages the rest.
inline std::vector<double> trimmed_mean(const UpdateMatrix& u, std::size_t beta) {
  u.validate();
  require(2 * beta < u.clients(), "trimmed mean: need 2*beta < clients (beta=" + std::to_string(beta) +
                                      ", clients=" + std::to_string(u.clients()) + ")");
  std::vector<double> out(u.params());
  std::vector<double> col(u.clients());
  const auto keep = static_cast<double>(u.clients() - 2 * beta);
  for (std::size_t n = 0; n < out.size(); ++n) {
    u.column(n, col);
    std::ranges::sort(col);
    out[n] = std::accumulate(col.begin() + static_cast<std::ptrdiff_t>(beta),
                             col.end() - static_cast<std::ptrdiff_t>(beta), 0.0) /
             keep;
  }
  return out;
}

/// Per coordinate, the confidence-score weighted mean of the raw column.
/// A simplified residual-based re-weighting baseline: no rescale, no
/// rectification, no reputation.
inline std::vector<double> residual_reweight(const UpdateMatrix& u, const RobustConfig& cfg) {
  u.validate();
  require(u.clients() >= 3, "residual reweight: at least three clients required");
  std::vector<double> out(u.params());
  std::vector<double> col(u.clients());
  for (std::size_t n = 0; n < out.size(); ++n) {
    u.column(n, col);
    const auto line = repeated_median_line(col);
    const auto s = confidence_scores(col, line, cfg);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < col.size(); ++i) {
      num += s[i] * col[i];
      den += s[i];
    }
    out[n] = num / den;
  }
  return out;
}

/// Per-client outcome of one reputation-aggregation round.
struct ClientRoundSummary {
  std::size_t positives = 0;
  std::size_t negatives = 0;
  double reputation = 0.0;  // R_i^t
  double windowed = 0.0;    // R̃_i^t
  double normalized = 0.0;  // R̄_i^t
  double weight = 0.0;      // R̄_i / Σ R̄

  friend bool operator==(const ClientRoundSummary&, const ClientRoundSummary&) = default;
};

struct ReputationRound {
  std::vector<double> global;
  std::vector<ClientRoundSummary> clients;
};

/// Reputation-weighted aggregation. Every coordinate column is rescaled,
/// fitted, scored and rectified; each rejected value counts as one negative
/// observation for its client and each kept value as one positive. The
/// client states absorb round t, and the global vector is the R̄-weighted
/// mean of the rectified values.
inline ReputationRound reputation_aggregate(const UpdateMatrix& u, std::vector<ClientReputationState>& states,
                                            const RobustConfig& robust, const ReputationConfig& rep,
                                            std::size_t t) {
  u.validate();
  robust.validate();
  rep.validate();
  const std::size_t m = u.clients();
  const std::size_t n_params = u.params();
  require(m >= 3, "reputation aggregate: at least three clients required");
  require(states.size() == m, "reputation aggregate: one state per client required");

  Matrix rectified(m, n_params);
  std::vector<std::size_t> negatives(m, 0);
  std::vector<double> col(m);
  for (std::size_t n = 0; n < n_params; ++n) {
    u.column(n, col);
    const auto verdict = inspect_column(col, robust);
    for (std::size_t i = 0; i < m; ++i) {
      rectified(i, n) = verdict.rectified.values[i];
      if (verdict.rectified.flags[i] == Observation::kNegative) ++negatives[i];
    }
  }

  ReputationRound out;
  out.clients.resize(m);
  std::vector<double> windowed(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto& rec = states[i].record(t, n_params - negatives[i], negatives[i], rep);
    out.clients[i].positives = rec.positives;
    out.clients[i].negatives = rec.negatives;
    out.clients[i].reputation = rec.reputation;
    out.clients[i].windowed = windowed[i] = states[i].windowed();
  }
  const auto normalized = minmax_normalize(windowed);
  const double total = std::accumulate(normalized.begin(), normalized.end(), 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const double w = normalized[i] / total;
    states[i].set_weights(normalized[i], w);
    out.clients[i].normalized = normalized[i];
    out.clients[i].weight = w;
  }

  out.global.assign(n_params, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const double w = out.clients[i].weight;
    if (w == 0.0) continue;
    const auto row = rectified.row(i);
    for (std::size_t n = 0; n < n_params; ++n) out.global[n] += w * row[n];
  }
  return out;
}

struct FedAvgRule {};
struct MedianRule {};
struct TrimmedMeanRule {
  std::size_t beta = 1;
};
struct ResidualRule {
  RobustConfig robust;
};
struct ReputationRule {
  RobustConfig robust;
  ReputationConfig reputation;
};

using AggregatorKind = std::variant<FedAvgRule, MedianRule, TrimmedMeanRule, ResidualRule, ReputationRule>;

inline std::string aggregator_name(const AggregatorKind& kind) {
  struct Namer {
    std::string operator()(const FedAvgRule&) const { return "fedavg"; }
    std::string operator()(const MedianRule&) const { return "median"; }
    std::string operator()(const TrimmedMeanRule&) const { return "trimmed_mean"; }
    std::string operator()(const ResidualRule&) const { return "residual"; }
    std::string operator()(const ReputationRule&) const { return "reputation"; }
  };
  return std::visit(Namer{}, kind);
}

/// Stateful front end over every rule. Only the reputation rule keeps
/// per-client state between rounds.
class Aggregator {
 public:
  Aggregator(AggregatorKind kind, std::size_t clients) : kind_(std::move(kind)), states_(clients) {}

  const AggregatorKind& kind() const noexcept { return kind_; }
  std::span<const ClientReputationState> states() const noexcept { return states_; }
  bool tracks_reputation() const noexcept { return std::holds_alternative<ReputationRule>(kind_); }

  /// Aggregates round t. `summary` receives per-client reputation data when
  /// the rule tracks it and is cleared otherwise.
  std::vector<double> aggregate(const UpdateMatrix& u, std::size_t t, std::vector<ClientRoundSummary>& summary) {
    summary.clear();
    if (const auto* r = std::get_if<ReputationRule>(&kind_)) {
      auto round = reputation_aggregate(u, states_, r->robust, r->reputation, t);
      summary = std::move(round.clients);
      return std::move(round.global);
    }
    if (std::holds_alternative<FedAvgRule>(kind_)) return fedavg(u);
    if (std::holds_alternative<MedianRule>(kind_)) return coord_median(u);
    if (const auto* tm = std::get_if<TrimmedMeanRule>(&kind_)) return trimmed_mean(u, tm->beta);
    return residual_reweight(u, std::get<ResidualRule>(kind_).robust);
  }

 private:
  AggregatorKind kind_;
  std::vector<ClientReputationState> states_;
};

}  // namespace fedrep
