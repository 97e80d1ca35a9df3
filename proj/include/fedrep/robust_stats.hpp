#pragma once

// Server-side detection of abnormal parameter values. Each function works on
// one parameter column: the n-th parameter as reported by every client.
//
//   rescale               bound the column range by repeated σ-steps
//   repeated_median_line  Siegel's repeated-median fit of value against rank
//   confidence_scores     IRLS-style weight from leverage-adjusted residuals
//   rectify               replace low-confidence values by the column median

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <tuple>
#include <utility>
#include <vector>

#include "fedrep/error.hpp"

namespace fedrep {

struct RobustConfig {
  double range_threshold = 2.0;       // ϖ
  double confidence_threshold = 0.1;  // δ
  double clamp = 2.0;                 // λ in Ψ
  double residual_epsilon = 1e-12;
  std::size_t max_rescale_iterations = 100;

  void validate() const {
    require(range_threshold > 0.0, "robust: range threshold must be positive");
    require(confidence_threshold > 0.0 && confidence_threshold < 1.0,
            "robust: confidence threshold must lie in (0, 1)");
    require(clamp > 0.0, "robust: clamp parameter must be positive");
    require(residual_epsilon >= 0.0, "robust: residual epsilon must be non-negative");
  }
};

/// Median with the even-count midpoint convention. Reorders `values`.
inline double median_inplace(std::span<double> values) {
  require(!values.empty(), "median of empty range");
  const std::size_t n = values.size();
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(values.begin(), mid, values.end());
  const double upper = *mid;
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), mid);
  return 0.5 * (lower + upper);
}

inline double median(std::span<const double> values) {
  std::vector<double> copy(values.begin(), values.end());
  return median_inplace(copy);
}

/// Population standard deviation.
inline double population_stddev(std::span<const double> values) {
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / n);
}

struct RescaleResult {
  std::vector<double> values;
  std::size_t iterations = 0;
  bool clamped = false;  // iteration cap hit, clamp fallback applied
};

/// While max − min exceeds ϖ, pulls the current maximum down and the
/// current minimum up by the column's population σ. Extremes and σ are
/// re-evaluated every iteration; ties pick the lowest client index. On
/// hitting the iteration cap the column is clamped to median ± ϖ/2.
inline RescaleResult rescale_traced(std::span<const double> column, const RobustConfig& cfg) {
  require(column.size() >= 2, "rescale: at least two clients required");
  RescaleResult out{std::vector<double>(column.begin(), column.end()), 0, false};
  auto& w = out.values;
  auto extremes = [&] {
    std::size_t lo = 0, hi = 0;
    for (std::size_t i = 1; i < w.size(); ++i) {
      if (w[i] < w[lo]) lo = i;
      if (w[i] > w[hi]) hi = i;
    }
    return std::pair{lo, hi};
  };
  auto [lo, hi] = extremes();
  while (w[hi] - w[lo] > cfg.range_threshold) {
    if (out.iterations == cfg.max_rescale_iterations) {
      const double mid = median(w);
      const double half = 0.5 * cfg.range_threshold;
      for (auto& v : w) v = std::clamp(v, mid - half, mid + half);
      out.clamped = true;
      break;
    }
    const double sigma = population_stddev(w);
    w[hi] -= sigma;
    w[lo] += sigma;
    ++out.iterations;
    std::tie(lo, hi) = extremes();
  }
  return out;
}

inline std::vector<double> rescale(std::span<const double> column, const RobustConfig& cfg) {
  return rescale_traced(column, cfg).values;
}

/// 1-based ranks in ascending value order; equal values are ranked by
/// client index.
inline std::vector<double> value_ranks(std::span<const double> column) {
  std::vector<std::size_t> order(column.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::ranges::stable_sort(order, [&](std::size_t a, std::size_t b) { return column[a] < column[b]; });
  std::vector<double> ranks(column.size());
  for (std::size_t r = 0; r < order.size(); ++r) ranks[order[r]] = static_cast<double>(r + 1);
  return ranks;
}

struct RegressionLine {
  double slope = 0.0;      // B̂
  double intercept = 0.0;  // Â
  std::vector<double> ranks;
};

/// Siegel's repeated-median line through (x_i, y_i):
/// slope = med_i med_{j≠i} (y_j − y_i)/(x_j − x_i), intercept = med_i (y_i − slope·x_i).
/// The x_i must be distinct.
inline std::pair<double, double> repeated_median_fit(std::span<const double> x, std::span<const double> y) {
  const std::size_t m = y.size();
  require(m >= 2, "repeated median: at least two points required");
  require(x.size() == m, "repeated median: design and response lengths differ");
  std::vector<double> inner(m - 1);
  std::vector<double> outer(m);
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t k = 0;
    for (std::size_t j = 0; j < m; ++j) {
      if (j == i) continue;
      require(x[j] != x[i], "repeated median: duplicate design point");
      inner[k++] = (y[j] - y[i]) / (x[j] - x[i]);
    }
    outer[i] = median_inplace(inner);
  }
  const double slope = median_inplace(outer);
  for (std::size_t i = 0; i < m; ++i) outer[i] = y[i] - slope * x[i];
  return {slope, median_inplace(outer)};
}

/// Repeated-median fit of the column against its own value ranks.
inline RegressionLine repeated_median_line(std::span<const double> column) {
  require(column.size() >= 2, "repeated median: at least two clients required");
  RegressionLine line;
  line.ranks = value_ranks(column);
  std::tie(line.slope, line.intercept) = repeated_median_fit(line.ranks, column);
  return line;
}

/// Diagonal of X(XᵀX)⁻¹Xᵀ for the design rows (1, x_i).
inline std::vector<double> hat_diagonal(std::span<const double> x) {
  require(x.size() >= 2, "hat matrix: at least two design rows required");
  double s0 = static_cast<double>(x.size()), s1 = 0.0, s2 = 0.0;
  for (double v : x) {
    s1 += v;
    s2 += v * v;
  }
  const double det = s0 * s2 - s1 * s1;
  require(det > 0.0, "hat matrix: singular design");
  // (XᵀX)⁻¹ = [s2 −s1; −s1 s0] / det
  std::vector<double> h(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) h[i] = (s2 - 2.0 * s1 * x[i] + s0 * x[i] * x[i]) / det;
  return h;
}

/// Normalized residuals e_i = 25(M−1)·res_i / (37(M+4)·max(med|res|, ε)).
/// The floor keeps an exactly agreeing majority from hiding a point that
/// lies off their common line; all-zero residuals still normalize to zero.
/// Returns an empty vector only when the floored scale is zero (ε = 0).
inline std::vector<double> normalized_residuals(std::span<const double> column, const RegressionLine& line,
                                                const RobustConfig& cfg) {
  const std::size_t m = column.size();
  require(line.ranks.size() == m, "residuals: rank vector length mismatch");
  std::vector<double> res(m), abs_res(m);
  for (std::size_t i = 0; i < m; ++i) {
    res[i] = column[i] - line.slope * line.ranks[i] - line.intercept;
    abs_res[i] = std::abs(res[i]);
  }
  const double scale = std::max(median_inplace(abs_res), cfg.residual_epsilon);
  if (scale == 0.0) return {};
  const double md = static_cast<double>(m);
  const double factor = 25.0 * (md - 1.0) / (37.0 * (md + 4.0) * scale);
  for (auto& r : res) r *= factor;
  return res;
}

/// s_i = (√(1−h_i)/e_i)·Ψ(e_i/√(1−h_i)), Ψ clamping to ±λ√(2/M).
/// Scores lie in (0, 1]; a perfect fit yields all ones.
inline std::vector<double> confidence_scores(std::span<const double> column, const RegressionLine& line,
                                             const RobustConfig& cfg) {
  const std::size_t m = column.size();
  require(m >= 3, "confidence scores: at least three clients required");
  std::vector<double> scores(m, 1.0);
  const auto e = normalized_residuals(column, line, cfg);
  if (e.empty()) return scores;
  const auto h = hat_diagonal(line.ranks);
  const double bound = cfg.clamp * std::sqrt(2.0 / static_cast<double>(m));
  for (std::size_t i = 0; i < m; ++i) {
    const double root = std::sqrt(std::max(0.0, 1.0 - h[i]));
    const double t = e[i] / root;
    // Inside the clamp Ψ is the identity and the ratio is exactly 1.
    if (std::abs(t) > bound) scores[i] = bound / std::abs(t);
  }
  return scores;
}

enum class Observation : unsigned char { kPositive, kNegative };

struct Rectified {
  std::vector<double> values;
  std::vector<Observation> flags;
};

/// Keeps w_i when s_i > δ, otherwise substitutes the column median.
inline Rectified rectify(std::span<const double> column, std::span<const double> scores, double threshold) {
  require(column.size() == scores.size(), "rectify: score count does not match column");
  require(!column.empty(), "rectify: empty column");
  Rectified out{std::vector<double>(column.begin(), column.end()),
                std::vector<Observation>(column.size(), Observation::kPositive)};
  const double mid = median(column);
  for (std::size_t i = 0; i < column.size(); ++i) {
    if (scores[i] <= threshold) {
      out.values[i] = mid;
      out.flags[i] = Observation::kNegative;
    }
  }
  return out;
}

/// Result of running the whole detection pipeline over one column.
struct ColumnVerdict {
  Rectified rectified;
  std::vector<double> scores;
};

/// rescale → repeated-median line → confidence scores → rectify.
inline ColumnVerdict inspect_column(std::span<const double> column, const RobustConfig& cfg) {
  auto scaled = rescale(column, cfg);
  const auto line = repeated_median_line(scaled);
  auto scores = confidence_scores(scaled, line, cfg);
  auto rect = rectify(scaled, scores, cfg.confidence_threshold);
  return {std::move(rect), std::move(scores)};
}

}  // namespace fedrep
