#pragma once

// Synthetic Gaussian-cluster data, Dirichlet non-IID client partitioning,
// stratified train/test splits and CSV ingestion.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "fedrep/dataset.hpp"
#include "fedrep/error.hpp"
#include "fedrep/rng.hpp"

namespace fedrep {

struct DataSpec {
  std::size_t classes = 2;
  std::size_t features = 100;
  std::size_t samples_per_class = 500;
  double separation = 6.0;
  double noise = 1.0;
  std::uint64_t seed = 1;

  void validate() const {
    require(classes >= 2, "data: at least two classes required");
    require(features >= 1, "data: at least one feature required");
    require(features >= classes, "data: class means sit on distinct axes, so features must be >= classes");
    require(samples_per_class >= 1, "data: samples_per_class must be at least 1");
    require(noise > 0.0, "data: noise must be positive");
  }
};

/// One isotropic Gaussian cluster per class; class k is centred at
/// separation·e_k. Rows are emitted class by class.
inline Dataset synth_dataset(const DataSpec& spec) {
  spec.validate();
  Dataset out(spec.features, spec.classes);
  out.features.reserve(spec.classes * spec.samples_per_class * spec.features);
  Rng rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, spec.noise);
  std::vector<double> x(spec.features);
  for (std::size_t k = 0; k < spec.classes; ++k) {
    for (std::size_t s = 0; s < spec.samples_per_class; ++s) {
      for (auto& v : x) v = gauss(rng);
      x[k] += spec.separation;
      out.push_back(x, k);
    }
  }
  return out;
}

/// Converts real shares of `total` into integer counts summing to `total`
/// by largest remainder; ties go to the lower index.
inline std::vector<std::size_t> largest_remainder(std::span<const double> fractions, std::size_t total) {
  std::vector<std::size_t> counts(fractions.size(), 0);
  if (fractions.empty()) return counts;
  std::vector<double> remainders(fractions.size());
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    const double exact = fractions[i] * static_cast<double>(total);
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    remainders[i] = exact - static_cast<double>(counts[i]);
    assigned += counts[i];
  }
  // Floating error can push the floor sum above total by a unit or so.
  while (assigned > total) {
    const auto it = std::ranges::max_element(counts);
    --*it;
    --assigned;
  }
  std::vector<std::size_t> order(fractions.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::ranges::stable_sort(order, [&](std::size_t a, std::size_t b) { return remainders[a] > remainders[b]; });
  for (std::size_t j = 0; assigned < total; j = (j + 1) % order.size(), ++assigned) ++counts[order[j]];
  return counts;
}

/// Draws Dir(concentration · 1_m) from normalized Gamma(concentration, 1) draws.
inline std::vector<double> sample_dirichlet(std::size_t m, double concentration, Rng& rng) {
  std::gamma_distribution<double> gamma(concentration, 1.0);
  std::vector<double> u(m);
  double total = 0.0;
  for (auto& v : u) {
    v = gamma(rng);
    total += v;
  }
  if (!(total > 0.0)) {
    // Every draw underflowed (tiny concentration): fall back to uniform.
    std::ranges::fill(u, 1.0 / static_cast<double>(m));
    return u;
  }
  for (auto& v : u) v /= total;
  return u;
}

struct ClientPartition {
  std::vector<Dataset> shards;
  /// origin[i] lists the source-row indices placed in shards[i].
  std::vector<std::vector<std::size_t>> origin;

  bool has_empty_shard() const {
    return std::ranges::any_of(shards, [](const Dataset& d) { return d.empty(); });
  }
};

/// Per class k, draws u_k ~ Dir(iota·1_M) and hands client i a u_{k,i}
/// share of the (shuffled) class-k rows.
inline ClientPartition dirichlet_partition(const Dataset& data, std::size_t clients, double iota,
                                           std::uint64_t seed) {
  require(clients >= 1, "partition: at least one client required");
  require(iota > 0.0, "partition: concentration must be positive");
  Rng rng(seed);
  ClientPartition part;
  part.origin.resize(clients);
  std::vector<std::vector<std::size_t>> by_class(data.num_classes);
  for (std::size_t i = 0; i < data.size(); ++i) by_class[data.labels[i]].push_back(i);
  for (auto& rows : by_class) {
    const auto share = sample_dirichlet(clients, iota, rng);
    shuffle(std::span<std::size_t>(rows), rng);
    const auto counts = largest_remainder(share, rows.size());
    std::size_t pos = 0;
    for (std::size_t c = 0; c < clients; ++c) {
      part.origin[c].insert(part.origin[c].end(), rows.begin() + static_cast<std::ptrdiff_t>(pos),
                            rows.begin() + static_cast<std::ptrdiff_t>(pos + counts[c]));
      pos += counts[c];
    }
  }
  for (auto& idx : part.origin) {
    std::ranges::sort(idx);
    part.shards.push_back(data.subset(idx));
  }
  return part;
}

struct TrainTestSplit {
  Dataset train;
  Dataset test;
};

/// Class-stratified holdout: round(test_fraction · n_k) rows of each class
/// go to the test set.
inline TrainTestSplit stratified_split(const Dataset& data, double test_fraction, std::uint64_t seed) {
  require(test_fraction > 0.0 && test_fraction < 1.0, "split: test fraction must lie in (0, 1)");
  Rng rng(seed);
  std::vector<std::vector<std::size_t>> by_class(data.num_classes);
  for (std::size_t i = 0; i < data.size(); ++i) by_class[data.labels[i]].push_back(i);
  std::vector<std::size_t> train_idx, test_idx;
  for (auto& rows : by_class) {
    shuffle(std::span<std::size_t>(rows), rng);
    const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(rows.size())));
    test_idx.insert(test_idx.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_test));
    train_idx.insert(train_idx.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_test), rows.end());
  }
  std::ranges::sort(train_idx);
  std::ranges::sort(test_idx);
  return {data.subset(train_idx), data.subset(test_idx)};
}

// ---------------------------------------------------------------------------
// CSV: header "label,f0,...,f{F-1}", one sample per line.

inline void write_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  require(static_cast<bool>(out), "csv: cannot open " + path.string() + " for writing");
  out << "label";
  for (std::size_t f = 0; f < data.num_features; ++f) out << ",f" << f;
  out << '\n';
  out << std::setprecision(17);
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << data.labels[i];
    for (double v : data.row(i)) out << ',' << v;
    out << '\n';
  }
  require(static_cast<bool>(out), "csv: write failed for " + path.string());
}

namespace detail {

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline std::optional<std::size_t> parse_index(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace detail

/// Reads a featurized CSV. When `classes` is given, labels must be below
/// it; otherwise the class count is max(label) + 1 (at least 2). Errors
/// name the offending line (the header is line 1).
inline Dataset load_csv(const std::filesystem::path& path, std::optional<std::size_t> classes = std::nullopt) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "csv: cannot open " + path.string());
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), "csv: " + path.string() + " has no header row");
  const auto header = detail::split_commas(line);
  require(!header.empty() && detail::trim(header[0]) == "label",
          "csv: header must start with 'label' in " + path.string());
  const std::size_t width = header.size() - 1;
  require(width >= 1, "csv: header declares no feature columns");

  Dataset out(width, classes.value_or(0));
  std::size_t max_label = 0;
  std::vector<double> row(width);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_commas(line);
    const auto where = " at line " + std::to_string(line_no) + " of " + path.string();
    require(cells.size() == width + 1, "csv: expected " + std::to_string(width) + " features, found " +
                                           std::to_string(cells.size() - 1) + where);
    const auto label = detail::parse_index(cells[0]);
    require(label.has_value(), "csv: label is not a non-negative integer" + where);
    if (classes) require(*label < *classes, "csv: label " + std::to_string(*label) + " >= class count" + where);
    for (std::size_t f = 0; f < width; ++f) {
      const auto v = detail::parse_double(cells[f + 1]);
      require(v.has_value(), "csv: non-numeric feature in column " + std::to_string(f + 1) + where);
      row[f] = *v;
    }
    out.features.insert(out.features.end(), row.begin(), row.end());
    out.labels.push_back(*label);
    max_label = std::max(max_label, *label);
  }
  if (!classes) out.num_classes = std::max<std::size_t>(2, max_label + 1);
  return out;
}

}  // namespace fedrep
