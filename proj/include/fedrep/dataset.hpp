#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fedrep/error.hpp"

namespace fedrep {

/// Labeled dense feature vectors, stored row-major.
struct Dataset {
  std::size_t num_features = 0;
  std::size_t num_classes = 0;
  std::vector<double> features;
  std::vector<std::size_t> labels;

  Dataset() = default;
  Dataset(std::size_t features_per_row, std::size_t classes)
      : num_features(features_per_row), num_classes(classes) {}

  std::size_t size() const noexcept { return labels.size(); }
  bool empty() const noexcept { return labels.empty(); }

  std::span<const double> row(std::size_t i) const noexcept {
    return {features.data() + i * num_features, num_features};
  }
  std::span<double> row(std::size_t i) noexcept { return {features.data() + i * num_features, num_features}; }

  void push_back(std::span<const double> x, std::size_t label) {
    require(x.size() == num_features, "dataset: row width mismatch");
    require(label < num_classes, "dataset: label out of range");
    features.insert(features.end(), x.begin(), x.end());
    labels.push_back(label);
  }

  /// Copy of the rows at the given indices, in that order.
  Dataset subset(std::span<const std::size_t> indices) const {
    Dataset out(num_features, num_classes);
    out.features.reserve(indices.size() * num_features);
    out.labels.reserve(indices.size());
    for (auto i : indices) out.push_back(row(i), labels[i]);
    return out;
  }

  std::vector<std::size_t> class_counts() const {
    std::vector<std::size_t> counts(num_classes, 0);
    for (auto l : labels) ++counts[l];
    return counts;
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

}  // namespace fedrep
