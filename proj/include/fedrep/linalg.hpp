#pragma once

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

#include "fedrep/error.hpp"

namespace fedrep {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) noexcept {
    assert(r < rows_ && c < cols_);
    return data_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const noexcept {
    assert(r < rows_ && c < cols_);
    return data_[r * cols_ + c];
  }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

/// out = m * x + bias
inline void affine(const Matrix& m, std::span<const double> x, std::span<const double> bias,
                   std::span<double> out) {
  require(x.size() == m.cols() && bias.size() == m.rows() && out.size() == m.rows(),
          "affine: dimension mismatch");
  for (std::size_t r = 0; r < m.rows(); ++r) out[r] = dot(m.row(r), x) + bias[r];
}

/// out = mᵀ * y
inline void transpose_times(const Matrix& m, std::span<const double> y, std::span<double> out) {
  require(y.size() == m.rows() && out.size() == m.cols(), "transpose_times: dimension mismatch");
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double yr = y[r];
    if (yr == 0.0) continue;
    const auto row = m.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) out[c] += yr * row[c];
  }
}

/// m += scale * y xᵀ
inline void add_outer(Matrix& m, double scale, std::span<const double> y, std::span<const double> x) {
  require(y.size() == m.rows() && x.size() == m.cols(), "add_outer: dimension mismatch");
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double s = scale * y[r];
    if (s == 0.0) continue;
    auto row = m.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) row[c] += s * x[c];
  }
}

}  // namespace fedrep
