#pragma once

// Fully connected classifier: ReLU hidden layers, softmax output, NLL loss,
// analytic backpropagation and mini-batch SGD.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "fedrep/dataset.hpp"
#include "fedrep/error.hpp"
#include "fedrep/linalg.hpp"
#include "fedrep/rng.hpp"

namespace fedrep {

inline constexpr double kProbabilityFloor = 1e-12;

/// Layer widths of a classifier. An empty hidden list gives a single
/// linear layer (softmax regression).
struct Architecture {
  std::size_t inputs = 0;
  std::vector<std::size_t> hidden{64, 32};
  std::size_t classes = 2;

  std::vector<std::size_t> widths() const {
    std::vector<std::size_t> w{inputs};
    w.insert(w.end(), hidden.begin(), hidden.end());
    w.push_back(classes);
    return w;
  }

  std::size_t parameter_count() const {
    const auto w = widths();
    std::size_t n = 0;
    for (std::size_t k = 0; k + 1 < w.size(); ++k) n += w[k + 1] * (w[k] + 1);
    return n;
  }

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

struct Layer {
  Matrix weights;  // out × in
  std::vector<double> bias;

  friend bool operator==(const Layer&, const Layer&) = default;
};

/// Ordered layer parameters. The flattened order is, per layer, the
/// row-major weights followed by the bias.
class ModelParams {
 public:
  ModelParams() = default;

  /// Zero-valued parameters with the given shape.
  explicit ModelParams(const Architecture& arch) {
    const auto w = arch.widths();
    require(arch.inputs > 0 && arch.classes > 0, "model: inputs and classes must be positive");
    for (std::size_t k = 0; k + 1 < w.size(); ++k) {
      require(w[k + 1] > 0, "model: layer widths must be positive");
      layers_.push_back(Layer{Matrix(w[k + 1], w[k]), std::vector<double>(w[k + 1], 0.0)});
    }
  }

  std::span<const Layer> layers() const noexcept { return layers_; }
  std::span<Layer> layers() noexcept { return layers_; }

  std::size_t inputs() const noexcept { return layers_.empty() ? 0 : layers_.front().weights.cols(); }
  std::size_t classes() const noexcept { return layers_.empty() ? 0 : layers_.back().weights.rows(); }

  std::size_t size() const noexcept {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
    return n;
  }

  bool same_shape(const ModelParams& other) const noexcept {
    if (layers_.size() != other.layers_.size()) return false;
    for (std::size_t k = 0; k < layers_.size(); ++k) {
      if (layers_[k].weights.rows() != other.layers_[k].weights.rows() ||
          layers_[k].weights.cols() != other.layers_[k].weights.cols())
        return false;
    }
    return true;
  }

  std::vector<double> flatten() const {
    std::vector<double> out;
    out.reserve(size());
    for (const auto& l : layers_) {
      const auto w = l.weights.data();
      out.insert(out.end(), w.begin(), w.end());
      out.insert(out.end(), l.bias.begin(), l.bias.end());
    }
    return out;
  }

  /// Overwrites every parameter from a flat vector of length size().
  void assign(std::span<const double> flat) {
    require(flat.size() == size(), "model: flat vector length " + std::to_string(flat.size()) +
                                       " does not match parameter count " + std::to_string(size()));
    std::size_t pos = 0;
    for (auto& l : layers_) {
      auto w = l.weights.data();
      std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pos), w.size(), w.begin());
      pos += w.size();
      std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pos), l.bias.size(), l.bias.begin());
      pos += l.bias.size();
    }
  }

  static ModelParams unflatten(const Architecture& arch, std::span<const double> flat) {
    ModelParams p(arch);
    p.assign(flat);
    return p;
  }

  /// this += scale * other
  void axpy(double scale, const ModelParams& other) {
    require(same_shape(other), "model: shape mismatch");
    for (std::size_t k = 0; k < layers_.size(); ++k) {
      auto dst = layers_[k].weights.data();
      const auto src = other.layers_[k].weights.data();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += scale * src[i];
      for (std::size_t i = 0; i < layers_[k].bias.size(); ++i)
        layers_[k].bias[i] += scale * other.layers_[k].bias[i];
    }
  }

  void set_zero() {
    for (auto& l : layers_) {
      std::ranges::fill(l.weights.data(), 0.0);
      std::ranges::fill(l.bias, 0.0);
    }
  }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;

 private:
  std::vector<Layer> layers_;
};

/// Uniform(−1/√fan_in, 1/√fan_in) for weights and biases.
inline ModelParams init_params(const Architecture& arch, std::uint64_t seed) {
  ModelParams p(arch);
  Rng rng(seed);
  for (auto& l : p.layers()) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(l.weights.cols()));
    for (auto& w : l.weights.data()) w = bound * (2.0 * uniform_unit(rng) - 1.0);
    for (auto& b : l.bias) b = bound * (2.0 * uniform_unit(rng) - 1.0);
  }
  return p;
}

/// Numerically stable in-place softmax.
inline void softmax_inplace(std::span<double> logits) {
  const double mx = *std::ranges::max_element(logits);
  double total = 0.0;
  for (auto& v : logits) {
    v = std::exp(v - mx);
    total += v;
  }
  for (auto& v : logits) v /= total;
}

namespace detail {

// Per-layer activations of one forward pass. activations[0] is the input,
// activations.back() the output probabilities.
struct ForwardTrace {
  std::vector<std::vector<double>> activations;
};

inline void forward_into(const ModelParams& params, std::span<const double> x, ForwardTrace& trace) {
  const auto layers = params.layers();
  require(!layers.empty(), "forward: empty model");
  require(x.size() == params.inputs(), "forward: feature length " + std::to_string(x.size()) +
                                           " does not match model input " + std::to_string(params.inputs()));
  trace.activations.resize(layers.size() + 1);
  trace.activations[0].assign(x.begin(), x.end());
  for (std::size_t k = 0; k < layers.size(); ++k) {
    auto& out = trace.activations[k + 1];
    out.resize(layers[k].weights.rows());
    affine(layers[k].weights, trace.activations[k], layers[k].bias, out);
    if (k + 1 < layers.size()) {
      for (auto& v : out) v = std::max(v, 0.0);
    } else {
      softmax_inplace(out);
    }
  }
}

}  // namespace detail

/// Class probabilities for one feature vector.
inline std::vector<double> mlp_forward(const ModelParams& params, std::span<const double> features) {
  detail::ForwardTrace trace;
  detail::forward_into(params, features, trace);
  return std::move(trace.activations.back());
}

inline double nll_loss(std::span<const double> probs, std::size_t label) {
  require(label < probs.size(), "nll_loss: label out of range");
  return -std::log(std::max(probs[label], kProbabilityFloor));
}

/// Index of the largest probability; ties resolve to the lowest index.
inline std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

inline std::size_t predict(const ModelParams& params, std::span<const double> features) {
  return argmax(mlp_forward(params, features));
}

/// Reusable buffers for repeated gradient evaluations.
class GradientWorkspace {
 public:
  detail::ForwardTrace trace;
  std::vector<double> delta;
  std::vector<double> delta_prev;
};

/// Adds the summed NLL gradient over the selected rows into `grad` and
/// returns the summed loss.
inline double accumulate_gradient(const ModelParams& params, const Dataset& data,
                                  std::span<const std::size_t> rows, ModelParams& grad,
                                  GradientWorkspace& ws) {
  require(grad.same_shape(params), "gradient: shape mismatch");
  require(data.num_features == params.inputs(), "gradient: feature dimension mismatch");
  const auto layers = params.layers();
  auto glayers = grad.layers();
  double loss = 0.0;
  for (auto idx : rows) {
    const std::size_t label = data.labels[idx];
    require(label < params.classes(), "gradient: label out of range");
    detail::forward_into(params, data.row(idx), ws.trace);
    const auto& probs = ws.trace.activations.back();
    loss += nll_loss(probs, label);

    ws.delta.assign(probs.begin(), probs.end());
    ws.delta[label] -= 1.0;
    for (std::size_t k = layers.size(); k-- > 0;) {
      const auto& input = ws.trace.activations[k];
      add_outer(glayers[k].weights, 1.0, ws.delta, input);
      for (std::size_t r = 0; r < ws.delta.size(); ++r) glayers[k].bias[r] += ws.delta[r];
      if (k == 0) break;
      ws.delta_prev.resize(input.size());
      transpose_times(layers[k].weights, ws.delta, ws.delta_prev);
      for (std::size_t c = 0; c < input.size(); ++c)
        if (input[c] <= 0.0) ws.delta_prev[c] = 0.0;
      std::swap(ws.delta, ws.delta_prev);
    }
  }
  return loss;
}

/// Mean NLL gradient over a batch.
inline ModelParams gradient(const ModelParams& params, const Dataset& batch) {
  require(!batch.empty(), "gradient: empty batch");
  ModelParams grad = params;
  grad.set_zero();
  GradientWorkspace ws;
  std::vector<std::size_t> rows(batch.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  accumulate_gradient(params, batch, rows, grad, ws);
  ModelParams out = grad;
  out.set_zero();
  out.axpy(1.0 / static_cast<double>(batch.size()), grad);
  return out;
}

inline ModelParams sgd_step(const ModelParams& params, const ModelParams& grad, double learning_rate) {
  ModelParams out = params;
  out.axpy(-learning_rate, grad);
  return out;
}

inline double mean_loss(const ModelParams& params, const Dataset& data) {
  require(!data.empty(), "mean_loss: empty dataset");
  detail::ForwardTrace trace;
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    detail::forward_into(params, data.row(i), trace);
    total += nll_loss(trace.activations.back(), data.labels[i]);
  }
  return total / static_cast<double>(data.size());
}

struct TrainConfig {
  double learning_rate = 0.01;
  std::size_t local_epochs = 10;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;

  void validate() const {
    require(learning_rate > 0.0, "train: learning rate must be positive");
    require(batch_size >= 1, "train: batch size must be at least 1");
  }
};

/// Mini-batch SGD over `data` for cfg.local_epochs passes. Each epoch
/// visits the rows in a fresh seeded Fisher–Yates order; the final short
/// batch is kept.
inline ModelParams local_train(const ModelParams& start, const Dataset& data, const TrainConfig& cfg) {
  cfg.validate();
  if (cfg.local_epochs == 0) return start;
  require(!data.empty(), "local_train: no training data");
  ModelParams params = start;
  ModelParams grad = start;
  GradientWorkspace ws;
  Rng rng(cfg.seed);
  std::vector<std::size_t> order(data.size());
  for (std::size_t epoch = 0; epoch < cfg.local_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle(std::span<std::size_t>(order), rng);
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      const std::span<const std::size_t> rows(order.data() + begin, end - begin);
      grad.set_zero();
      accumulate_gradient(params, data, rows, grad, ws);
      params.axpy(-cfg.learning_rate / static_cast<double>(rows.size()), grad);
    }
  }
  return params;
}

}  // namespace fedrep
