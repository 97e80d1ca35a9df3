#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "fedrep/model.hpp"
#include "oracles.hpp"

using namespace fedrep;

namespace {

Dataset separable_toy(std::size_t per_class, std::uint64_t seed) {
  Dataset d(2, 2);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 0.3);
  for (std::size_t i = 0; i < per_class; ++i) {
    d.push_back(std::vector<double>{2.0 + g(rng), g(rng)}, 0);
    d.push_back(std::vector<double>{g(rng), 2.0 + g(rng)}, 1);
  }
  return d;
}

ModelParams identity_linear() {
  ModelParams p(Architecture{2, {}, 2});
  auto& w = p.layers()[0].weights;
  w(0, 0) = 1.0;
  w(1, 1) = 1.0;
  return p;
}

}  // namespace

TEST(Architecture, CountsParametersPerLayer) {
  EXPECT_EQ((Architecture{9, {}, 2}.parameter_count()), 20u);
  EXPECT_EQ((Architecture{100, {64, 32}, 2}.parameter_count()), 100u * 64 + 64 + 64 * 32 + 32 + 32 * 2 + 2);
}

TEST(Forward, ZeroParametersGiveUniformProbabilities) {
  const ModelParams p(Architecture{3, {4}, 2});
  const auto probs = mlp_forward(p, std::vector<double>{1.0, -2.0, 3.0});
  EXPECT_DOUBLE_EQ(probs[0], 0.5);
  EXPECT_DOUBLE_EQ(probs[1], 0.5);
}

TEST(Forward, IdentityLinearLayerIsSoftmaxOfInput) {
  const auto probs = mlp_forward(identity_linear(), std::vector<double>{2.0, 0.0});
  EXPECT_NEAR(probs[0], 0.8808, 1e-4);
  EXPECT_NEAR(probs[1], 0.1192, 1e-4);
}

TEST(Forward, RejectsWrongFeatureLength) {
  EXPECT_THROW(mlp_forward(identity_linear(), std::vector<double>{1.0}), Error);
}

TEST(Forward, ProbabilitiesFormADistributionForRandomAndExtremeInputs) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = init_params(Architecture{5, {8, 4}, 3}, rng());
    std::vector<double> x(5);
    for (auto& v : x) v = g(rng) * (trial % 2 ? 1.0 : 500.0);
    const auto probs = mlp_forward(p, x);
    EXPECT_NEAR(std::accumulate(probs.begin(), probs.end(), 0.0), 1.0, 1e-9);
    for (double q : probs) EXPECT_GE(q, 0.0);
  }
}

TEST(Softmax, StaysFiniteAndPositiveOnLargeLogits) {
  std::vector<double> z{1000.0, 999.0, -1000.0};
  softmax_inplace(z);
  EXPECT_NEAR(z[0] + z[1] + z[2], 1.0, 1e-12);
  EXPECT_GT(z[1], 0.0);
  EXPECT_TRUE(std::isfinite(z[2]));
}

TEST(NllLoss, MatchesHandValues) {
  EXPECT_NEAR(nll_loss(std::vector<double>{0.5, 0.5}, 1), std::log(2.0), 1e-12);
  EXPECT_NEAR(nll_loss(std::vector<double>{0.8808, 0.1192}, 0), 0.1269, 1e-4);
  EXPECT_EQ(nll_loss(std::vector<double>{1.0, 0.0}, 0), 0.0);
}

TEST(NllLoss, ClampsZeroProbability) {
  EXPECT_NEAR(nll_loss(std::vector<double>{1.0, 0.0}, 1), -std::log(1e-12), 1e-9);
}

TEST(Argmax, TiesGoToLowestIndex) {
  EXPECT_EQ(argmax(std::vector<double>{0.3, 0.3, 0.3}), 0u);
  EXPECT_EQ(argmax(std::vector<double>{0.1, 0.45, 0.45}), 1u);
}

TEST(Gradient, MatchesCentralFiniteDifferencesOnRandomSmallModels) {
  const auto check = oracle::finite_difference_check(100, 1e-5, 2024);
  EXPECT_EQ(check.models, 100u);
  EXPECT_LT(check.worst_relative_error, 1e-4);
}

TEST(Gradient, OutputBiasGradientVanishesOnBalancedIdenticalBatch) {
  const ModelParams p(Architecture{3, {4}, 2});
  Dataset batch(3, 2);
  const std::vector<double> x{0.5, -1.0, 2.0};
  batch.push_back(x, 0);
  batch.push_back(x, 1);
  const auto g = gradient(p, batch);
  for (double b : g.layers().back().bias) EXPECT_NEAR(b, 0.0, 1e-15);
}

TEST(Gradient, HasParameterShape) {
  const auto p = init_params(Architecture{4, {3}, 3}, 1);
  Dataset batch(4, 3);
  batch.push_back(std::vector<double>{1, 2, 3, 4}, 2);
  const auto g = gradient(p, batch);
  EXPECT_TRUE(g.same_shape(p));
  EXPECT_EQ(g.size(), p.size());
}

TEST(Gradient, RejectsEmptyBatchAndDimensionMismatch) {
  const auto p = init_params(Architecture{4, {3}, 3}, 1);
  EXPECT_THROW(gradient(p, Dataset(4, 3)), Error);
  Dataset wrong(2, 3);
  wrong.push_back(std::vector<double>{1, 2}, 0);
  EXPECT_THROW(gradient(p, wrong), Error);
}

TEST(SgdStep, AppliesElementwiseUpdate) {
  ModelParams p(Architecture{1, {}, 1});
  p.layers()[0].weights(0, 0) = 1.0;
  ModelParams g = p;
  g.set_zero();
  g.layers()[0].weights(0, 0) = 0.5;
  EXPECT_DOUBLE_EQ(sgd_step(p, g, 0.01).layers()[0].weights(0, 0), 0.995);
  ModelParams zero = p;
  zero.set_zero();
  EXPECT_EQ(sgd_step(p, zero, 0.01), p);
  EXPECT_EQ(sgd_step(p, g, 0.0), p);
}

TEST(Params, FlattenUnflattenRoundTrips) {
  const Architecture arch{6, {5, 4}, 3};
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> v(arch.parameter_count());
  for (auto& x : v) x = g(rng);
  EXPECT_EQ(ModelParams::unflatten(arch, v).flatten(), v);
  EXPECT_THROW(ModelParams::unflatten(arch, std::vector<double>(v.size() - 1)), Error);
}

TEST(Params, InitialisationIsSeededAndBoundedByFanIn) {
  const Architecture arch{16, {9}, 2};
  const auto a = init_params(arch, 3);
  EXPECT_EQ(a, init_params(arch, 3));
  EXPECT_NE(a, init_params(arch, 4));
  for (const auto& layer : a.layers()) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.weights.cols()));
    for (std::size_t i = 0; i < layer.weights.rows(); ++i) {
      for (std::size_t j = 0; j < layer.weights.cols(); ++j) EXPECT_LE(std::abs(layer.weights(i, j)), bound);
      EXPECT_LE(std::abs(layer.bias[i]), bound);
    }
  }
}

TEST(LocalTrain, ZeroEpochsReturnsInputEvenWithoutData) {
  const auto p = init_params(Architecture{2, {3}, 2}, 1);
  TrainConfig cfg;
  cfg.local_epochs = 0;
  EXPECT_EQ(local_train(p, Dataset(2, 2), cfg), p);
}

TEST(LocalTrain, RejectsEmptyDataWhenTraining) {
  const auto p = init_params(Architecture{2, {3}, 2}, 1);
  EXPECT_THROW(local_train(p, Dataset(2, 2), TrainConfig{}), Error);
}

TEST(LocalTrain, IsBitIdenticalForSameSeed) {
  const auto data = separable_toy(30, 1);
  const auto p = init_params(Architecture{2, {8}, 2}, 2);
  TrainConfig cfg;
  cfg.batch_size = 7;  // exercises the short final batch
  cfg.seed = 99;
  EXPECT_EQ(local_train(p, data, cfg), local_train(p, data, cfg));
  auto other = cfg;
  other.seed = 100;
  EXPECT_NE(local_train(p, data, cfg), local_train(p, data, other));
}

TEST(LocalTrain, ReducesLossOnSeparableToySet) {
  const auto data = separable_toy(50, 4);
  const auto p = init_params(Architecture{2, {8}, 2}, 5);
  TrainConfig cfg;
  cfg.seed = 1;
  const auto trained = local_train(p, data, cfg);
  EXPECT_LT(mean_loss(trained, data), mean_loss(p, data));
}
