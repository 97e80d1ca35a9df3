#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "fedrep/reputation.hpp"
#include "oracles.hpp"

using namespace fedrep;

TEST(ReputationConfig, DerivesNegativeWeight) {
  ReputationConfig cfg;
  cfg.set_positive_weight(0.4);
  EXPECT_DOUBLE_EQ(cfg.negative_weight, 0.6);
  cfg.negative_weight = 0.9;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(Opinion, HandExamples) {
  const ReputationConfig cfg;
  const auto o = opinion(10, 0, cfg);
  EXPECT_NEAR(o.belief, 0.6, 1e-12);
  EXPECT_NEAR(o.disbelief, 0.0, 1e-12);
  EXPECT_NEAR(o.uncertainty, 0.4, 1e-12);
  const auto none = opinion(0, 0, cfg);
  EXPECT_EQ(none.belief, 0.0);
  EXPECT_EQ(none.disbelief, 0.0);
  EXPECT_EQ(none.uncertainty, 1.0);
}

TEST(Opinion, ComponentsSumToOneAndMatchReputation) {
  ReputationConfig cfg;
  for (double kappa : {0.1, 0.3, 0.5}) {
    cfg.set_positive_weight(kappa);
    for (int p = 0; p < 100; ++p) {
      for (int n = 0; n < 100; ++n) {
        const auto o = opinion(p * 3.7, n * 2.9, cfg);
        ASSERT_NEAR(o.belief + o.disbelief + o.uncertainty, 1.0, 1e-12);
        ASSERT_NEAR(round_reputation(p * 3.7, n * 2.9, cfg), o.expectation(cfg.prior), 1e-12);
      }
    }
  }
}

TEST(RoundReputation, HandExamples) {
  const ReputationConfig cfg;
  EXPECT_NEAR(round_reputation(10, 0, cfg), 0.8, 1e-12);
  EXPECT_NEAR(round_reputation(0, 0, cfg), 0.5, 1e-12);
  EXPECT_NEAR(round_reputation(0, 10, cfg), 1.0 / 9.0, 1e-12);
}

TEST(RoundReputation, RisesWithPositivesFallsWithNegatives) {
  const ReputationConfig cfg;
  for (int p = 0; p < 1000; p += 7) {
    for (int n = 0; n < 1000; n += 7) {
      const double r = round_reputation(p, n, cfg);
      ASSERT_LT(r, round_reputation(p + 1, n, cfg));
      ASSERT_GT(r, round_reputation(p, n + 1, cfg));
    }
  }
}

TEST(RoundReputation, EqualCountsFallBelowPrior) {
  const ReputationConfig cfg;
  for (int n = 1; n < 500; ++n) ASSERT_LT(round_reputation(n, n, cfg), cfg.prior);
}

TEST(RoundReputation, RejectsNegativeCounts) {
  EXPECT_THROW(round_reputation(-1, 0, ReputationConfig{}), Error);
}

TEST(Windowed, SingleEntryIsItself) {
  const std::vector<ReputationRecord> h{{4, 0, 0, 0.8}};
  EXPECT_DOUBLE_EQ(windowed_reputation(h, ReputationConfig{}, 4), 0.8);
}

TEST(Windowed, HandExample) {
  const std::vector<ReputationRecord> h{{1, 10, 0, 0.8}, {2, 0, 10, 1.0 / 9.0}};
  EXPECT_NEAR(windowed_reputation(h, ReputationConfig{}, 2), oracle::kWindowedExample, 1e-4);
}

TEST(Windowed, IgnoresEntriesBeforeWindow) {
  const ReputationConfig cfg;  // window 10
  const std::vector<ReputationRecord> h{{9, 0, 0, 0.0}, {10, 0, 0, 0.6}, {20, 0, 0, 0.6}};
  EXPECT_DOUBLE_EQ(windowed_reputation(h, cfg, 20), 0.6);
  const std::vector<ReputationRecord> only_old{{9, 0, 0, 0.3}};
  EXPECT_THROW(windowed_reputation(only_old, cfg, 20), Error);
}

TEST(Windowed, LiesBetweenWindowExtremesAndIgnoresRepeats) {
  const ReputationConfig cfg;
  std::vector<ReputationRecord> h;
  for (std::size_t t = 1; t <= 15; ++t) {
    h.push_back({t, 0, 0, 0.1 + 0.05 * static_cast<double>(t % 7)});
    const double w = windowed_reputation(h, cfg, t);
    double lo = 1.0, hi = 0.0;
    for (const auto& r : h)
      if (r.round + cfg.window >= t) {
        lo = std::min(lo, r.reputation);
        hi = std::max(hi, r.reputation);
      }
    ASSERT_GE(w, lo - 1e-15);
    ASSERT_LE(w, hi + 1e-15);
  }
  std::vector<ReputationRecord> flat{{1, 0, 0, 0.42}, {2, 0, 0, 0.42}};
  const double before = windowed_reputation(flat, cfg, 2);
  flat.push_back({3, 0, 0, 0.42});
  EXPECT_NEAR(windowed_reputation(flat, cfg, 3), before, 1e-15);
}

TEST(MinMax, HandExamples) {
  const auto a = minmax_normalize(std::vector<double>{0.2, 0.5, 0.8});
  EXPECT_NEAR(a[0], 0.0, 1e-15);
  EXPECT_NEAR(a[1], 0.5, 1e-15);
  EXPECT_NEAR(a[2], 1.0, 1e-15);
  EXPECT_EQ(minmax_normalize(std::vector<double>(4, 0.7)), std::vector<double>(4, 0.25));
  EXPECT_EQ(minmax_normalize(std::vector<double>{0.1, 0.9}), (std::vector<double>{0.0, 1.0}));
}

TEST(MinMax, InvariantUnderPositiveAffineMaps) {
  const std::vector<double> v{0.3, 0.9, 0.1, 0.55};
  std::vector<double> w;
  for (double x : v) w.push_back(3.5 * x - 2.0);
  const auto a = minmax_normalize(v), b = minmax_normalize(w);
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
}

TEST(ClientState, TracksWindowedScoreAndPrunesOldRounds) {
  const ReputationConfig cfg;
  ClientReputationState s;
  s.record(1, 10, 0, cfg);
  EXPECT_DOUBLE_EQ(s.windowed(), 0.8);
  s.record(2, 0, 10, cfg);
  EXPECT_NEAR(s.windowed(), oracle::kWindowedExample, 1e-4);
  for (std::size_t t = 3; t <= 30; ++t) s.record(t, 5, 5, cfg);
  EXPECT_EQ(s.history().front().round, 20u);
  EXPECT_THROW(s.record(30, 1, 1, cfg), Error);
}
