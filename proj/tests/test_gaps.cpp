#include <gtest/gtest.h>

#include "support.hpp"

using namespace skadapt;

TEST(GapRatio, EdgeCases) {
  EXPECT_DOUBLE_EQ(gap_ratio(3.0, 2.0), 1.5);
  EXPECT_DOUBLE_EQ(gap_ratio(0.0, 0.0), 1.0);
  EXPECT_TRUE(std::isinf(gap_ratio(1.0, 0.0)));
}

TEST(MeasureGaps, ChainFactorsMultiply) {
  for (Variant v : {Variant::Risky, Variant::NonRisky})
    for (std::uint64_t seed = 1; seed <= 25; ++seed) {
      auto inst = sktest::random_instance(seed, 5, v);
      for (int k = 0; k <= 3; ++k) {
        auto r = measure_gaps(inst, k);
        ASSERT_TRUE(r.a_k_value.has_value());
        EXPECT_TRUE(r.pass);
        EXPECT_GE(r.gap_full, 1.0 - 1e-12);
        EXPECT_GE(*r.gap_0k, 1.0 - 1e-12);
        EXPECT_GE(*r.gap_kn, 1.0 - 1e-12);
        EXPECT_NEAR(*r.product_slack, 0.0, 1e-9);
      }
    }
}

TEST(MeasureGaps, SkipsSemiAboveLimit) {
  auto r = measure_gaps(sktest::random_instance(1, 9, Variant::Risky, 2), 1);
  EXPECT_FALSE(r.a_k_value.has_value());
  EXPECT_TRUE(r.pass);
}

TEST(PhiProbe, AdaptiveWithinTwiceLp) {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    auto inst = sktest::random_instance(seed, 6, seed % 2 ? Variant::Risky : Variant::NonRisky);
    EXPECT_LE(phi_ratio_probe(inst), 2.0 + 1e-9) << seed;
  }
}

TEST(CertifyT, FindsGoldenMinimum) {
  auto r = certify_T(100);
  EXPECT_NEAR(r.min_found, std::sqrt(5.0) - 2.0, 1e-6);
  EXPECT_LE(r.min_found, r.grid_min);
  ASSERT_EQ(r.argmin.size(), 3u);
  EXPECT_NEAR(r.argmin[0], (3.0 - std::sqrt(5.0)) / 2.0, 1e-3);
  EXPECT_NEAR(greedy_score(r.argmin[0], r.argmin[1], r.argmin[2]), r.min_found, 1e-15);
}

TEST(CertifyT, IndependentOfWorkerCount) {
  auto a = certify_T(40, 1);
  auto b = certify_T(40, 3);
  EXPECT_EQ(a.min_found, b.min_found);
  EXPECT_EQ(a.argmin, b.argmin);
  EXPECT_EQ(a.points, b.points);
}

TEST(CertifyTprime, MinimumIsQuarter) {
  auto r = certify_Tprime(40);
  EXPECT_NEAR(r.min_found, 0.25, 1e-6);
  EXPECT_GT(r.pruned, 0u);
  EXPECT_THROW(certify_Tprime(0), std::invalid_argument);
}

TEST(BernoulliStopping, ThresholdFromRecursion) {
  auto r = example1_mdp(0.01, 1000);
  EXPECT_EQ(r.threshold, 99);
  EXPECT_NEAR(r.overflow_estimate, std::pow(0.99, 99), 1e-15);
  EXPECT_THROW(example1_mdp(0.01, 100), std::invalid_argument);
}

TEST(BernoulliStopping, ThresholdValueMatchesPolicyEvaluation) {
  auto r = example1_mdp(0.1, 60, 14);
  auto f = make_bernoulli_eps(0.1, 14);
  auto pol = full_threshold_policy(f.instance, static_cast<std::size_t>(r.threshold));
  auto e = eval_procedural(f.instance, pol);
  EXPECT_NEAR(r.threshold_value, e.expected_value, 1e-12);
  EXPECT_NEAR(r.threshold_overflow, e.overflow_prob, 1e-12);
}
