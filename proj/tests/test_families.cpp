#include <gtest/gtest.h>

#include "support.hpp"

using namespace skadapt;

TEST(Recursions, KnownPrefixes) {
  EXPECT_EQ(risky_recursion(5), (std::vector<double>{1.0, 1.5, 1.75, 1.875, 1.9375}));
  EXPECT_EQ(nonrisky_recursion(3), (std::vector<double>{1.0, 1.25, 1.390625}));
  EXPECT_THROW(risky_recursion(0), std::invalid_argument);
}

TEST(Recursions, NonRiskyIncreasesTowardTwo) {
  auto g = nonrisky_recursion(2000);
  for (std::size_t i = 1; i < g.size(); ++i) {
    EXPECT_GT(g[i], g[i - 1]);
    EXPECT_LT(g[i], 2.0);
  }
}

TEST(BernoulliEps, Predictions) {
  auto f = make_bernoulli_eps(0.1, 30);
  EXPECT_EQ(f.instance.size(), 30u);
  EXPECT_DOUBLE_EQ(f.predictions["phi1"].get<double>(), 1.0);
  EXPECT_NEAR(phi(f.instance, 1.0).value, 1.0, 1e-12);
  EXPECT_THROW(make_bernoulli_eps(0.0, 3), std::invalid_argument);
}

TEST(H2Risky, PredictionsMatchOracles) {
  for (std::size_t n : {2u, 3u, 5u, 8u}) {
    auto p = uniform_tail(0.5, n);
    auto f = make_h2_risky(p);
    double adapt = optimal_adaptive(f.instance, false).value;
    double alg = optimal_nonadaptive(f.instance).value;
    EXPECT_NEAR(adapt, f.predictions["adapt"].get<double>(), 1e-9) << n;
    EXPECT_NEAR(alg, f.predictions["alg"].get<double>(), 1e-9) << n;
    EXPECT_NEAR(adapt / alg, h2_risky_gap(p), 1e-9) << n;
  }
}

TEST(H2Risky, RejectsBadVectors) {
  EXPECT_THROW(make_h2_risky({0.3, 0.7}), std::invalid_argument);
  EXPECT_THROW(make_h2_risky({0.6, 0.6}), std::invalid_argument);
}

TEST(H2NonRisky, PredictionsMatchOracles) {
  for (std::size_t n : {2u, 3u, 5u}) {
    auto p = uniform_tail(std::exp(-1.0), n);
    auto f = make_h2_nonrisky(0.0, p);
    double adapt = optimal_adaptive(f.instance, false).value;
    double alg = optimal_nonadaptive(f.instance).value;
    EXPECT_NEAR(adapt, f.predictions["adapt"].get<double>(), 1e-9) << n;
    EXPECT_NEAR(alg, f.predictions["alg"].get<double>(), 1e-9) << n;
    EXPECT_NEAR(adapt / alg, h2_nonrisky_gap(p), 1e-6) << n;
  }
}

TEST(NoisyLowerBound, TwoItems) {
  auto f = make_noisy_lb(2);
  EXPECT_NEAR(optimal_adaptive(f.instance, false).value, 1.5, 1e-12);
  EXPECT_NEAR(optimal_nonadaptive(f.instance).value, 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(f.predictions["adapt"].get<double>(), 1.5);
  EXPECT_DOUBLE_EQ(f.predictions["alg"].get<double>(), 1.0);
}

TEST(NoisyLowerBound, PredictionsMatchOraclesUpToSix) {
  for (int k = 1; k <= 6; ++k) {
    auto f = make_noisy_lb(k, 0.1);
    double adapt = optimal_adaptive(f.instance, false).value;
    double alg = optimal_nonadaptive(f.instance).value;
    EXPECT_NEAR(adapt, f.predictions["adapt"].get<double>(), 1e-9) << k;
    EXPECT_NEAR(alg, f.predictions["alg"].get<double>(), 1e-9) << k;
    EXPECT_NEAR(f.predictions["gap"].get<double>(), 2.0 - std::ldexp(1.0, 1 - k), 1e-15);
  }
}

TEST(NoisyLowerBound, GridLimits) {
  EXPECT_THROW(make_noisy_lb(3, 0.3), std::invalid_argument);
  EXPECT_THROW(make_noisy_lb(20, 1e-3), std::invalid_argument);
  EXPECT_NO_THROW(make_noisy_lb(12, 1e-3));
}

TEST(Random, DeterministicPerSeed) {
  auto a = sktest::random_instance(42, 6);
  auto b = sktest::random_instance(42, 6);
  EXPECT_EQ(fingerprint(a), fingerprint(b));
  EXPECT_NE(fingerprint(a), fingerprint(sktest::random_instance(43, 6)));
}

TEST(Random, SmallOnlyModeRespectsEps) {
  RandomSpec s;
  s.n = 20;
  s.scale = 100;
  s.mode = RandomMode::SmallOnly;
  s.eps = 0.05;
  auto inst = make_random(s);
  for (const auto& st : derive_stats(inst)) EXPECT_LE(st.mean_truncated_size, 0.05);
}

TEST(CompoundReduce, BlockBecomesOneItem) {
  auto inst = sktest::make_instance(
      {{1.0, {{2, 0.5}, {4, 0.5}}}, {2.0, {{3, 1.0}}}, {4.0, {{5, 0.5}, {9, 0.5}}}}, 10, Variant::Risky);
  // Insert {0,1} as one block, observe, insert 2 only if at least 5 units remain.
  TreePolicy tree{make_node({0, 1}, {{0, 4, make_stop()}, {5, 10, make_node({2})}})};
  auto red = compound_reduce(inst, tree);
  ASSERT_EQ(red.reduced.size(), 2u);
  EXPECT_EQ(red.segments[0], (std::vector<ItemId>{0, 1}));
  EXPECT_DOUBLE_EQ(red.reduced.item(0).value, 3.0);
  EXPECT_EQ(red.reduced.item(0).dist.support(), 2u);
  EXPECT_NEAR(eval_tree(red.reduced, red.tree).expected_value, eval_tree(inst, tree).expected_value, 1e-15);
  EXPECT_EQ(red.constraint.paths, (std::vector<ItemMask>{0b01, 0b11}));
}

TEST(CompoundReduce, PreservesRiskyValue) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    auto inst = sktest::random_instance(seed, 5);
    auto tree = optimal_k_semi_adaptive(inst, 1).tree;
    auto red = compound_reduce(inst, tree);
    EXPECT_NEAR(eval_tree(red.reduced, red.tree).expected_value, eval_tree(inst, tree).expected_value, 1e-12);
    EXPECT_LE(red.reduced.size(), inst.size());
  }
}

// Without the risky penalty a compound item loses the partial value of its
// segment when it overflows, so the reduced tree can only be worth less.
TEST(CompoundReduce, NonRiskyValueCanOnlyDrop) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    auto inst = sktest::random_instance(seed, 5, Variant::NonRisky);
    auto tree = optimal_k_semi_adaptive(inst, 1).tree;
    auto red = compound_reduce(inst, tree);
    EXPECT_LE(eval_tree(red.reduced, red.tree).expected_value, eval_tree(inst, tree).expected_value + 1e-12);
  }
}
