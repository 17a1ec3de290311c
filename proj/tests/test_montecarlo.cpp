#include <gtest/gtest.h>

#include "support.hpp"

using namespace skadapt;

namespace {

McConfig cfg(std::uint64_t samples, std::uint64_t seed, int workers = 1) {
  McConfig c;
  c.samples = samples;
  c.seed = seed;
  c.workers = workers;
  return c;
}

}  // namespace

TEST(MonteCarlo, BitIdenticalAcrossWorkerCounts) {
  auto inst = sktest::random_instance(11, 7);
  Policy pol = optimal_adaptive(inst).tree;
  auto a = simulate(inst, pol, cfg(50'000, 9, 1));
  auto b = simulate(inst, pol, cfg(50'000, 9, 4));
  auto c = simulate(inst, pol, cfg(50'000, 9, 7));
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.mean, c.mean);
  EXPECT_EQ(a.std_error, c.std_error);
  EXPECT_EQ(a.overflow_freq, b.overflow_freq);
}

TEST(MonteCarlo, SeedChangesStream) {
  auto inst = sktest::random_instance(11, 7);
  Policy pol = optimal_adaptive(inst).tree;
  EXPECT_NE(simulate(inst, pol, cfg(10'000, 1)).mean, simulate(inst, pol, cfg(10'000, 2)).mean);
}

TEST(MonteCarlo, AgreesWithExactWithinFiveSigma) {
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    auto inst = sktest::random_instance(seed, 6, seed % 2 ? Variant::Risky : Variant::NonRisky);
    std::vector<Policy> policies{NonAdaptivePlan{greedy_order(inst)}, optimal_adaptive(inst).tree,
                                 semi_adaptive_greedy(inst, 2, optimal_alpha(2))};
    for (const auto& pol : policies) {
      auto exact = evaluate_exact(inst, pol);
      auto mc = simulate(inst, pol, cfg(40'000, 100 + seed));
      double tol = 5.0 * mc.std_error + 1e-12;
      EXPECT_NEAR(mc.mean, exact.expected_value, tol) << seed;
      double p = exact.overflow_prob;
      EXPECT_NEAR(mc.overflow_freq, p, 5.0 * std::sqrt(p * (1 - p) / 40'000.0) + 1e-12) << seed;
    }
  }
}

TEST(MonteCarlo, ConfidenceHalfWidthUsesNormalQuantile) {
  auto inst = sktest::random_instance(3, 5);
  auto c = cfg(20'000, 5);
  c.ci_level = 0.95;
  auto r = simulate(inst, NonAdaptivePlan{greedy_order(inst)}, c);
  EXPECT_NEAR(r.ci_halfwidth, 1.959963984540054 * r.std_error, 1e-12);
}

TEST(MonteCarlo, KeyedUniformIsUniform) {
  std::array<int, 10> bins{};
  const int n = 100'000;
  for (int s = 0; s < n; ++s) {
    double u = detail::keyed_uniform(77, static_cast<std::uint64_t>(s), 3);
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ++bins[static_cast<std::size_t>(u * 10)];
  }
  double chi2 = 0.0;
  for (int b : bins) chi2 += (b - n / 10.0) * (b - n / 10.0) / (n / 10.0);
  EXPECT_LT(chi2, 30.0);  // 9 dof; p < 1e-3
}

TEST(MonteCarlo, InputValidation) {
  auto inst = sktest::random_instance(3, 4);
  Policy pol = NonAdaptivePlan{{0, 1}};
  EXPECT_THROW(simulate(inst, pol, cfg(0, 1)), std::invalid_argument);
  auto c = cfg(10, 1);
  c.ci_level = 1.0;
  EXPECT_THROW(simulate(inst, pol, c), std::invalid_argument);
  EXPECT_THROW(simulate(inst, NonAdaptivePlan{{0, 9}}, cfg(10, 1)), std::invalid_argument);
  EXPECT_THROW(simulate_always_insert(inst, cfg(10, 1)), std::invalid_argument);
}

TEST(Evaluate, AutoFallsBackOnBranchExplosion) {
  auto inst = sktest::random_instance(4, 8, Variant::Risky, 4, 100, 60);
  Policy tree = optimal_adaptive(inst).tree;
  EvalOptions tiny;
  tiny.node_budget = 3;
  auto c = cfg(20'000, 1);
  EXPECT_THROW(evaluate(inst, tree, EvalMethod::Exact, c, tiny), branch_explosion_error);
  auto r = evaluate(inst, tree, EvalMethod::Auto, c, tiny);
  EXPECT_FALSE(r.exact);
  EXPECT_GT(r.std_error, 0.0);
  auto e = evaluate(inst, tree, EvalMethod::Auto, c);
  EXPECT_TRUE(e.exact);
  EXPECT_NEAR(r.value, e.value, 5.0 * r.std_error);
}

TEST(Parallel, ResolveWorkers) {
  EXPECT_EQ(resolve_workers(3), 3);
  EXPECT_GE(resolve_workers(0), 1);
  std::vector<int> hit(100, 0);
  parallel_tasks(hit.size(), 4, [&](std::size_t i) { hit[i] += 1; });
  for (int h : hit) EXPECT_EQ(h, 1);
}
