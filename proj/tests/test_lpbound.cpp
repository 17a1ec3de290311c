#include <gtest/gtest.h>

#include "support.hpp"

using namespace skadapt;

namespace {

std::pair<std::vector<double>, std::vector<double>> w_mu(const Instance& inst) {
  std::vector<double> w, mu;
  for (const auto& s : derive_stats(inst)) {
    w.push_back(s.effective_value);
    mu.push_back(s.mean_truncated_size);
  }
  return {w, mu};
}

}  // namespace

TEST(Phi, MatchesVertexEnumeration) {
  for (std::uint64_t seed = 1; seed <= 150; ++seed) {
    auto inst = sktest::random_instance(seed, 1 + seed % 6);
    auto [w, mu] = w_mu(inst);
    for (double t : {0.0, 0.3, 0.5, 1.0, 1.7, 4.0}) {
      double want = sktest::lp_by_vertices(w, mu, t);
      EXPECT_NEAR(phi(inst, t).value, want, 1e-12 * std::max(1.0, want)) << "seed " << seed << " t " << t;
    }
  }
}

TEST(Phi, SolutionIsFeasibleWithAtMostOneFraction) {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    auto inst = sktest::random_instance(seed, 6);
    auto [w, mu] = w_mu(inst);
    auto sol = phi(inst, 0.8);
    double used = 0.0, val = 0.0;
    int fractional = 0;
    for (std::size_t i = 0; i < inst.size(); ++i) {
      ASSERT_GE(sol.x[i], 0.0);
      ASSERT_LE(sol.x[i], 1.0);
      if (sol.x[i] > 0.0 && sol.x[i] < 1.0) ++fractional;
      used += sol.x[i] * mu[i];
      val += sol.x[i] * w[i];
    }
    EXPECT_LE(used, 0.8 + 1e-12);
    EXPECT_LE(fractional, 1);
    EXPECT_NEAR(val, sol.value, 1e-12);
  }
}

TEST(Phi, MonotoneAndConcaveInT) {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    auto inst = sktest::random_instance(seed, 8);
    double prev = -1.0, prev_slope = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 40; ++i) {
      double v = phi(inst, 0.05 * i).value;
      EXPECT_GE(v, prev - 1e-12);
      if (i > 0) {
        double slope = (v - prev) / 0.05;
        EXPECT_LE(slope, prev_slope + 1e-9);
        prev_slope = slope;
      }
      prev = v;
    }
  }
}

TEST(Phi, RejectsNegativeT) {
  auto inst = sktest::random_instance(3, 3);
  EXPECT_THROW(phi(inst, -0.1), std::invalid_argument);
}

TEST(AdaptBound, DominatesAdaptiveOptimum) {
  for (Variant v : {Variant::Risky, Variant::NonRisky})
    for (std::uint64_t seed = 1; seed <= 60; ++seed) {
      auto inst = sktest::random_instance(seed, 6, v);
      EXPECT_LE(optimal_adaptive(inst, false).value, adapt_upper_bound(inst) + 1e-9) << seed;
    }
}

TEST(BlockCertificate, HoldsForGreedyPrefixes) {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    auto inst = sktest::random_instance(seed, 7);
    for (std::size_t j = 1; j <= inst.size(); ++j)
      for (double t : {0.25, 0.5, 1.0}) {
        auto c = greedy_block_certificate(inst, j, t);
        EXPECT_TRUE(c.holds) << seed << " " << j << " " << t;
        EXPECT_GE(c.lhs, c.rhs - 1e-12);
      }
  }
  auto inst = sktest::random_instance(1, 3);
  EXPECT_THROW(greedy_block_certificate(inst, 0, 1.0), std::invalid_argument);
  EXPECT_THROW(greedy_block_certificate(inst, 4, 1.0), std::invalid_argument);
}
