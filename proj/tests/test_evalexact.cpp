#include <gtest/gtest.h>

#include "support.hpp"

using namespace skadapt;
using sktest::make_instance;
using sktest::random_instance;

namespace {

// Item A: size 0.6 surely. Item B: size 0.4 or 0.8, each w.p. 1/2.
Instance two_items(Variant v) {
  return make_instance({{1.0, {{6, 1.0}}}, {1.0, {{4, 0.5}, {8, 0.5}}}}, 10, v);
}

}  // namespace

TEST(EvalExact, HandComputedTwoItems) {
  auto risky = two_items(Variant::Risky);
  EXPECT_DOUBLE_EQ(eval_nonadaptive(risky, {{0, 1}}).expected_value, 1.0);
  EXPECT_DOUBLE_EQ(eval_nonadaptive(risky, {{1, 0}}).expected_value, 1.0);
  EXPECT_DOUBLE_EQ(eval_nonadaptive(risky, {{0, 1}}).overflow_prob, 0.5);
  EXPECT_DOUBLE_EQ(optimal_adaptive(risky).value, 1.5);
  EXPECT_DOUBLE_EQ(optimal_nonadaptive(risky).value, 1.0);

  auto safe = two_items(Variant::NonRisky);
  EXPECT_DOUBLE_EQ(eval_nonadaptive(safe, {{0, 1}}).expected_value, 1.5);
  EXPECT_DOUBLE_EQ(optimal_adaptive(safe).value, 1.5);
  EXPECT_DOUBLE_EQ(optimal_nonadaptive(safe).value, 1.5);
}

TEST(EvalExact, EmptyPlanAndEmptyInstance) {
  auto inst = two_items(Variant::Risky);
  auto r = eval_nonadaptive(inst, {});
  EXPECT_EQ(r.expected_value, 0.0);
  EXPECT_EQ(r.overflow_prob, 0.0);
}

TEST(EvalExact, PlansMatchScenarioEnumeration) {
  for (Variant v : {Variant::Risky, Variant::NonRisky})
    for (std::uint64_t seed = 1; seed <= 80; ++seed) {
      auto inst = random_instance(seed, 2 + seed % 5, v);
      std::vector<ItemId> order(inst.size());
      std::iota(order.begin(), order.end(), ItemId{0});
      std::reverse(order.begin(), order.end());
      NonAdaptivePlan plan{order};
      auto got = eval_nonadaptive(inst, plan);
      auto want = brute::expected(inst, plan);
      EXPECT_NEAR(got.expected_value, want.value, 1e-12) << seed;
      EXPECT_NEAR(got.overflow_prob, want.overflow_prob, 1e-12) << seed;
    }
}

TEST(Oracles, AdaptiveMatchesUnmemoizedSearch) {
  for (Variant v : {Variant::Risky, Variant::NonRisky})
    for (std::uint64_t seed = 1; seed <= 60; ++seed) {
      auto inst = random_instance(seed, 1 + seed % 5, v);
      auto sol = optimal_adaptive(inst);
      EXPECT_NEAR(sol.value, brute::optimal_adaptive(inst), 1e-12) << seed;
      // The returned tree achieves the value, both by the evaluator and by
      // playing every scenario.
      EXPECT_NEAR(eval_tree(inst, sol.tree).expected_value, sol.value, 1e-12) << seed;
      EXPECT_NEAR(brute::expected(inst, sol.tree).value, sol.value, 1e-12) << seed;
    }
}

TEST(Oracles, NonAdaptiveMatchesPermutationSearch) {
  for (Variant v : {Variant::Risky, Variant::NonRisky})
    for (std::uint64_t seed = 1; seed <= 60; ++seed) {
      auto inst = random_instance(seed, 1 + seed % 5, v);
      auto sol = optimal_nonadaptive(inst);
      EXPECT_NEAR(sol.value, brute::optimal_nonadaptive(inst), 1e-12) << seed;
      EXPECT_NEAR(eval_nonadaptive(inst, sol.plan).expected_value, sol.value, 1e-12) << seed;
    }
}

TEST(Oracles, SemiAdaptiveInterpolates) {
  for (Variant v : {Variant::Risky, Variant::NonRisky})
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
      auto inst = random_instance(seed, 2 + seed % 4, v);
      double alg = optimal_nonadaptive(inst).value;
      double adapt = optimal_adaptive(inst, false).value;
      const int n = static_cast<int>(inst.size());
      double prev = -1.0;
      for (int k = 0; k < n; ++k) {
        auto sol = optimal_k_semi_adaptive(inst, k);
        EXPECT_GE(sol.value, prev - 1e-12);
        EXPECT_GE(sol.value, alg - 1e-12);
        EXPECT_LE(sol.value, adapt + 1e-12);
        auto r = eval_tree(inst, sol.tree);
        EXPECT_NEAR(r.expected_value, sol.value, 1e-12);
        EXPECT_LE(r.queries_used, k);
        prev = sol.value;
      }
      EXPECT_NEAR(optimal_k_semi_adaptive(inst, 0, false).value, alg, 1e-12) << seed;
      EXPECT_NEAR(optimal_k_semi_adaptive(inst, n - 1, false).value, adapt, 1e-12) << seed;
    }
}

TEST(Oracles, TrivialConstraintChangesNothing) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto inst = random_instance(seed, 5, seed % 2 ? Variant::Risky : Variant::NonRisky);
    TreeConstraint all{{full_mask(inst.size())}};
    EXPECT_NEAR(optimal_adaptive(inst, false, all).value, optimal_adaptive(inst, false).value, 1e-12);
    EXPECT_NEAR(optimal_nonadaptive(inst, all).value, optimal_nonadaptive(inst).value, 1e-12);
  }
}

TEST(Oracles, ConstraintRestrictsItemSets) {
  auto inst = two_items(Variant::Risky);
  TreeConstraint only_b{{0b10}};
  EXPECT_DOUBLE_EQ(optimal_adaptive(inst, false, only_b).value, 1.0);
  EXPECT_DOUBLE_EQ(optimal_nonadaptive(inst, only_b).value, 1.0);
}

TEST(Oracles, SizeLimitsAreEnforced) {
  auto inst = random_instance(1, 9);
  OracleLimits tight;
  tight.adaptive_n = 8;
  tight.nonadaptive_risky_n = 8;
  EXPECT_THROW(optimal_adaptive(inst, false, {}, tight), size_limit_error);
  EXPECT_THROW(optimal_nonadaptive(inst, {}, tight), size_limit_error);
  EXPECT_THROW(optimal_k_semi_adaptive(inst, 1), size_limit_error);
  EXPECT_THROW(optimal_k_semi_adaptive(random_instance(1, 3), -1), std::invalid_argument);
}

TEST(EvalExact, ProceduralMatchesPlayback) {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    auto inst = random_instance(seed, 5, seed % 2 ? Variant::Risky : Variant::NonRisky);
    ProceduralPolicy pol = semi_adaptive_greedy(inst, 2, optimal_alpha(2));
    auto got = eval_procedural(inst, pol);
    auto want = brute::expected(inst, pol);
    EXPECT_NEAR(got.expected_value, want.value, 1e-12) << seed;
    EXPECT_NEAR(got.overflow_prob, want.overflow_prob, 1e-12) << seed;
    EXPECT_LE(got.queries_used, 2);
  }
}

TEST(EvalExact, BranchBudgetRaises) {
  auto inst = random_instance(4, 8, Variant::Risky, 4, 100, 60);
  auto tree = optimal_adaptive(inst).tree;
  EvalOptions tiny;
  tiny.node_budget = 3;
  EXPECT_THROW(eval_tree(inst, tree, tiny), branch_explosion_error);
}

TEST(EvalExact, InvalidTreesAreRejected) {
  auto inst = two_items(Variant::Risky);
  TreePolicy repeat{make_node({0, 0})};
  EXPECT_THROW(eval_tree(inst, repeat), std::invalid_argument);
  TreePolicy gap{make_node({0}, {{0, 3, make_stop()}, {5, 10, make_stop()}})};
  EXPECT_THROW(eval_tree(inst, gap), std::invalid_argument);
  TreePolicy out_of_range{make_node({7})};
  EXPECT_THROW(eval_tree(inst, out_of_range), std::invalid_argument);
}

TEST(PolicyIo, TreeJsonRoundTrip) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto inst = random_instance(seed, 5);
    auto tree = optimal_adaptive(inst).tree;
    auto back = tree_from_json(nlohmann::json::parse(tree_to_json(tree).dump()));
    EXPECT_NEAR(eval_tree(inst, back).expected_value, eval_tree(inst, tree).expected_value, 1e-15);
  }
}

TEST(PolicyIo, TreeJsonErrors) {
  using nlohmann::json;
  EXPECT_THROW(tree_from_json(json::object()), std::invalid_argument);
  json cyc = json::parse(R"({"root":0,"nodes":[{"id":0,"insert":[1],"children":[[0,10,0]]}]})");
  EXPECT_THROW(tree_from_json(cyc), std::invalid_argument);
  json unknown = json::parse(R"({"root":0,"nodes":[{"id":0,"insert":[1],"children":[[0,10,5]]}]})");
  EXPECT_THROW(tree_from_json(unknown), std::invalid_argument);
  json zero = json::parse(R"({"root":0,"nodes":[{"id":0,"insert":[0]}]})");
  EXPECT_THROW(tree_from_json(zero), std::invalid_argument);
}
