#pragma once

#include <algorithm>
#include <functional>
#include <numeric>
#include <vector>

#include "skadapt/model.hpp"
#include "skadapt/policy.hpp"

// Reference computations by plain enumeration, for cross-checking the
// memoized oracles on tiny instances. No convolution, no caching.
namespace skadapt::brute {

inline constexpr std::size_t kMaxScenarios = 2'000'000;

// Calls fn(sizes, prob) for every joint size realization.
template <class Fn>
void for_each_scenario(const Instance& inst, Fn&& fn) {
  std::size_t total = 1;
  for (const auto& it : inst.items()) {
    total *= it.dist.atoms().size();
    if (total > kMaxScenarios) throw size_limit_error("brute force: too many joint scenarios");
  }
  std::vector<Units> sizes(inst.size());
  std::function<void(std::size_t, double)> rec = [&](std::size_t i, double p) {
    if (i == inst.size()) {
      fn(sizes, p);
      return;
    }
    for (const auto& a : inst.item(i).dist.atoms()) {
      sizes[i] = a.size;
      rec(i + 1, p * a.prob);
    }
  };
  rec(0, 1.0);
}

struct Realized {
  double value = 0.0;
  bool overflow = false;
};

// Plays a fixed-size scenario through a plan or tree.
inline Realized play(const Instance& inst, const Policy& policy, const std::vector<Units>& sizes) {
  Units r = inst.scale();
  double value = 0.0;
  std::vector<ItemId> inserted;
  auto put = [&](ItemId i) {
    if (sizes[i] > r) return false;
    r -= sizes[i];
    value += inst.item(i).value;
    inserted.push_back(i);
    return true;
  };
  auto overflowed = [&]() -> Realized {
    return {inst.variant() == Variant::Risky ? 0.0 : value, true};
  };
  if (const auto* plan = std::get_if<NonAdaptivePlan>(&policy)) {
    for (ItemId i : plan->order)
      if (!put(i)) return overflowed();
    return {value, false};
  }
  if (const auto* tree = std::get_if<TreePolicy>(&policy)) {
    const DecisionNode* n = tree->root.get();
    while (n && !n->is_stop()) {
      for (ItemId i : n->insert)
        if (!put(i)) return overflowed();
      const DecisionNode* next = nullptr;
      for (const auto& b : n->children)
        if (b.lo <= r && r <= b.hi) next = b.node.get();
      n = next;
    }
    return {value, false};
  }
  const auto& pp = std::get<ProceduralPolicy>(policy);
  std::size_t stage = 0;
  int q = 0;
  for (;;) {
    Step st = pp.rule->next(Observation{r, stage, q, inserted});
    if (st.block.empty()) break;
    for (ItemId i : st.block)
      if (!put(i)) return overflowed();
    if (!st.observe) break;
    stage = st.next_stage;
    ++q;
  }
  return {value, false};
}

struct Expectation {
  double value = 0.0;
  double overflow_prob = 0.0;
};

inline Expectation expected(const Instance& inst, const Policy& policy) {
  Expectation e;
  for_each_scenario(inst, [&](const std::vector<Units>& sizes, double p) {
    Realized x = play(inst, policy, sizes);
    e.value += p * x.value;
    if (x.overflow) e.overflow_prob += p;
  });
  return e;
}

// Optimal adaptive value by unmemoized recursion over (items left,
// remaining capacity, value so far).
inline double optimal_adaptive(const Instance& inst) {
  if (inst.size() > 6) throw size_limit_error("brute force adaptive search is limited to n <= 6");
  const bool risky = inst.variant() == Variant::Risky;
  std::vector<char> used(inst.size(), 0);
  std::function<double(Units, double)> best = [&](Units r, double acc) {
    double v = acc;
    for (ItemId i = 0; i < inst.size(); ++i) {
      if (used[i]) continue;
      used[i] = 1;
      double cont = 0.0;
      for (const auto& a : inst.item(i).dist.atoms()) {
        if (a.size <= r)
          cont += a.prob * best(r - a.size, acc + inst.item(i).value);
        else
          cont += a.prob * (risky ? 0.0 : acc);
      }
      used[i] = 0;
      v = std::max(v, cont);
    }
    return v;
  };
  return best(inst.scale(), 0.0);
}

// Best fixed order over all ordered subsets, each scored by scenario
// enumeration.
inline double optimal_nonadaptive(const Instance& inst) {
  if (inst.size() > 5) throw size_limit_error("brute force non-adaptive search is limited to n <= 5");
  double best = 0.0;
  const std::size_t n = inst.size();
  for (std::size_t mask = 1; mask < (std::size_t{1} << n); ++mask) {
    std::vector<ItemId> order;
    for (ItemId i = 0; i < n; ++i)
      if (mask >> i & 1) order.push_back(i);
    do {
      best = std::max(best, expected(inst, NonAdaptivePlan{order}).value);
    } while (std::next_permutation(order.begin(), order.end()));
  }
  return best;
}

}  // namespace skadapt::brute
