#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "skadapt/evalexact.hpp"
#include "skadapt/model.hpp"
#include "skadapt/parallel.hpp"
#include "skadapt/policy.hpp"

namespace skadapt {

struct McConfig {
  std::uint64_t samples = 100'000;
  std::uint64_t seed = 1;
  double ci_level = 0.99;
  int workers = 0;  // 0: SK_ADAPT_WORKERS or hardware concurrency
};

struct McResult {
  double mean = 0.0;
  double std_error = 0.0;
  double ci_halfwidth = 0.0;
  double overflow_freq = 0.0;
  std::uint64_t samples = 0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Uniform in [0,1) keyed by (seed, sample, item); no shared stream.
inline double keyed_uniform(std::uint64_t seed, std::uint64_t sample, std::uint64_t item) {
  std::uint64_t h = splitmix64(seed ^ splitmix64(sample * 0xd1b54a32d192ed03ULL + 0x8cb92ba72f3d8dd7ULL));
  h = splitmix64(h ^ (item * 0xa24baed4963ee407ULL + 0x9fb21c651e98df25ULL));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

inline Units sample_size(const DiscreteDist& d, double u) {
  double cum = 0.0;
  auto atoms = d.atoms();
  for (const auto& a : atoms) {
    cum += a.prob;
    if (u < cum) return a.size;
  }
  return atoms.back().size;
}

struct Run {
  double value = 0.0;
  bool overflow = false;
};

class Simulator {
 public:
  Simulator(const Instance& inst, std::uint64_t seed) : inst_(inst), seed_(seed) {}

  Run run(const Policy& policy, std::uint64_t sample) const {
    return std::visit(
        [&](const auto& p) -> Run {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, NonAdaptivePlan>)
            return run_plan(p, sample);
          else if constexpr (std::is_same_v<T, TreePolicy>)
            return run_tree(p, sample);
          else
            return run_rule(p, sample);
        },
        policy);
  }

 private:
  struct State {
    Units remaining;
    double value = 0.0;
    bool overflow = false;
  };

  // False once the knapsack has overflowed.
  bool insert(State& s, ItemId i, std::uint64_t sample) const {
    Units size = sample_size(inst_.item(i).dist, keyed_uniform(seed_, sample, i));
    if (size > s.remaining) {
      s.overflow = true;
      if (inst_.variant() == Variant::Risky) s.value = 0.0;
      return false;
    }
    s.remaining -= size;
    s.value += inst_.item(i).value;
    return true;
  }

  Run run_plan(const NonAdaptivePlan& plan, std::uint64_t sample) const {
    State s{inst_.scale()};
    for (ItemId i : plan.order)
      if (!insert(s, i, sample)) break;
    return {s.value, s.overflow};
  }

  Run run_tree(const TreePolicy& tree, std::uint64_t sample) const {
    State s{inst_.scale()};
    const DecisionNode* node = tree.root.get();
    while (node && !node->is_stop()) {
      for (ItemId i : node->insert)
        if (!insert(s, i, sample)) return {s.value, s.overflow};
      if (node->children.empty()) break;
      const Branch* b = select_child(*node, s.remaining);
      node = b ? b->node.get() : nullptr;
    }
    return {s.value, s.overflow};
  }

  Run run_rule(const ProceduralPolicy& pol, std::uint64_t sample) const {
    State s{inst_.scale()};
    std::vector<ItemId> inserted;
    std::size_t stage = 0;
    int queries = 0;
    for (;;) {
      Step st = pol.rule->next(Observation{s.remaining, stage, queries, inserted});
      if (st.block.empty()) break;
      for (ItemId i : st.block) {
        if (!insert(s, i, sample)) return {s.value, s.overflow};
        inserted.push_back(i);
      }
      if (!st.observe) break;
      stage = st.next_stage;
      ++queries;
    }
    return {s.value, s.overflow};
  }

  const Instance& inst_;
  std::uint64_t seed_;
};

// Welford block, merged in block order (Chan et al.).
struct Moments {
  double n = 0.0, mean = 0.0, m2 = 0.0, overflows = 0.0;

  void add(double x, bool overflow) {
    n += 1.0;
    double d = x - mean;
    mean += d / n;
    m2 += d * (x - mean);
    overflows += overflow ? 1.0 : 0.0;
  }

  void merge(const Moments& o) {
    if (o.n == 0.0) return;
    if (n == 0.0) {
      *this = o;
      return;
    }
    double total = n + o.n;
    double d = o.mean - mean;
    mean += d * o.n / total;
    m2 += o.m2 + d * d * n * o.n / total;
    overflows += o.overflows;
    n = total;
  }
};

inline constexpr std::uint64_t kMcBlock = 4096;

}  // namespace detail

inline void check_policy_ids(const Instance& inst, const Policy& policy) {
  if (const auto* plan = std::get_if<NonAdaptivePlan>(&policy)) check_block(inst, plan->order);
  if (const auto* tree = std::get_if<TreePolicy>(&policy)) validate_tree(inst, *tree);
  if (const auto* pp = std::get_if<ProceduralPolicy>(&policy))
    if (!pp->rule) throw std::invalid_argument("procedural policy has no rule");
}

// Results are bit-identical for any worker count: samples are split into
// fixed blocks whose moments are merged in block order.
inline McResult simulate(const Instance& inst, const Policy& policy, const McConfig& cfg) {
  if (cfg.samples < 1) throw std::invalid_argument("samples must be >= 1");
  if (!(cfg.ci_level > 0.0 && cfg.ci_level < 1.0)) throw std::invalid_argument("ci_level must lie in (0,1)");
  check_policy_ids(inst, policy);
  detail::Simulator sim(inst, cfg.seed);
  const std::uint64_t blocks = (cfg.samples + detail::kMcBlock - 1) / detail::kMcBlock;
  std::vector<detail::Moments> parts(blocks);
  parallel_tasks(blocks, resolve_workers(cfg.workers), [&](std::size_t b) {
    std::uint64_t lo = b * detail::kMcBlock;
    std::uint64_t hi = std::min<std::uint64_t>(cfg.samples, lo + detail::kMcBlock);
    for (std::uint64_t s = lo; s < hi; ++s) {
      auto r = sim.run(policy, s);
      parts[b].add(r.value, r.overflow);
    }
  });
  detail::Moments all;
  for (const auto& m : parts) all.merge(m);
  McResult res;
  res.samples = cfg.samples;
  res.mean = all.mean;
  double var = all.n > 1.0 ? std::max(0.0, all.m2 / (all.n - 1.0)) : 0.0;
  res.std_error = std::sqrt(var / all.n);
  boost::math::normal_distribution<double> z01;
  res.ci_halfwidth = boost::math::quantile(z01, 0.5 + cfg.ci_level / 2.0) * res.std_error;
  res.overflow_freq = all.overflows / all.n;
  return res;
}

// Keep inserting in greedy order until something overflows.
inline McResult simulate_always_insert(const Instance& inst, const McConfig& cfg) {
  if (inst.variant() == Variant::Risky)
    throw std::invalid_argument("always-insert is only meaningful for the non-risky variant");
  return simulate(inst, NonAdaptivePlan{greedy_order(inst)}, cfg);
}

enum class EvalMethod { Exact, MonteCarlo, Auto };

struct PolicyValue {
  double value = 0.0;
  double overflow_prob = 0.0;
  bool exact = true;
  double std_error = 0.0;
};

// Exact when possible; Auto falls back to Monte Carlo on branch explosion.
inline PolicyValue evaluate(const Instance& inst, const Policy& policy, EvalMethod method,
                            const McConfig& cfg = {}, const EvalOptions& opt = {}) {
  if (method != EvalMethod::MonteCarlo) {
    try {
      auto r = evaluate_exact(inst, policy, opt);
      return {r.expected_value, r.overflow_prob, true, 0.0};
    } catch (const branch_explosion_error&) {
      if (method == EvalMethod::Exact) throw;
    }
  }
  auto mc = simulate(inst, policy, cfg);
  return {mc.mean, mc.overflow_freq, false, mc.std_error};
}

inline double auto_value(const Instance& inst, const ProceduralPolicy& pol) {
  return evaluate(inst, pol, EvalMethod::Auto).value;
}

}  // namespace skadapt
