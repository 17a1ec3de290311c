#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "skadapt/model.hpp"
#include "skadapt/policy.hpp"
#include "skadapt/sumdist.hpp"

namespace skadapt {

struct EvalResult {
  double expected_value = 0.0;
  double overflow_prob = 0.0;
  int queries_used = 0;      // max observations along any reachable path
  std::size_t states = 0;    // distinct decision states visited
};

// Raised when exact branching would visit more states than allowed.
struct branch_explosion_error : size_limit_error {
  using size_limit_error::size_limit_error;
};

struct EvalOptions {
  std::size_t node_budget = 4'000'000;
};

inline constexpr double kDriftTol = 1e-9;

namespace detail {

// Result of running a policy from some decision point onward, relative to
// the value already accumulated: Risky total = acc * p_ok + gain, NonRisky
// total = acc + gain.
struct Outcome {
  double p_ok = 1.0;
  double gain = 0.0;
  int queries = 0;
};

inline void check_drift(const SumDist& d) {
  if (std::abs(d.total_mass() - 1.0) > kDriftTol)
    throw std::logic_error("probability drift " + std::to_string(d.total_mass() - 1.0) +
                           " exceeds budget");
}

// Inserts `block` at remaining capacity r. If everything fits and `cont` is
// set, the process continues at the new remaining capacity; `obs_cost` is 1
// when that continuation counts as an observation.
template <class Cont>
Outcome apply_block(const Instance& inst, BlockDistCache& cache, std::span<const ItemId> block,
                    Units r, bool has_cont, int obs_cost, Cont&& cont) {
  if (block.empty()) return {};
  auto pre = cache.prefixes(block);
  const SumDist& total = *pre.back();
  check_drift(total);
  Outcome out;
  out.p_ok = 0.0;
  double vb = 0.0;
  for (ItemId i : block) vb += inst.item(i).value;
  const bool risky = inst.variant() == Variant::Risky;
  if (!risky)
    for (std::size_t j = 0; j < block.size(); ++j)
      out.gain += inst.item(block[j]).value * pre[j]->prob_at_most(r);
  for (const auto& a : total.atoms) {
    if (a.size > r) break;
    Outcome ch = has_cont ? cont(r - a.size) : Outcome{};
    out.p_ok += a.prob * ch.p_ok;
    out.gain += risky ? a.prob * (vb * ch.p_ok + ch.gain) : a.prob * ch.gain;
    out.queries = std::max(out.queries, ch.queries + (has_cont ? obs_cost : 0));
  }
  return out;
}

inline EvalResult to_result(const Outcome& o, std::size_t states) {
  EvalResult r;
  r.expected_value = std::max(0.0, o.gain);
  r.overflow_prob = std::clamp(1.0 - o.p_ok, 0.0, 1.0);
  r.queries_used = o.queries;
  r.states = states;
  return r;
}

struct PairHash {
  std::size_t operator()(const std::pair<const void*, Units>& k) const noexcept {
    return std::hash<const void*>{}(k.first) ^ (UnitsHash{}(k.second) * 0x9e3779b97f4a7c15ULL);
  }
};

}  // namespace detail

inline EvalResult eval_nonadaptive(const Instance& inst, const NonAdaptivePlan& plan) {
  check_block(inst, plan.order);
  BlockDistCache cache(inst);
  auto o = detail::apply_block(inst, cache, plan.order, inst.scale(), false, 0,
                               [](Units) { return detail::Outcome{}; });
  return detail::to_result(o, 1);
}

// Checks interval structure at every node, item ids, the no-repeat rule on
// every root-to-leaf path and the declared query budget.
inline void validate_tree(const Instance& inst, const TreePolicy& tree) {
  if (!tree.root) throw std::invalid_argument("tree has no root");
  std::unordered_set<std::string> seen;
  std::function<void(const NodePtr&, std::string&)> walk = [&](const NodePtr& n, std::string& path) {
    std::string key(reinterpret_cast<const char*>(n.get()), sizeof(void*));
    key += path;
    if (!seen.insert(key).second) return;
    check_intervals(*n, inst.scale());
    std::string next = path;
    for (ItemId i : n->insert) {
      if (i >= inst.size())
        throw std::invalid_argument("tree item id " + std::to_string(i + 1) + " out of range");
      if (next[i]) throw std::invalid_argument("item " + std::to_string(i + 1) + " repeats along a tree path");
      next[i] = 1;
    }
    for (const auto& b : n->children) walk(b.node, next);
  };
  std::string path(inst.size(), '\0');
  walk(tree.root, path);
}

inline EvalResult eval_tree(const Instance& inst, const TreePolicy& tree, const EvalOptions& opt = {}) {
  validate_tree(inst, tree);
  BlockDistCache cache(inst);
  std::unordered_map<std::pair<const void*, Units>, detail::Outcome, detail::PairHash> memo;
  std::function<detail::Outcome(const DecisionNode&, Units)> visit = [&](const DecisionNode& n, Units r) {
    auto key = std::make_pair(static_cast<const void*>(&n), r);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    if (memo.size() >= opt.node_budget)
      throw branch_explosion_error("tree evaluation exceeded the node budget; use --method mc");
    auto o = detail::apply_block(inst, cache, n.insert, r, !n.children.empty(), n.observes() ? 1 : 0,
                                 [&](Units r2) {
                                   const Branch* b = select_child(n, r2);
                                   return visit(*b->node, r2);
                                 });
    memo.emplace(key, o);
    return o;
  };
  auto root = visit(*tree.root, inst.scale());
  auto res = detail::to_result(root, memo.size());
  if (tree.query_budget >= 0 && res.queries_used > tree.query_budget)
    throw std::invalid_argument("tree makes " + std::to_string(res.queries_used) +
                                " observations, more than its budget " + std::to_string(tree.query_budget));
  return res;
}

inline EvalResult eval_procedural(const Instance& inst, const ProceduralPolicy& policy,
                                  const EvalOptions& opt = {}) {
  if (!policy.rule) throw std::invalid_argument("procedural policy has no rule");
  struct Key {
    std::vector<ItemId> inserted;
    std::size_t stage;
    int queries;
    Units remaining;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept {
      std::size_t h = UnitsHash{}(k.remaining) ^ (k.stage * 0x9e3779b97f4a7c15ULL) ^
                      (static_cast<std::size_t>(k.queries) << 48);
      for (ItemId i : k.inserted) h = (h ^ (i + 0x7f4a7c15ULL)) * 1099511628211ULL;
      return h;
    }
  };
  BlockDistCache cache(inst);
  std::unordered_map<Key, detail::Outcome, KeyHash> memo;
  std::vector<ItemId> inserted;
  std::vector<char> used(inst.size(), 0);

  std::function<detail::Outcome(std::size_t, int, Units)> visit = [&](std::size_t stage, int q, Units r) {
    Key key{inserted, stage, q, r};
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    if (memo.size() >= opt.node_budget)
      throw branch_explosion_error("exact evaluation of '" + policy.family +
                                   "' exceeded the node budget; use --method mc");
    Step st = policy.rule->next(Observation{r, stage, q, inserted});
    for (ItemId i : st.block) {
      if (i >= inst.size()) throw std::invalid_argument("policy inserts unknown item " + std::to_string(i + 1));
      if (used[i]) throw std::invalid_argument("policy inserts item " + std::to_string(i + 1) + " twice");
    }
    check_block(inst, st.block);
    auto o = detail::apply_block(inst, cache, st.block, r, st.observe, 1, [&](Units r2) {
      for (ItemId i : st.block) {
        inserted.push_back(i);
        used[i] = 1;
      }
      auto child = visit(st.next_stage, q + 1, r2);
      for (ItemId i : st.block) used[i] = 0;
      inserted.resize(inserted.size() - st.block.size());
      return child;
    });
    memo.emplace(std::move(key), o);
    return o;
  };
  auto root = visit(0, 0, inst.scale());
  return detail::to_result(root, memo.size());
}

inline EvalResult evaluate_exact(const Instance& inst, const Policy& policy, const EvalOptions& opt = {}) {
  return std::visit(
      [&](const auto& p) -> EvalResult {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, NonAdaptivePlan>)
          return eval_nonadaptive(inst, p);
        else if constexpr (std::is_same_v<T, TreePolicy>)
          return eval_tree(inst, p, opt);
        else
          return eval_procedural(inst, p, opt);
      },
      policy);
}

// ---------------------------------------------------------------------------
// Optimal-policy oracles.

using ItemMask = std::uint64_t;

inline ItemMask full_mask(std::size_t n) { return n >= 64 ? ~ItemMask{0} : (ItemMask{1} << n) - 1; }

// Permitted root-to-leaf item sets: a policy may only hold item sets that are
// contained in at least one of them. Empty means unconstrained.
struct TreeConstraint {
  std::vector<ItemMask> paths;

  bool allows(ItemMask set) const {
    if (paths.empty()) return true;
    for (ItemMask p : paths)
      if ((set & ~p) == 0) return true;
    return false;
  }
};

struct OracleLimits {
  std::size_t adaptive_n = 15;
  std::size_t nonadaptive_risky_n = 15;
  std::size_t nonadaptive_nonrisky_n = 12;
  std::size_t semi_n = 8;
  std::size_t state_budget = 30'000'000;
};

struct AdaptiveSolution {
  double value = 0.0;
  TreePolicy tree;
  std::size_t states = 0;
};

struct NonAdaptiveSolution {
  double value = 0.0;
  NonAdaptivePlan plan;
};

struct SemiAdaptiveSolution {
  double value = 0.0;
  int k = 0;
  TreePolicy tree;
  std::size_t states = 0;
};

namespace detail {

struct FitAtom {
  Units size;
  double prob;
};

inline std::vector<std::vector<FitAtom>> fit_atoms(const Instance& inst) {
  std::vector<std::vector<FitAtom>> out(inst.size());
  for (ItemId i = 0; i < inst.size(); ++i)
    for (const auto& a : inst.item(i).dist.atoms())
      if (a.size <= inst.scale()) out[i].push_back({a.size, a.prob});
  return out;
}

struct MaskCapKey {
  ItemMask mask;
  Units cap;
  int q;
  bool operator==(const MaskCapKey&) const = default;
};

struct MaskCapHash {
  std::size_t operator()(const MaskCapKey& k) const noexcept {
    std::size_t h = UnitsHash{}(k.cap);
    h ^= (k.mask + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
    h ^= static_cast<std::size_t>(k.q) * 0xc2b2ae3d27d4eb4fULL;
    return h;
  }
};

// Children covering [0, scale] for the sorted distinct reachable remaining
// capacities `caps`; child j gets (caps[j-1], caps[j]], the last extends to
// scale.
inline std::vector<Branch> cover_branches(const std::vector<std::pair<Units, NodePtr>>& caps, Units scale) {
  std::vector<Branch> out;
  Units lo = 0;
  for (std::size_t j = 0; j < caps.size(); ++j) {
    Units hi = j + 1 == caps.size() ? scale : caps[j].first;
    out.push_back({lo, hi, caps[j].second});
    lo = hi + 1;
  }
  return out;
}

inline void check_limit(std::size_t n, std::size_t limit, const char* what) {
  if (n > limit)
    throw size_limit_error(std::string(what) + ": n = " + std::to_string(n) + " exceeds the exact-oracle limit " +
                           std::to_string(limit));
  if (n > 63) throw size_limit_error(std::string(what) + ": more than 63 items");
}

// With a constraint only subsets of the permitted paths are reachable, so
// the longest path is what has to fit the limit.
inline void check_limit(std::size_t n, const TreeConstraint& c, std::size_t limit, const char* what) {
  if (c.paths.empty()) return check_limit(n, limit, what);
  std::size_t longest = 0;
  for (ItemMask p : c.paths) longest = std::max<std::size_t>(longest, std::popcount(p));
  check_limit(longest, limit, what);
  if (n > 63) throw size_limit_error(std::string(what) + ": more than 63 items");
}

}  // namespace detail

// Fully adaptive optimum. Decisions depend on (items left, remaining
// capacity); the Risky accumulated value is recovered as v(all) - v(left).
class AdaptiveOracle {
 public:
  AdaptiveOracle(const Instance& inst, TreeConstraint constraint = {}, OracleLimits limits = {})
      : inst_(inst), constraint_(std::move(constraint)), limits_(limits), atoms_(detail::fit_atoms(inst)) {
    detail::check_limit(inst.size(), constraint_, limits_.adaptive_n, "optimal_adaptive");
    total_value_ = inst.total_value();
  }

  double value() { return solve(full_mask(inst_.size()), inst_.scale()).value; }

  // -1 means stop.
  int choice(ItemMask left, Units cap) { return solve(left, cap).choice; }

  TreePolicy tree() {
    std::unordered_map<detail::MaskCapKey, NodePtr, detail::MaskCapHash> built;
    std::function<NodePtr(ItemMask, Units)> build = [&](ItemMask left, Units cap) -> NodePtr {
      detail::MaskCapKey key{left, cap, 0};
      if (auto it = built.find(key); it != built.end()) return it->second;
      int i = solve(left, cap).choice;
      NodePtr node;
      if (i < 0) {
        node = make_stop();
      } else {
        std::vector<std::pair<Units, NodePtr>> caps;
        for (auto it = atoms_[i].rbegin(); it != atoms_[i].rend(); ++it)
          if (it->size <= cap) caps.emplace_back(cap - it->size, build(left & ~(ItemMask{1} << i), cap - it->size));
        node = make_node({static_cast<ItemId>(i)}, detail::cover_branches(caps, inst_.scale()));
      }
      built.emplace(key, node);
      return node;
    };
    return {build(full_mask(inst_.size()), inst_.scale()), -1};
  }

  std::size_t states() const { return memo_.size(); }

 private:
  struct Entry {
    double value;
    int choice;
  };

  double left_value(ItemMask left) const {
    double v = 0.0;
    for (ItemId i = 0; i < inst_.size(); ++i)
      if (left >> i & 1) v += inst_.item(i).value;
    return v;
  }

  Entry solve(ItemMask left, Units cap) {
    detail::MaskCapKey key{left, cap, 0};
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    if (memo_.size() >= limits_.state_budget)
      throw size_limit_error("optimal_adaptive: state budget exhausted");
    const bool risky = inst_.variant() == Variant::Risky;
    const ItemMask held = full_mask(inst_.size()) & ~left;
    Entry best{risky ? total_value_ - left_value(left) : 0.0, -1};
    for (ItemId i = 0; i < inst_.size(); ++i) {
      if (!(left >> i & 1)) continue;
      if (!constraint_.allows(held | (ItemMask{1} << i))) continue;
      const ItemMask rest = left & ~(ItemMask{1} << i);
      double v = 0.0;
      for (const auto& a : atoms_[i]) {
        if (a.size > cap) break;
        double sub = solve(rest, cap - a.size).value;
        v += a.prob * (risky ? sub : inst_.item(i).value + sub);
      }
      if (v > best.value + 1e-15 * std::max(1.0, std::abs(best.value))) best = {v, static_cast<int>(i)};
    }
    memo_.emplace(key, best);
    return best;
  }

  const Instance& inst_;
  TreeConstraint constraint_;
  OracleLimits limits_;
  std::vector<std::vector<detail::FitAtom>> atoms_;
  double total_value_ = 0.0;
  std::unordered_map<detail::MaskCapKey, Entry, detail::MaskCapHash> memo_;
};

inline AdaptiveSolution optimal_adaptive(const Instance& inst, bool with_tree = true,
                                         const TreeConstraint& constraint = {}, OracleLimits limits = {}) {
  AdaptiveOracle oracle(inst, constraint, limits);
  AdaptiveSolution sol;
  sol.value = oracle.value();
  if (with_tree) sol.tree = oracle.tree();
  sol.states = oracle.states();
  return sol;
}

namespace detail {

// Pr(S(B) <= scale) for every subset B, by depth-first convolution.
inline std::vector<double> subset_fit_probs(const Instance& inst) {
  const std::size_t n = inst.size();
  std::vector<double> fit(std::size_t{1} << n, 0.0);
  std::vector<SumDist> stack;
  stack.push_back(point_mass(inst.scale()));
  std::function<void(std::size_t, ItemMask)> dfs = [&](std::size_t i, ItemMask mask) {
    if (i == n) {
      fit[mask] = stack.back().fit_prob();
      return;
    }
    dfs(i + 1, mask);
    stack.push_back(convolve(stack.back(), inst.item(i).dist, inst.scale()));
    dfs(i + 1, mask | (ItemMask{1} << i));
    stack.pop_back();
  };
  dfs(0, 0);
  return fit;
}

// Pr(S(B) <= scale) for every subset B of a permitted path.
inline std::unordered_map<ItemMask, double> path_subset_fit_probs(const Instance& inst, const TreeConstraint& c) {
  std::unordered_map<ItemMask, double> fit;
  for (ItemMask path : c.paths) {
    std::vector<ItemId> ids;
    for (ItemId i = 0; i < inst.size(); ++i)
      if (path >> i & 1) ids.push_back(i);
    std::vector<SumDist> stack{point_mass(inst.scale())};
    std::function<void(std::size_t, ItemMask)> dfs = [&](std::size_t j, ItemMask mask) {
      if (j == ids.size()) {
        fit.emplace(mask, stack.back().fit_prob());
        return;
      }
      dfs(j + 1, mask);
      stack.push_back(convolve(stack.back(), inst.item(ids[j]).dist, inst.scale()));
      dfs(j + 1, mask | (ItemMask{1} << ids[j]));
      stack.pop_back();
    };
    dfs(0, 0);
  }
  return fit;
}

inline std::vector<ItemId> mask_items(ItemMask m) {
  std::vector<ItemId> out;
  for (ItemId i = 0; m; ++i, m >>= 1)
    if (m & 1) out.push_back(i);
  return out;
}

// Same search as the unconstrained one, over the subsets of the permitted
// paths only.
inline NonAdaptiveSolution constrained_nonadaptive(const Instance& inst, const TreeConstraint& c) {
  auto fit = path_subset_fit_probs(inst, c);
  std::vector<ItemMask> masks;
  for (const auto& [m, p] : fit)
    if (m) masks.push_back(m);
  std::sort(masks.begin(), masks.end(), [](ItemMask a, ItemMask b) {
    int pa = std::popcount(a), pb = std::popcount(b);
    return pa != pb ? pa < pb : a < b;
  });
  auto vsum = [&](ItemMask m) {
    double v = 0.0;
    for (ItemId i : mask_items(m)) v += inst.item(i).value;
    return v;
  };
  NonAdaptiveSolution sol;
  ItemMask best_set = 0;
  if (inst.variant() == Variant::Risky) {
    for (ItemMask m : masks) {
      double v = vsum(m) * fit.at(m);
      if (v > sol.value + 1e-15) {
        sol.value = v;
        best_set = m;
      }
    }
    sol.plan.order = mask_items(best_set);
    return sol;
  }
  std::unordered_map<ItemMask, std::pair<double, int>> best{{0, {0.0, -1}}};
  for (ItemMask m : masks) {
    std::pair<double, int> b{-1.0, -1};
    for (ItemId i : mask_items(m)) {
      double v = best.at(m & ~(ItemMask{1} << i)).first + inst.item(i).value * fit.at(m);
      if (b.second < 0 || v > b.first + 1e-15) b = {v, static_cast<int>(i)};
    }
    best.emplace(m, b);
    if (b.first > sol.value + 1e-15) {
      sol.value = b.first;
      best_set = m;
    }
  }
  std::vector<ItemId> rev;
  for (ItemMask m = best_set; m != 0; m &= ~(ItemMask{1} << best.at(m).second)) rev.push_back(best.at(m).second);
  sol.plan.order.assign(rev.rbegin(), rev.rend());
  return sol;
}

}  // namespace detail

inline NonAdaptiveSolution optimal_nonadaptive(const Instance& inst, const TreeConstraint& constraint = {},
                                               OracleLimits limits = {}) {
  const std::size_t n = inst.size();
  const bool risky = inst.variant() == Variant::Risky;
  detail::check_limit(n, constraint, risky ? limits.nonadaptive_risky_n : limits.nonadaptive_nonrisky_n,
                      "optimal_nonadaptive");
  if (!constraint.paths.empty()) return detail::constrained_nonadaptive(inst, constraint);
  auto fit = detail::subset_fit_probs(inst);
  const std::size_t subsets = std::size_t{1} << n;
  std::vector<double> vsum(subsets, 0.0);
  for (std::size_t b = 1; b < subsets; ++b) {
    int low = std::countr_zero(b);
    vsum[b] = vsum[b & (b - 1)] + inst.item(low).value;
  }
  NonAdaptiveSolution sol;
  ItemMask best_set = 0;
  if (risky) {
    for (std::size_t b = 1; b < subsets; ++b) {
      if (!constraint.allows(b)) continue;
      double v = vsum[b] * fit[b];
      if (v > sol.value + 1e-15) {
        sol.value = v;
        best_set = b;
      }
    }
    for (ItemId i = 0; i < n; ++i)
      if (best_set >> i & 1) sol.plan.order.push_back(i);
    return sol;
  }
  // best[B]: best ordering of exactly B; the last item fits iff S(B) fits.
  std::vector<double> best(subsets, 0.0);
  std::vector<int> last(subsets, -1);
  for (std::size_t b = 1; b < subsets; ++b) {
    if (!constraint.allows(b)) {
      best[b] = -1.0;
      continue;
    }
    for (ItemId i = 0; i < n; ++i) {
      if (!(b >> i & 1)) continue;
      std::size_t prev = b & ~(std::size_t{1} << i);
      if (best[prev] < 0.0) continue;
      double v = best[prev] + inst.item(i).value * fit[b];
      if (last[b] < 0 || v > best[b] + 1e-15) {
        best[b] = v;
        last[b] = static_cast<int>(i);
      }
    }
    if (last[b] < 0) best[b] = -1.0;
    if (best[b] > sol.value + 1e-15) {
      sol.value = best[b];
      best_set = b;
    }
  }
  std::vector<ItemId> rev;
  for (std::size_t b = best_set; b != 0; b &= ~(std::size_t{1} << last[b])) rev.push_back(last[b]);
  sol.plan.order.assign(rev.rbegin(), rev.rend());
  return sol;
}

// Optimal policy with at most k observations. A state is (items left,
// remaining capacity, queries left); a move inserts a nonempty block and,
// if queries remain, observes the remaining capacity afterwards.
class SemiAdaptiveOracle {
 public:
  SemiAdaptiveOracle(const Instance& inst, TreeConstraint constraint = {}, OracleLimits limits = {})
      : inst_(inst), constraint_(std::move(constraint)), limits_(limits) {
    detail::check_limit(inst.size(), limits_.semi_n, "optimal_k_semi_adaptive");
    const std::size_t subsets = std::size_t{1} << inst.size();
    dists_.resize(subsets);
    vsum_.assign(subsets, 0.0);
    dists_[0] = point_mass(inst.scale());
    for (std::size_t b = 1; b < subsets; ++b) {
      int low = std::countr_zero(b);
      dists_[b] = convolve(dists_[b & (b - 1)], inst.item(low).dist, inst.scale());
      vsum_[b] = vsum_[b & (b - 1)] + inst.item(low).value;
    }
  }

  double value(int k) { return solve(full_mask(inst_.size()), inst_.scale(), k).value; }

  TreePolicy tree(int k) {
    std::unordered_map<detail::MaskCapKey, NodePtr, detail::MaskCapHash> built;
    std::function<NodePtr(ItemMask, Units, int)> build = [&](ItemMask left, Units cap, int q) -> NodePtr {
      detail::MaskCapKey key{left, cap, q};
      if (auto it = built.find(key); it != built.end()) return it->second;
      Entry e = solve(left, cap, q);
      NodePtr node;
      if (e.block == 0) {
        node = make_stop();
      } else {
        std::vector<ItemId> order = block_order(e.block, cap);
        if (q == 0) {
          node = make_node(order);
        } else {
          std::vector<std::pair<Units, NodePtr>> caps;
          const auto& atoms = dists_[e.block].atoms;
          for (auto it = atoms.rbegin(); it != atoms.rend(); ++it)
            if (it->size <= cap)
              caps.emplace_back(cap - it->size, build(left & ~e.block, cap - it->size, q - 1));
          node = make_node(order, detail::cover_branches(caps, inst_.scale()));
        }
      }
      built.emplace(key, node);
      return node;
    };
    return {build(full_mask(inst_.size()), inst_.scale(), k), k};
  }

  std::size_t states() const { return memo_.size(); }

 private:
  struct Entry {
    double value;
    ItemMask block;  // 0: stop
  };

  // Best NonRisky value of inserting exactly `b` at capacity cap (subset DP
  // over the last item), with the ordering recovered on demand.
  double best_order_value(ItemMask b, Units cap) {
    if (b == 0) return 0.0;
    detail::MaskCapKey key{b, cap, -1};
    if (auto it = order_memo_.find(key); it != order_memo_.end()) return it->second.first;
    double fit = dists_[b].prob_at_most(cap);
    double best = -1.0;
    int arg = -1;
    for (ItemId i = 0; i < inst_.size(); ++i) {
      if (!(b >> i & 1)) continue;
      double v = best_order_value(b & ~(ItemMask{1} << i), cap) + inst_.item(i).value * fit;
      if (v > best + 1e-15) {
        best = v;
        arg = static_cast<int>(i);
      }
    }
    order_memo_.emplace(key, std::make_pair(best, arg));
    return best;
  }

  std::vector<ItemId> block_order(ItemMask b, Units cap) {
    std::vector<ItemId> out;
    if (inst_.variant() == Variant::Risky) {
      for (ItemId i = 0; i < inst_.size(); ++i)
        if (b >> i & 1) out.push_back(i);
      return out;
    }
    while (b != 0) {
      best_order_value(b, cap);
      int last = order_memo_.at({b, cap, -1}).second;
      out.push_back(static_cast<ItemId>(last));
      b &= ~(ItemMask{1} << last);
    }
    std::reverse(out.begin(), out.end());
    return out;
  }

  Entry solve(ItemMask left, Units cap, int q) {
    detail::MaskCapKey key{left, cap, q};
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    if (memo_.size() >= limits_.state_budget)
      throw size_limit_error("optimal_k_semi_adaptive: state budget exhausted");
    const bool risky = inst_.variant() == Variant::Risky;
    const ItemMask all = full_mask(inst_.size());
    const ItemMask held = all & ~left;
    const double acc = risky ? vsum_[held] : 0.0;
    Entry best{acc, 0};
    // Enumerate nonempty sub-blocks of `left`.
    for (ItemMask b = left; b != 0; b = (b - 1) & left) {
      if (!constraint_.allows(held | b)) continue;
      double v = 0.0;
      if (q == 0) {
        v = risky ? dists_[b].prob_at_most(cap) * (acc + vsum_[b]) : best_order_value(b, cap);
      } else {
        if (!risky) v = best_order_value(b, cap);
        for (const auto& a : dists_[b].atoms) {
          if (a.size > cap) break;
          v += a.prob * solve(left & ~b, cap - a.size, q - 1).value;
        }
      }
      if (v > best.value + 1e-15 * std::max(1.0, std::abs(best.value)) ||
          (best.block != 0 && std::abs(v - best.value) <= 1e-15 * std::max(1.0, std::abs(best.value)) &&
           std::popcount(b) < std::popcount(best.block)))
        best = {v, b};
    }
    memo_.emplace(key, best);
    return best;
  }

  const Instance& inst_;
  TreeConstraint constraint_;
  OracleLimits limits_;
  std::vector<SumDist> dists_;
  std::vector<double> vsum_;
  std::unordered_map<detail::MaskCapKey, Entry, detail::MaskCapHash> memo_;
  std::unordered_map<detail::MaskCapKey, std::pair<double, int>, detail::MaskCapHash> order_memo_;
};

inline SemiAdaptiveSolution optimal_k_semi_adaptive(const Instance& inst, int k, bool with_tree = true,
                                                    const TreeConstraint& constraint = {},
                                                    OracleLimits limits = {}) {
  if (k < 0) throw std::invalid_argument("k must be >= 0");
  SemiAdaptiveOracle oracle(inst, constraint, limits);
  SemiAdaptiveSolution sol;
  sol.k = k;
  sol.value = oracle.value(k);
  if (with_tree) sol.tree = oracle.tree(k);
  sol.states = oracle.states();
  return sol;
}

}  // namespace skadapt
