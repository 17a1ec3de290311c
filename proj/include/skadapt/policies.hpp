#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <unordered_map>
#include <vector>

#include "skadapt/evalexact.hpp"
#include "skadapt/lpbound.hpp"
#include "skadapt/model.hpp"
#include "skadapt/policy.hpp"
#include "skadapt/sumdist.hpp"

namespace skadapt {

// Slack for "mu(B) + mu_l <= budget" so that e.g. five items of mass 0.1
// fill a 0.5 budget despite rounding.
inline constexpr double kMassSlack = 1e-12;

inline constexpr double kFallbackConstant = 8.5;

struct GreedyPrefix {
  std::vector<ItemId> order;             // full greedy order
  std::vector<ItemId> block;             // B
  std::optional<ItemId> ell;             // first item that did not fit
  double alpha = 0.0;                    // mu(B)
  double beta = 0.0;                     // alpha + mu_l
  double gamma = 0.0;                    // w_l / Phi(1)
  double phi1 = 0.0;
};

inline GreedyPrefix half_prefix(const Instance& inst) {
  GreedyPrefix g;
  auto stats = derive_stats(inst);
  g.order = greedy_order(stats);
  g.phi1 = phi(stats, g.order, 1.0).value;
  std::size_t l = 0;
  while (l < g.order.size() && g.alpha + stats[g.order[l]].mean_truncated_size <= 0.5 + kMassSlack) {
    g.alpha += stats[g.order[l]].mean_truncated_size;
    g.block.push_back(g.order[l]);
    ++l;
  }
  g.beta = g.alpha;
  if (l < g.order.size()) {
    g.ell = g.order[l];
    g.beta = g.alpha + stats[*g.ell].mean_truncated_size;
    g.gamma = g.phi1 > 0.0 ? stats[*g.ell].effective_value / g.phi1 : 0.0;
  }
  return g;
}

template <std::size_t N>
std::size_t argmax_lowest(const std::array<double, N>& o) {
  std::size_t j = 0;
  for (std::size_t i = 1; i < N; ++i)
    if (o[i] > o[j]) j = i;
  return j + 1;
}

struct GreedyTrace {
  double alpha = 0.0, beta = 0.0, gamma = 0.0, phi1 = 0.0;
  std::array<double, 4> o{};
  int chosen = 0;  // 1..4; 0 when no item is left over or Phi(1) = 0
  std::vector<ItemId> block;
  std::optional<ItemId> ell;
};

inline GreedyTrace greedy_options(double alpha, double beta, double gamma) {
  GreedyTrace t;
  t.alpha = alpha;
  t.beta = beta;
  t.gamma = gamma;
  t.o = {alpha * (1 - alpha), (beta - gamma) * (1 - alpha), gamma, beta * (1 - beta)};
  t.chosen = static_cast<int>(argmax_lowest(t.o));
  return t;
}

inline std::pair<NonAdaptivePlan, GreedyTrace> non_adaptive_greedy(const Instance& inst) {
  if (inst.empty()) throw std::invalid_argument("non_adaptive_greedy: instance has no items");
  GreedyPrefix g = half_prefix(inst);
  GreedyTrace tr = greedy_options(g.alpha, g.beta, g.gamma);
  tr.phi1 = g.phi1;
  tr.block = g.block;
  tr.ell = g.ell;
  NonAdaptivePlan plan;
  if (g.phi1 <= 0.0) {
    tr.chosen = 0;
    tr.gamma = 0.0;
    return {plan, tr};
  }
  if (!g.ell) {
    tr.chosen = 0;
    plan.order = g.order;
    return {plan, tr};
  }
  switch (tr.chosen) {
    case 1:
    case 2: plan.order = g.block; break;
    case 3: plan.order = {*g.ell}; break;
    default:
      plan.order = g.block;
      plan.order.push_back(*g.ell);
  }
  return {plan, tr};
}

// ---------------------------------------------------------------------------
// One observation.

struct SemiTrace {
  double alpha = 0.0, beta = 0.0, gamma = 0.0, p = 0.0, phi1 = 0.0;
  double zeta = 0.0, t_star = 1.0, t_fallback = 1.0;
  bool used_fallback = false;
  bool option5_enabled = false;
  std::array<double, 5> o{};
  int chosen = 0;
  std::vector<ItemId> block;
  std::optional<ItemId> ell;
};

// The conditional-insert objective maximized over t in [zeta, 1].
inline double o5_objective(double alpha, double beta, double gamma, double p, double t) {
  if (!(t > 0.0)) return -std::numeric_limits<double>::infinity();
  double frac;
  if (alpha - p <= 0.0)
    frac = 0.0;
  else if (t >= 1.0)
    frac = std::numeric_limits<double>::infinity();
  else
    frac = (alpha - p) / (1.0 - t);
  double m = std::max(0.0, 1.0 - p - frac);
  double second = m > 0.0 ? m * (gamma - beta * (beta - alpha) / t) : 0.0;
  return (1.0 - p) * (beta - gamma) + second;
}

inline double semi_zeta(double alpha, double beta, double gamma, double p) {
  double z = 1.0 - 2.0 * (alpha - p) / (1.0 - p);
  if (gamma > 0.0) z = std::min(z, beta * (beta - alpha) / gamma);
  return z;
}

struct TMax {
  double t = 1.0;
  double value = -std::numeric_limits<double>::infinity();
};

// 64-point grid over [lo, 1], then golden-section search around the best
// grid point.
inline TMax maximize_o5(double alpha, double beta, double gamma, double p, double lo) {
  lo = std::clamp(lo, 1e-12, 1.0);
  auto f = [&](double t) { return o5_objective(alpha, beta, gamma, p, t); };
  constexpr int kGrid = 64;
  TMax best{1.0, f(1.0)};
  int best_j = kGrid;
  for (int j = 0; j <= kGrid; ++j) {
    double t = lo + (1.0 - lo) * j / kGrid;
    double v = f(t);
    if (v > best.value) {
      best = {t, v};
      best_j = j;
    }
  }
  double a = lo + (1.0 - lo) * std::max(0, best_j - 1) / kGrid;
  double b = lo + (1.0 - lo) * std::min(kGrid, best_j + 1) / kGrid;
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 100 && b - a > 1e-13; ++it) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
  }
  for (double t : {c, d}) {
    double v = f(t);
    if (v > best.value) best = {t, v};
  }
  return best;
}

inline SemiTrace semi_options(double alpha, double beta, double gamma, double p, bool optimize_t = true) {
  SemiTrace tr;
  tr.alpha = alpha;
  tr.beta = beta;
  tr.gamma = gamma;
  tr.p = p;
  tr.o[0] = alpha * (1 - p);
  tr.o[1] = (beta - gamma) * (1 - p);
  tr.o[2] = gamma;
  tr.o[3] = beta * (1 - beta);
  tr.o[4] = -std::numeric_limits<double>::infinity();
  tr.option5_enabled = p < 1.0;
  if (tr.option5_enabled) {
    tr.zeta = semi_zeta(alpha, beta, gamma, p);
    tr.t_fallback = 1.0 - 2.0 * (alpha - p) / (1.0 - p);
    double fb = o5_objective(alpha, beta, gamma, p, tr.t_fallback);
    TMax opt = optimize_t ? maximize_o5(alpha, beta, gamma, p, tr.zeta) : TMax{};
    if (fb >= opt.value) {
      tr.t_star = tr.t_fallback;
      tr.o[4] = fb;
      tr.used_fallback = true;
    } else {
      tr.t_star = opt.t;
      tr.o[4] = opt.value;
    }
  }
  tr.chosen = static_cast<int>(argmax_lowest(tr.o));
  return tr;
}

// Insert B, observe, then insert l iff remaining >= t_star (normalized).
class ConditionalInsertRule final : public BlockRule {
 public:
  ConditionalInsertRule(std::vector<ItemId> block, ItemId ell, double t_star, Units scale)
      : block_(std::move(block)), ell_(ell), t_star_(t_star), scale_(scale) {}

  Step next(const Observation& obs) const override {
    if (obs.stage == 0 && !block_.empty()) return {block_, true, 1};
    if (obs.stage <= 1) {
      long double r = static_cast<long double>(obs.remaining) / static_cast<long double>(scale_);
      if (r >= static_cast<long double>(t_star_) - 1e-12L) return {{ell_}, false, 2};
    }
    return {};
  }

 private:
  std::vector<ItemId> block_;
  ItemId ell_;
  double t_star_;
  Units scale_;
};

inline std::pair<ProceduralPolicy, SemiTrace> one_semi_adaptive_greedy(const Instance& inst) {
  if (inst.empty()) throw std::invalid_argument("one_semi_adaptive_greedy: instance has no items");
  GreedyPrefix g = half_prefix(inst);
  double p = 1.0 - convolve_block(inst, g.block).fit_prob();
  p = std::clamp(p, 0.0, 1.0);
  SemiTrace tr = semi_options(g.alpha, g.beta, g.gamma, p);
  tr.phi1 = g.phi1;
  tr.block = g.block;
  tr.ell = g.ell;
  auto plan_policy = [&](std::vector<ItemId> order) {
    ProceduralPolicy pp = as_procedural(NonAdaptivePlan{std::move(order)});
    pp.family = "semi1";
    return pp;
  };
  if (g.phi1 <= 0.0) {
    tr.chosen = 0;
    tr.gamma = 0.0;
    return {plan_policy({}), tr};
  }
  if (!g.ell) {
    tr.chosen = 0;
    return {plan_policy(g.order), tr};
  }
  ProceduralPolicy pol;
  switch (tr.chosen) {
    case 1:
    case 2: pol = plan_policy(g.block); break;
    case 3: pol = plan_policy({*g.ell}); break;
    case 4: {
      auto order = g.block;
      order.push_back(*g.ell);
      pol = plan_policy(order);
      break;
    }
    default:
      pol.family = "semi1";
      pol.rule = std::make_shared<ConditionalInsertRule>(g.block, *g.ell, tr.t_star, inst.scale());
  }
  pol.params = {{"chosen", tr.chosen}, {"t_star", tr.t_star}};
  return {pol, tr};
}

// ---------------------------------------------------------------------------
// k observations, m = k+1 blocks.

using AlphaVector = std::vector<double>;

inline AlphaVector optimal_alpha(int k) {
  if (k < 0) throw std::invalid_argument("k must be >= 0");
  return AlphaVector(static_cast<std::size_t>(k) + 1, 1.0 / (k + 2));
}

inline void check_alpha(const AlphaVector& alpha) {
  if (alpha.empty()) throw std::invalid_argument("alpha vector is empty");
  for (double a : alpha)
    if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument("every alpha_i must lie in (0,1)");
}

inline double f_alpha(const AlphaVector& alpha) {
  check_alpha(alpha);
  double sum = 0.0, prod = 1.0;
  for (double a : alpha) {
    sum += a;
    prod *= 1.0 - a;
  }
  return std::min(1.0, sum) * prod;
}

// Block i is the longest next stretch of the greedy order whose truncated
// mass stays within alpha_i times the observed remaining capacity. Empty
// blocks are skipped without observing; no observation after the last block.
class SemiAdaptiveGreedyRule final : public BlockRule {
 public:
  SemiAdaptiveGreedyRule(std::vector<ItemId> order, std::vector<double> mu, AlphaVector alpha, Units scale)
      : order_(std::move(order)), mu_(std::move(mu)), alpha_(std::move(alpha)), scale_(scale) {}

  Step next(const Observation& obs) const override {
    const double room = static_cast<double>(static_cast<long double>(obs.remaining) / static_cast<long double>(scale_));
    std::size_t l = obs.inserted.size();
    for (std::size_t i = obs.stage; i < alpha_.size(); ++i) {
      Step st;
      double mass = 0.0;
      const double budget = alpha_[i] * room;
      while (l < order_.size() && mass + mu_[order_[l]] <= budget + kMassSlack) {
        mass += mu_[order_[l]];
        st.block.push_back(order_[l]);
        ++l;
      }
      if (st.block.empty()) continue;
      st.observe = i + 1 < alpha_.size();
      st.next_stage = i + 1;
      return st;
    }
    return {};
  }

 private:
  std::vector<ItemId> order_;
  std::vector<double> mu_;
  AlphaVector alpha_;
  Units scale_;
};

inline ProceduralPolicy semi_adaptive_greedy(const Instance& inst, int k, const AlphaVector& alpha) {
  if (k < 0) throw std::invalid_argument("k must be >= 0");
  if (alpha.size() != static_cast<std::size_t>(k) + 1)
    throw std::invalid_argument("alpha must have k+1 entries");
  check_alpha(alpha);
  auto stats = derive_stats(inst);
  std::vector<double> mu;
  for (const auto& s : stats) mu.push_back(s.mean_truncated_size);
  ProceduralPolicy pol;
  pol.family = "semik";
  pol.params = {{"k", k}, {"alpha", alpha}};
  pol.rule = std::make_shared<SemiAdaptiveGreedyRule>(greedy_order(stats), std::move(mu), alpha, inst.scale());
  return pol;
}

// ---------------------------------------------------------------------------
// Insert one item at a time (in the given order), observing after each;
// once the knapsack is full, stop as soon as `threshold` items are in.
class FullThresholdRule final : public BlockRule {
 public:
  FullThresholdRule(std::vector<ItemId> order, std::size_t threshold)
      : order_(std::move(order)), threshold_(threshold) {}

  Step next(const Observation& obs) const override {
    std::size_t j = obs.inserted.size();
    if (j >= order_.size()) return {};
    if (obs.remaining == 0 && j >= threshold_) return {};
    return {{order_[j]}, true, 0};
  }

 private:
  std::vector<ItemId> order_;
  std::size_t threshold_;
};

inline ProceduralPolicy full_threshold_policy(const Instance& inst, std::size_t threshold) {
  std::vector<ItemId> order(inst.size());
  std::iota(order.begin(), order.end(), ItemId{0});
  ProceduralPolicy pol;
  pol.family = "threshold";
  pol.params = {{"threshold", threshold}};
  pol.rule = std::make_shared<FullThresholdRule>(std::move(order), threshold);
  return pol;
}

// ---------------------------------------------------------------------------
// Large items: follow an adaptive tree for k rounds, then commit to the
// non-adaptive greedy plan on what is left.

// Items `ids` against a knapsack with `cap` grid units left.
inline Instance residual_instance(const Instance& inst, std::span<const ItemId> ids, Units cap) {
  std::vector<Item> items;
  for (ItemId i : ids) items.push_back(inst.item(i));
  return Instance(std::move(items), cap, inst.variant());
}

inline int large_item_rounds(double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("eps must lie in (0,1)");
  double m = std::ceil(1.0 / eps);
  return static_cast<int>(std::ceil(5.0 * m * std::log(m) - 1e-9));
}

class TruncatedTreeRule final : public BlockRule {
 public:
  TruncatedTreeRule(const Instance& inst, NodePtr root, int rounds)
      : inst_(inst), root_(std::move(root)), rounds_(rounds) {
    std::function<void(const NodePtr&)> index = [&](const NodePtr& n) {
      if (ids_.count(n.get())) return;
      ids_.emplace(n.get(), nodes_.size());
      nodes_.push_back(n.get());
      for (const auto& b : n->children) index(b.node);
    };
    index(root_);
  }

  Step next(const Observation& obs) const override {
    const DecisionNode* node = root_.get();
    if (obs.stage > 0) {
      const Branch* b = select_child(*nodes_[obs.stage - 1], obs.remaining);
      if (!b) return {};
      node = b->node.get();
    }
    if (obs.queries_used >= rounds_) return fallback(obs);
    if (node->is_stop()) return {};
    return {node->insert, !node->children.empty(), ids_.at(node) + 1};
  }

 private:
  Step fallback(const Observation& obs) const {
    if (obs.remaining <= 0) return {};
    std::vector<char> used(inst_.size(), 0);
    for (ItemId i : obs.inserted) used[i] = 1;
    std::vector<ItemId> left;
    for (ItemId i = 0; i < inst_.size(); ++i)
      if (!used[i]) left.push_back(i);
    if (left.empty()) return {};
    Instance rest = residual_instance(inst_, left, obs.remaining);
    auto [plan, trace] = non_adaptive_greedy(rest);
    Step st;
    for (ItemId j : plan.order) st.block.push_back(left[j]);
    st.next_stage = 0;
    return st;
  }

  Instance inst_;
  NodePtr root_;
  int rounds_;
  std::vector<const DecisionNode*> nodes_;
  std::unordered_map<const DecisionNode*, std::size_t> ids_;
};

inline ProceduralPolicy large_item_hybrid(const Instance& inst, double eps,
                                          std::optional<TreePolicy> tree = std::nullopt) {
  auto stats = derive_stats(inst);
  for (ItemId i = 0; i < stats.size(); ++i)
    if (stats[i].mean_truncated_size < eps)
      throw std::invalid_argument("large_item_hybrid: item " + std::to_string(i + 1) +
                                  " has mean truncated size below eps");
  int rounds = large_item_rounds(eps);
  if (!tree) tree = optimal_adaptive(inst).tree;
  ProceduralPolicy pol;
  pol.family = "large";
  pol.params = {{"eps", eps},
                {"m", static_cast<int>(std::ceil(1.0 / eps))},
                {"rounds", rounds},
                {"fallback_constant", kFallbackConstant}};
  pol.rule = std::make_shared<TruncatedTreeRule>(inst, tree->root, rounds);
  return pol;
}

// ---------------------------------------------------------------------------
// Small/large split.

// Runs a policy built for a sub-instance on the full instance.
class MappedRule final : public BlockRule {
 public:
  MappedRule(std::shared_ptr<const BlockRule> inner, std::vector<ItemId> ids, std::size_t n)
      : inner_(std::move(inner)), ids_(std::move(ids)), back_(n, kNone) {
    for (std::size_t j = 0; j < ids_.size(); ++j) back_[ids_[j]] = j;
  }

  Step next(const Observation& obs) const override {
    std::vector<ItemId> sub;
    sub.reserve(obs.inserted.size());
    for (ItemId i : obs.inserted) sub.push_back(back_.at(i));
    Step st = inner_->next(Observation{obs.remaining, obs.stage, obs.queries_used, sub});
    for (auto& i : st.block) i = ids_.at(i);
    return st;
  }

 private:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::shared_ptr<const BlockRule> inner_;
  std::vector<ItemId> ids_;
  std::vector<std::size_t> back_;
};

inline ProceduralPolicy lift_policy(const ProceduralPolicy& sub, std::vector<ItemId> ids, std::size_t n) {
  ProceduralPolicy out = sub;
  out.rule = std::make_shared<MappedRule>(sub.rule, std::move(ids), n);
  return out;
}

using PolicyMaker = std::function<ProceduralPolicy(const Instance&)>;
using PolicyValuer = std::function<double(const Instance&, const ProceduralPolicy&)>;

inline double exact_value(const Instance& inst, const ProceduralPolicy& pol) {
  return eval_procedural(inst, pol).expected_value;
}

struct CombineResult {
  ProceduralPolicy policy;
  double small_value = 0.0;
  double large_value = 0.0;
  bool chose_small = true;
};

inline CombineResult partition_combine(const Instance& inst, double eps, const PolicyMaker& small_maker,
                                       const PolicyMaker& large_maker,
                                       const PolicyValuer& valuer = exact_value) {
  auto part = classify_small_large(inst, eps);
  CombineResult res;
  auto build = [&](const std::vector<ItemId>& ids, const PolicyMaker& maker) {
    return lift_policy(maker(inst.sub_instance(ids)), ids, inst.size());
  };
  if (part.large.empty()) {
    res.policy = small_maker(inst);
    res.small_value = valuer(inst, res.policy);
    return res;
  }
  if (part.small.empty()) {
    res.policy = large_maker(inst);
    res.large_value = valuer(inst, res.policy);
    res.chose_small = false;
    return res;
  }
  ProceduralPolicy s = build(part.small, small_maker);
  ProceduralPolicy l = build(part.large, large_maker);
  res.small_value = valuer(inst, s);
  res.large_value = valuer(inst, l);
  res.chose_small = res.small_value >= res.large_value;
  res.policy = res.chose_small ? s : l;
  res.policy.params["combine"] = {{"small_value", res.small_value}, {"large_value", res.large_value}};
  return res;
}

// ---------------------------------------------------------------------------

inline nlohmann::json ids_json(std::span<const ItemId> ids) {
  nlohmann::json a = nlohmann::json::array();
  for (ItemId i : ids) a.push_back(i + 1);
  return a;
}

inline nlohmann::json to_json(const GreedyTrace& t) {
  return {{"alpha", t.alpha}, {"beta", t.beta},   {"gamma", t.gamma},
          {"phi1", t.phi1},   {"options", t.o},   {"chosen", t.chosen},
          {"block", ids_json(t.block)},
          {"ell", t.ell ? nlohmann::json(*t.ell + 1) : nlohmann::json(nullptr)}};
}

inline nlohmann::json to_json(const SemiTrace& t) {
  nlohmann::json o = nlohmann::json::array();
  for (double v : t.o) o.push_back(std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr));
  return {{"alpha", t.alpha},
          {"beta", t.beta},
          {"gamma", t.gamma},
          {"p", t.p},
          {"phi1", t.phi1},
          {"zeta", t.zeta},
          {"t_star", t.t_star},
          {"t_fallback", t.t_fallback},
          {"used_fallback", t.used_fallback},
          {"options", o},
          {"chosen", t.chosen},
          {"block", ids_json(t.block)},
          {"ell", t.ell ? nlohmann::json(*t.ell + 1) : nlohmann::json(nullptr)}};
}

}  // namespace skadapt
