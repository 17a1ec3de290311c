#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "skadapt/evalexact.hpp"
#include "skadapt/model.hpp"
#include "skadapt/policy.hpp"
#include "skadapt/sumdist.hpp"

namespace skadapt {

// An instance together with the closed-form predictions the construction
// was designed to hit.
struct FamilyInstance {
  Instance instance;
  nlohmann::json predictions = nlohmann::json::object();
};

inline void check_prob_vector(const std::vector<double>& p, double total, const char* what) {
  if (p.empty()) throw std::invalid_argument(std::string(what) + ": probability vector is empty");
  double s = 0.0;
  for (double x : p) {
    if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument(std::string(what) + ": probabilities must lie in [0,1]");
    s += x;
  }
  if (std::abs(s - total) > 1e-9)
    throw std::invalid_argument(std::string(what) + ": probabilities sum to " + std::to_string(s) +
                                ", expected " + std::to_string(total));
}

// T_i = p_1 + ... + p_i.
inline std::vector<double> partial_sums(const std::vector<double>& p) {
  std::vector<double> t(p.size());
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) t[i] = s += p[i];
  return t;
}

// p_1 fixed, the remaining mass spread evenly over n-1 items.
inline std::vector<double> uniform_tail(double p1, std::size_t n, double total = 1.0) {
  if (n == 0) throw std::invalid_argument("n must be >= 1");
  if (n == 1) return {total};
  std::vector<double> p(n, (total - p1) / static_cast<double>(n - 1));
  p[0] = p1;
  return p;
}

inline FamilyInstance make_bernoulli_eps(double eps, std::size_t n, Variant variant = Variant::Risky) {
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("eps must lie in (0,1)");
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  std::vector<Item> items(n, Item{eps, DiscreteDist({{0, 1.0 - eps}, {1, eps}})});
  FamilyInstance f{Instance(std::move(items), 1, variant)};
  f.predictions = {{"family", "bernoulli-eps"},
                   {"eps", eps},
                   {"n", n},
                   {"phi1", std::min(1.0, eps * static_cast<double>(n))},
                   {"nonrisky_always_insert_value", 2.0 - eps},
                   {"risky_optimal_value", 1.0 + std::exp(-1.0)},
                   {"risky_overflow_prob", std::exp(-1.0)}};
  return f;
}

// Sizes on a grid of 4n units: s_i = 0.5 + (n-i)/(4n), so any two of the
// items 1..n overflow together while item i fits after item 0's i-th atom
// 1 - s_i exactly when the atom index is <= i.
namespace detail {
inline Units h2_scale(std::size_t n) { return static_cast<Units>(4 * n); }
inline Units h2_size(std::size_t n, std::size_t i) { return static_cast<Units>(2 * n + (n - i)); }
}  // namespace detail

inline double h2_risky_gap(const std::vector<double>& p) {
  check_prob_vector(p, 1.0, "h2_risky_gap");
  auto t = partial_sums(p);
  double g = 1.0;
  for (std::size_t i = 1; i < p.size(); ++i) g += p[i] / t[i];
  return g;
}

inline double h2_nonrisky_gap(const std::vector<double>& p) {
  if (p.empty()) throw std::invalid_argument("h2_nonrisky_gap: probability vector is empty");
  auto t = partial_sums(p);
  double g = 0.0;
  for (std::size_t i = 1; i < p.size(); ++i) g += p[i] / t[i];
  return 1.0 + p[0] * g;
}

inline FamilyInstance make_h2_risky(const std::vector<double>& p) {
  check_prob_vector(p, 1.0, "make_h2_risky");
  const std::size_t n = p.size();
  if (n > 1 && p[0] < 0.5) throw std::invalid_argument("make_h2_risky: p_1 must be >= 0.5");
  if (n == 1 && p[0] <= 0.0) throw std::invalid_argument("make_h2_risky: p_1 must be positive");
  const Units scale = detail::h2_scale(n);
  auto t = partial_sums(p);
  std::vector<double> v(n);
  v[0] = n == 1 ? 1.0 : p[0] / (1.0 - p[0]);
  for (std::size_t i = 1; i < n; ++i) v[i] = std::max(0.0, p[0] * (1.0 + v[0]) / t[i] - 1.0);

  std::vector<Atom> atoms0;
  for (std::size_t i = 1; i <= n; ++i) atoms0.push_back({scale - detail::h2_size(n, i), p[i - 1]});
  std::vector<Item> items;
  items.push_back({1.0, DiscreteDist(atoms0)});
  for (std::size_t i = 1; i <= n; ++i) items.push_back({v[i - 1], DiscreteDist::point(detail::h2_size(n, i))});

  double adapt = 0.0;
  for (std::size_t i = 0; i < n; ++i) adapt += p[i] * (1.0 + v[i]);
  double alg = std::max(1.0, v[0]);
  FamilyInstance f{Instance(std::move(items), scale, Variant::Risky)};
  f.predictions = {{"family", "h2-risky"}, {"p", p},         {"values", v},
                   {"adapt", adapt},       {"alg", alg},     {"option_value", p[0] * (1.0 + v[0])},
                   {"gap", h2_risky_gap(p)}};
  return f;
}

// Item 0 overflows w.p. p0; its i-th atom 1 - s_i has prob p_i. Items 1..n
// are terminal: size s_i w.p. 1/a, overflow otherwise, stored value a*w_i.
inline FamilyInstance make_h2_nonrisky(double p0, const std::vector<double>& p, double a = 1e9) {
  if (!(p0 >= 0.0 && p0 < 1.0)) throw std::invalid_argument("make_h2_nonrisky: p_0 must lie in [0,1)");
  check_prob_vector(p, 1.0 - p0, "make_h2_nonrisky");
  if (!(a > 1.0)) throw std::invalid_argument("make_h2_nonrisky: a must exceed 1");
  const std::size_t n = p.size();
  const Units scale = detail::h2_scale(n);
  const double q = 1.0 - p0;
  auto t = partial_sums(p);
  std::vector<double> w(n);
  w[0] = q / (1.0 - q * p[0]);
  for (std::size_t i = 1; i < n; ++i) w[i] = p[0] * w[0] / t[i];

  std::vector<Atom> atoms0;
  for (std::size_t i = 1; i <= n; ++i) atoms0.push_back({scale - detail::h2_size(n, i), p[i - 1]});
  if (p0 > 0.0) atoms0.push_back({2 * scale, p0});
  std::vector<Item> items;
  items.push_back({1.0, DiscreteDist(atoms0)});
  for (std::size_t i = 1; i <= n; ++i)
    items.push_back({a * w[i - 1], DiscreteDist({{detail::h2_size(n, i), 1.0 / a}, {2 * scale, 1.0 - 1.0 / a}})});

  double adapt = 1.0;
  for (std::size_t i = 0; i < n; ++i) adapt += p[i] * w[i];
  adapt *= q;
  std::vector<double> ps = p;
  ps.insert(ps.begin(), p0);
  FamilyInstance f{Instance(std::move(items), scale, Variant::NonRisky)};
  f.predictions = {{"family", "h2-nonrisky"}, {"p0", p0},     {"p", p},   {"a", a},
                   {"effective_values", w},  {"adapt", adapt}, {"alg", w[0]},
                   {"gap", h2_nonrisky_gap(p)}};
  return f;
}

inline std::vector<double> risky_recursion(int k) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  std::vector<double> g{1.0};
  for (int j = 2; j <= k; ++j) g.push_back(g.back() / 2.0 + 1.0);
  return g;
}

inline std::vector<double> nonrisky_recursion(int k) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  std::vector<double> g{1.0};
  for (int j = 2; j <= k; ++j) g.push_back(1.0 + g.back() * g.back() / 4.0);
  return g;
}

// Item j (1-based) has size eps_j = eps_base^j w.p. p_j, else 1 - eps_j.
// p_1 = 0; p_j = 1/2 and w_j = V_{j-1}/G_{j-1} afterwards. The recursion
// values are dyadic rationals and stay exact in double precision.
inline FamilyInstance make_noisy_lb(int k, double eps_base = 1e-3) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (!(eps_base > 0.0 && eps_base < 0.5)) throw std::invalid_argument("eps_base must lie in (0, 0.5)");
  const double inv = std::round(1.0 / eps_base);
  if (std::abs(inv * eps_base - 1.0) > 1e-9)
    throw std::invalid_argument("eps_base must be the reciprocal of an integer for an exact grid");
  const Units base = static_cast<Units>(inv);
  Units scale;
  try {
    scale = ipow(base, k);
  } catch (const std::out_of_range&) {
    throw std::invalid_argument("grid resolution insufficient: (1/eps_base)^k exceeds 126 bits");
  }
  std::vector<double> w(k), pj(k), V(k), G(k);
  std::vector<Item> items;
  for (int j = 1; j <= k; ++j) {
    const Units small = ipow(base, k - j);
    const Units large = scale - small;
    if (j == 1) {
      pj[0] = 0.0;
      w[0] = 1.0;
      V[0] = 1.0;
      G[0] = 1.0;
      items.push_back({w[0], DiscreteDist::point(large)});
    } else {
      pj[j - 1] = 0.5;
      w[j - 1] = V[j - 2] / G[j - 2];
      V[j - 1] = w[j - 1] + pj[j - 1] * V[j - 2];
      G[j - 1] = G[j - 2] / 2.0 + 1.0;
      items.push_back({w[j - 1], DiscreteDist({{small, 0.5}, {large, 0.5}})});
    }
  }
  FamilyInstance f{Instance(std::move(items), scale, Variant::Risky)};
  f.predictions = {{"family", "noisy-lb"},
                   {"k", k},
                   {"eps_base", eps_base},
                   {"values", w},
                   {"adapt", V.back()},
                   {"alg", V.back() / G.back()},
                   {"gap", G.back()},
                   {"gap_closed_form", 2.0 - std::ldexp(1.0, 1 - k)}};
  return f;
}

// ---------------------------------------------------------------------------

enum class RandomMode { Any, SmallOnly, LargeOnly };

struct RandomSpec {
  std::size_t n = 5;
  std::size_t atoms = 3;  // max atoms per item; 1 gives deterministic sizes
  std::uint64_t seed = 1;
  double value_lo = 0.0;
  double value_hi = 1.0;
  Units scale = 20;
  Units size_max = 30;  // largest atom size in grid units
  Variant variant = Variant::Risky;
  RandomMode mode = RandomMode::Any;
  double eps = 0.1;  // small/large threshold for the restricted modes
};

namespace detail {
// Raw generator output mapped by hand so that instances are identical
// across standard libraries.
inline double unit_real(std::mt19937_64& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }
inline Units uniform_units(std::mt19937_64& g, Units lo, Units hi) {
  if (hi <= lo) return lo;
  auto span = static_cast<unsigned __int128>(hi - lo) + 1;
  unsigned __int128 x = (static_cast<unsigned __int128>(g()) << 64) | g();
  return lo + static_cast<Units>(x % span);
}
}  // namespace detail

inline Instance make_random(const RandomSpec& spec) {
  if (spec.n < 1) throw std::invalid_argument("n must be >= 1");
  if (spec.atoms < 1) throw std::invalid_argument("atoms must be >= 1");
  if (spec.scale < 1) throw std::invalid_argument("scale must be >= 1");
  if (spec.value_lo < 0.0 || spec.value_hi < spec.value_lo) throw std::invalid_argument("bad value range");
  std::mt19937_64 g(spec.seed);
  Units lo = 0, hi = spec.size_max;
  if (spec.mode == RandomMode::SmallOnly) {
    hi = static_cast<Units>(std::floor(spec.eps * to_double(spec.scale)));
  } else if (spec.mode == RandomMode::LargeOnly) {
    lo = static_cast<Units>(std::ceil(spec.eps * to_double(spec.scale)));
    hi = std::max(hi, lo);
  }
  std::vector<Item> items;
  for (std::size_t i = 0; i < spec.n; ++i) {
    double v = spec.value_lo + (spec.value_hi - spec.value_lo) * detail::unit_real(g);
    std::size_t count = 1 + static_cast<std::size_t>(detail::uniform_units(g, 0, static_cast<Units>(spec.atoms - 1)));
    std::vector<Atom> atoms;
    double total = 0.0;
    for (std::size_t a = 0; a < count; ++a) {
      Units s = detail::uniform_units(g, lo, hi);
      double w = 1.0 - detail::unit_real(g);  // (0,1]
      atoms.push_back({s, w});
      total += w;
    }
    for (auto& a : atoms) a.prob /= total;
    items.push_back({v, DiscreteDist(std::move(atoms))});
  }
  return Instance(std::move(items), spec.scale, spec.variant);
}

// ---------------------------------------------------------------------------

struct CompoundReduction {
  Instance reduced;
  TreeConstraint constraint;
  TreePolicy tree;                              // the input policy on the reduced instance
  std::vector<std::vector<ItemId>> segments;    // original items of each compound item
};

inline DiscreteDist sumdist_to_dist(const SumDist& d, Units scale) {
  std::vector<Atom> atoms = d.atoms;
  if (d.overflow > 0.0) atoms.push_back({2 * scale, d.overflow});
  double s = 0.0;
  for (const auto& a : atoms) s += a.prob;
  for (auto& a : atoms) a.prob /= s;
  return DiscreteDist(std::move(atoms));
}

// Every maximal stretch of the tree between observation points becomes one
// compound item (sizes convolved, values summed).
inline CompoundReduction compound_reduce(const Instance& inst, const TreePolicy& tree) {
  validate_tree(inst, tree);
  std::vector<std::vector<ItemId>> segments;
  std::vector<Item> items;
  std::unordered_map<const DecisionNode*, NodePtr> built;

  std::function<NodePtr(const NodePtr&)> build = [&](const NodePtr& start) -> NodePtr {
    if (auto it = built.find(start.get()); it != built.end()) return it->second;
    if (start->is_stop()) return built[start.get()] = make_stop();
    std::vector<ItemId> seg;
    const DecisionNode* cur = start.get();
    for (;;) {
      seg.insert(seg.end(), cur->insert.begin(), cur->insert.end());
      if (cur->children.size() != 1 || cur->children[0].node->is_stop()) break;
      cur = cur->children[0].node.get();
    }
    SumDist d = convolve_block(inst, seg);
    double v = 0.0;
    for (ItemId i : seg) v += inst.item(i).value;
    ItemId id = items.size();
    items.push_back({v, sumdist_to_dist(d, inst.scale())});
    segments.push_back(seg);
    std::vector<Branch> kids;
    if (cur->observes())
      for (const auto& b : cur->children) kids.push_back({b.lo, b.hi, build(b.node)});
    NodePtr node = make_node({id}, std::move(kids));
    built[start.get()] = node;
    return node;
  };
  NodePtr root = build(tree.root);
  Instance reduced(std::move(items), inst.scale(), inst.variant());
  if (reduced.size() > 63) throw size_limit_error("compound_reduce: more than 63 compound items");

  TreeConstraint c;
  std::function<void(const NodePtr&, ItemMask)> paths = [&](const NodePtr& n, ItemMask acc) {
    if (n->is_stop()) {
      if (acc) c.paths.push_back(acc);
      return;
    }
    acc |= ItemMask{1} << n->insert[0];
    if (n->children.empty()) {
      c.paths.push_back(acc);
      return;
    }
    for (const auto& b : n->children) paths(b.node, acc);
  };
  paths(root, 0);
  std::sort(c.paths.begin(), c.paths.end());
  c.paths.erase(std::unique(c.paths.begin(), c.paths.end()), c.paths.end());
  if (c.paths.empty()) c.paths.push_back(0);
  return {std::move(reduced), std::move(c), TreePolicy{root, -1}, std::move(segments)};
}

}  // namespace skadapt
