#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "skadapt/evalexact.hpp"
#include "skadapt/families.hpp"
#include "skadapt/lpbound.hpp"
#include "skadapt/parallel.hpp"
#include "skadapt/policies.hpp"

namespace skadapt {

inline double gap_ratio(double num, double den) {
  if (den > 0.0) return num / den;
  return num > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
}

struct GapReport {
  double adapt_value = 0.0;
  double alg_value = 0.0;
  std::optional<double> a_k_value;
  int k = 0;
  double gap_full = 1.0;
  std::optional<double> gap_0k;
  std::optional<double> gap_kn;
  std::optional<double> product_slack;  // gap_0k * gap_kn - gap_full
  std::string bound = "gap <= gap_0k * gap_kn";
  bool pass = true;
};

// All three optima by the exact oracles; A_k only within the semi-adaptive
// oracle's limit.
inline GapReport measure_gaps(const Instance& inst, int k, OracleLimits limits = {}) {
  GapReport r;
  r.k = k;
  r.adapt_value = optimal_adaptive(inst, false, {}, limits).value;
  r.alg_value = optimal_nonadaptive(inst, {}, limits).value;
  r.gap_full = gap_ratio(r.adapt_value, r.alg_value);
  if (inst.size() <= limits.semi_n) {
    r.a_k_value = optimal_k_semi_adaptive(inst, k, false, {}, limits).value;
    r.gap_0k = gap_ratio(*r.a_k_value, r.alg_value);
    r.gap_kn = gap_ratio(r.adapt_value, *r.a_k_value);
    r.product_slack = *r.gap_0k * *r.gap_kn - r.gap_full;
    if (std::isnan(*r.product_slack)) r.product_slack = 0.0;
    r.pass = *r.product_slack >= -1e-9;
  }
  return r;
}

inline double phi_ratio_probe(const Instance& inst) {
  double phi1 = phi(inst, 1.0).value;
  double adapt = optimal_adaptive(inst, false).value;
  return gap_ratio(adapt, phi1);
}

// ---------------------------------------------------------------------------
// Min-max certificates.

struct CertifyResult {
  double min_found = std::numeric_limits<double>::infinity();
  double grid_min = std::numeric_limits<double>::infinity();
  std::vector<double> argmin;       // T: (alpha, beta, gamma); T': (alpha, beta, gamma, p)
  std::size_t points = 0;
  std::size_t pruned = 0;
};

inline double greedy_score(double alpha, double beta, double gamma) {
  auto t = greedy_options(alpha, beta, gamma);
  return *std::max_element(t.o.begin(), t.o.end());
}

inline double semi_score(double alpha, double beta, double gamma, double p, bool optimize_t = true) {
  auto t = semi_options(alpha, beta, gamma, p, optimize_t);
  return *std::max_element(t.o.begin(), t.o.end());
}

namespace detail {

// Zooming local lattice: 7 points per axis around the incumbent, spacing
// shrinking by half each round. Robust at the kinks of max-type objectives
// where plain coordinate moves stall.
template <class F, class Domain>
std::pair<double, std::vector<double>> zoom_refine(F&& f, Domain&& domain, std::vector<double> x, double h) {
  x = domain(x);
  double fx = f(x);
  const std::size_t d = x.size();
  std::size_t cells = 1;
  for (std::size_t i = 0; i < d; ++i) cells *= 7;
  while (h > 1e-11) {
    std::vector<double> best_x = x;
    double best_f = fx;
    for (std::size_t c = 0; c < cells; ++c) {
      std::vector<double> y = x;
      std::size_t rem = c;
      for (std::size_t i = 0; i < d; ++i) {
        y[i] += (static_cast<double>(rem % 7) - 3.0) * h / 3.0;
        rem /= 7;
      }
      y = domain(y);
      double fy = f(y);
      if (fy < best_f) {
        best_f = fy;
        best_x = y;
      }
    }
    if (best_f < fx) {
      fx = best_f;
      x = best_x;
    } else {
      h /= 2.0;
    }
  }
  return {fx, x};
}

struct ShardMin {
  double value = std::numeric_limits<double>::infinity();
  std::size_t index = std::numeric_limits<std::size_t>::max();
  std::vector<double> x;
  std::size_t points = 0, pruned = 0;
};

inline void merge_min(ShardMin& into, const ShardMin& s) {
  into.points += s.points;
  into.pruned += s.pruned;
  if (s.value < into.value || (s.value == into.value && s.index < into.index)) {
    into.value = s.value;
    into.index = s.index;
    into.x = s.x;
  }
}

}  // namespace detail

// min over alpha in [0,0.5], beta in [0.5,1], gamma in [0,1] of max{o1..o4}.
inline CertifyResult certify_T(int grid, int workers = 1, std::optional<double> gamma_fixed = std::nullopt) {
  if (grid < 1) throw std::invalid_argument("grid must be >= 1");
  const int ng = gamma_fixed ? 0 : grid;
  std::vector<detail::ShardMin> shards(grid + 1);
  parallel_tasks(shards.size(), workers, [&](std::size_t ia) {
    auto& s = shards[ia];
    double a = 0.5 * static_cast<double>(ia) / grid;
    for (int ib = 0; ib <= grid; ++ib) {
      double b = 0.5 + 0.5 * static_cast<double>(ib) / grid;
      for (int ic = 0; ic <= ng; ++ic) {
        double g = gamma_fixed ? *gamma_fixed : static_cast<double>(ic) / grid;
        double v = greedy_score(a, b, g);
        ++s.points;
        if (v < s.value) {
          s.value = v;
          s.index = (ia * (grid + 1) + ib) * (ng + 1) + ic;
          s.x = {a, b, g};
        }
      }
    }
  });
  detail::ShardMin best;
  for (const auto& s : shards) detail::merge_min(best, s);
  CertifyResult r;
  r.grid_min = best.value;
  r.points = best.points;
  auto domain = [&](std::vector<double> x) {
    x[0] = std::clamp(x[0], 0.0, 0.5);
    x[1] = std::clamp(x[1], 0.5, 1.0);
    x[2] = gamma_fixed ? *gamma_fixed : std::clamp(x[2], 0.0, 1.0);
    return x;
  };
  auto f = [](const std::vector<double>& x) { return greedy_score(x[0], x[1], x[2]); };
  auto [v, x] = detail::zoom_refine(f, domain, best.x, 1.0 / grid);
  r.min_found = std::min(v, best.value);
  r.argmin = v < best.value ? x : best.x;
  return r;
}

// min over p in [0,0.5], alpha in [p,0.5], beta in [0.5,1], gamma in
// [0,0.25] of max{o1..o5}. Points whose o1..o4 already reach the running
// minimum are skipped without solving for o5.
inline CertifyResult certify_Tprime(int grid, int workers = 1, bool optimize_t = true) {
  if (grid < 1) throw std::invalid_argument("grid must be >= 1");
  std::vector<detail::ShardMin> shards(grid + 1);
  parallel_tasks(shards.size(), workers, [&](std::size_t ip) {
    auto& s = shards[ip];
    double p = 0.5 * static_cast<double>(ip) / grid;
    for (int ia = 0; ia <= grid; ++ia) {
      double a = p + (0.5 - p) * static_cast<double>(ia) / grid;
      for (int ib = 0; ib <= grid; ++ib) {
        double b = 0.5 + 0.5 * static_cast<double>(ib) / grid;
        for (int ic = 0; ic <= grid; ++ic) {
          double g = 0.25 * static_cast<double>(ic) / grid;
          ++s.points;
          if (std::max({a * (1 - p), (b - g) * (1 - p), g, b * (1 - b)}) >= s.value) {
            ++s.pruned;
            continue;
          }
          double v = semi_score(a, b, g, p, optimize_t);
          if (v < s.value) {
            s.value = v;
            s.index = ((ip * (grid + 1) + ia) * (grid + 1) + ib) * (grid + 1) + ic;
            s.x = {a, b, g, p};
          }
        }
      }
    }
  });
  detail::ShardMin best;
  for (const auto& s : shards) detail::merge_min(best, s);
  CertifyResult r;
  r.grid_min = best.value;
  r.points = best.points;
  r.pruned = best.pruned;
  auto domain = [](std::vector<double> x) {
    x[3] = std::clamp(x[3], 0.0, 0.5);
    x[0] = std::clamp(x[0], x[3], 0.5);
    x[1] = std::clamp(x[1], 0.5, 1.0);
    x[2] = std::clamp(x[2], 0.0, 0.25);
    return x;
  };
  auto f = [&](const std::vector<double>& x) { return semi_score(x[0], x[1], x[2], x[3], optimize_t); };
  auto [v, x] = detail::zoom_refine(f, domain, best.x, 1.0 / grid);
  r.min_found = std::min(v, best.value);
  r.argmin = v < best.value ? x : best.x;
  return r;
}

// ---------------------------------------------------------------------------
// Bernoulli(eps) items of value eps, Risky: when to stop once full.

struct Example1Report {
  double eps = 0.0;
  int horizon = 0;
  int threshold = 0;                 // least state where stopping is optimal
  double value_estimate = 0.0;       // eps * (1/eps + k * (1-eps)^k)
  double overflow_estimate = 0.0;    // (1-eps)^k
  std::size_t n_items = 0;
  double threshold_value = 0.0;      // exact value of the threshold policy, n_items items
  double threshold_overflow = 0.0;
};

inline Example1Report example1_mdp(double eps, int horizon, std::size_t n_items = 0) {
  if (!(eps > 0.0 && eps <= 0.1)) throw std::invalid_argument("eps must lie in (0, 0.1]");
  if (horizon < static_cast<int>(std::ceil(4.0 / eps))) throw std::invalid_argument("horizon must be >= 4/eps");
  Example1Report r;
  r.eps = eps;
  r.horizon = horizon;
  // V(i) = max{i, (1-eps) V(i+1)}, V(horizon) = horizon.
  std::vector<double> V(horizon + 1);
  std::vector<char> stop(horizon + 1, 1);
  V[horizon] = horizon;
  for (int i = horizon - 1; i >= 0; --i) {
    double cont = (1.0 - eps) * V[i + 1];
    stop[i] = i >= cont;
    V[i] = std::max(static_cast<double>(i), cont);
  }
  r.threshold = horizon;
  for (int i = 0; i <= horizon; ++i)
    if (stop[i]) {
      r.threshold = i;
      break;
    }
  const double k = r.threshold;
  r.value_estimate = eps * (1.0 / eps + k * std::pow(1.0 - eps, k));
  r.overflow_estimate = std::pow(1.0 - eps, k);

  // Exact value of "insert until full, then until `threshold` items are in".
  const std::size_t n = n_items ? n_items : static_cast<std::size_t>(horizon);
  r.n_items = n;
  const std::size_t kk = static_cast<std::size_t>(r.threshold);
  // W[c], O[c]: value and overflow probability from the full state with c
  // items inserted.
  std::vector<double> W(n + 1), O(n + 1);
  for (std::size_t c = n + 1; c-- > 0;) {
    if (c >= kk || c == n) {
      W[c] = eps * static_cast<double>(c);
      O[c] = 0.0;
    } else {
      W[c] = (1.0 - eps) * W[c + 1];
      O[c] = eps + (1.0 - eps) * O[c + 1];
    }
  }
  double still_empty = 1.0;
  for (std::size_t j = 0; j < n; ++j) {
    r.threshold_value += still_empty * eps * W[j + 1];
    r.threshold_overflow += still_empty * eps * O[j + 1];
    still_empty *= 1.0 - eps;
  }
  r.threshold_value += still_empty * eps * static_cast<double>(n);
  return r;
}

}  // namespace skadapt
