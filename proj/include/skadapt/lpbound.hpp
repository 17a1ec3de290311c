#pragma once

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <vector>

#include "skadapt/model.hpp"

namespace skadapt {

// Optimum of the fractional benchmark
//   max sum x_i w_i  s.t.  sum x_i mu_i <= t,  0 <= x_i <= 1.
struct PhiSolution {
  double t = 0.0;
  double value = 0.0;
  std::vector<double> x;
  std::optional<ItemId> split_item;
};

inline PhiSolution phi(std::span<const DerivedItemStats> stats, std::span<const ItemId> order,
                       double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("phi: t must be >= 0");
  PhiSolution sol;
  sol.t = t;
  sol.x.assign(stats.size(), 0.0);
  double budget = t;
  bool full = false;
  for (ItemId i : order) {
    const auto& s = stats[i];
    if (s.effective_value <= 0.0) continue;
    if (s.mean_truncated_size == 0.0) {
      sol.x[i] = 1.0;
      sol.value += s.effective_value;
      continue;
    }
    if (full) continue;
    if (s.mean_truncated_size <= budget) {
      sol.x[i] = 1.0;
      budget -= s.mean_truncated_size;
      sol.value += s.effective_value;
    } else {
      double frac = budget / s.mean_truncated_size;
      if (frac > 0.0) {
        sol.x[i] = frac;
        sol.split_item = i;
        sol.value += frac * s.effective_value;
      }
      full = true;
    }
  }
  return sol;
}

inline PhiSolution phi(const Instance& inst, double t) {
  auto stats = derive_stats(inst);
  auto order = greedy_order(stats);
  return phi(stats, order, t);
}

// Upper bound on the fully adaptive optimum (either variant): 2 * Phi(1).
inline double adapt_upper_bound(const Instance& inst) { return 2.0 * phi(inst, 1.0).value; }

struct BlockCertificate {
  double lhs = 0.0;   // w(J)
  double rhs = 0.0;   // min{1, mu(J)/t} * Phi(t)
  bool holds = false;
};

// J = first `prefix_len` items in greedy order.
inline BlockCertificate greedy_block_certificate(const Instance& inst, std::size_t prefix_len,
                                                 double t) {
  if (prefix_len < 1 || prefix_len > inst.size())
    throw std::invalid_argument("greedy_block_certificate: prefix length out of range");
  if (!(t > 0.0)) throw std::invalid_argument("greedy_block_certificate: t must be > 0");
  auto stats = derive_stats(inst);
  auto order = greedy_order(stats);
  double w = 0.0, mu = 0.0;
  for (std::size_t j = 0; j < prefix_len; ++j) {
    w += stats[order[j]].effective_value;
    mu += stats[order[j]].mean_truncated_size;
  }
  BlockCertificate c;
  c.lhs = w;
  c.rhs = std::min(1.0, mu / t) * phi(stats, order, t).value;
  c.holds = c.lhs >= c.rhs - 1e-12;
  return c;
}

}  // namespace skadapt
