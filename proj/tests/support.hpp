#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "skadapt/skadapt.hpp"

namespace sktest {

using namespace skadapt;

inline Instance random_instance(std::uint64_t seed, std::size_t n, Variant v = Variant::Risky,
                                std::size_t atoms = 3, Units scale = 20, Units size_max = 30) {
  RandomSpec s;
  s.n = n;
  s.atoms = atoms;
  s.seed = seed;
  s.scale = scale;
  s.size_max = size_max;
  s.variant = v;
  return make_random(s);
}

inline Instance make_instance(std::vector<std::pair<double, std::vector<Atom>>> spec, Units scale,
                              Variant v) {
  std::vector<Item> items;
  for (auto& [value, atoms] : spec) items.push_back({value, DiscreteDist(std::move(atoms))});
  return Instance(std::move(items), scale, v);
}

// max w.x subject to mu.x <= t, 0 <= x <= 1, by enumerating basic solutions:
// every coordinate at a bound except possibly one set to make the budget tight.
inline double lp_by_vertices(const std::vector<double>& w, const std::vector<double>& mu, double t) {
  const std::size_t n = w.size();
  double best = 0.0;
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    double used = 0.0, val = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask >> i & 1) {
        used += mu[i];
        val += w[i];
      }
    if (used <= t + 1e-12) best = std::max(best, val);
    for (std::size_t j = 0; j < n; ++j) {
      if (mask >> j & 1 || mu[j] <= 0.0) continue;
      double x = (t - used) / mu[j];
      if (x >= 0.0 && x <= 1.0) best = std::max(best, val + x * w[j]);
    }
  }
  return best;
}

}  // namespace sktest
