#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <unordered_map>
#include <vector>

#include "skadapt/model.hpp"

namespace skadapt {

// Distribution of a total inserted size. Mass above `cap` is lumped into
// `overflow`; atoms are sorted, distinct and at most `cap`.
struct SumDist {
  Units cap = 0;
  std::vector<Atom> atoms{{0, 1.0}};
  double overflow = 0.0;

  double fit_prob() const {
    double p = 0.0;
    for (const auto& a : atoms) p += a.prob;
    return p;
  }

  double prob_at_most(Units c) const {
    double p = 0.0;
    for (const auto& a : atoms) {
      if (a.size > c) break;
      p += a.prob;
    }
    return p;
  }

  double total_mass() const { return fit_prob() + overflow; }

  // E[min(total, cap)] / cap, i.e. the mean truncated size of the total.
  double mean_truncated(Units scale) const {
    long double m = 0.0L;
    for (const auto& a : atoms)
      m += a.prob * (static_cast<long double>(std::min(a.size, scale)) / static_cast<long double>(scale));
    m += overflow;
    return static_cast<double>(m);
  }
};

inline constexpr Units kDenseConvLimit = Units{1} << 20;

inline SumDist convolve(const SumDist& d, const DiscreteDist& item, Units cap) {
  SumDist out;
  out.cap = cap;
  out.atoms.clear();
  out.overflow = d.overflow;
  if (cap <= kDenseConvLimit) {
    std::vector<double> dense(static_cast<std::size_t>(cap) + 1, 0.0);
    std::vector<char> hit(dense.size(), 0);
    for (const auto& a : d.atoms) {
      for (const auto& b : item.atoms()) {
        Units s = a.size + b.size;
        double p = a.prob * b.prob;
        if (s > cap) {
          out.overflow += p;
        } else {
          dense[static_cast<std::size_t>(s)] += p;
          hit[static_cast<std::size_t>(s)] = 1;
        }
      }
    }
    for (std::size_t s = 0; s < dense.size(); ++s)
      if (hit[s] && dense[s] > 0.0) out.atoms.push_back({static_cast<Units>(s), dense[s]});
  } else {
    std::vector<Atom> raw;
    raw.reserve(d.atoms.size() * item.support());
    for (const auto& a : d.atoms) {
      for (const auto& b : item.atoms()) {
        Units s = a.size + b.size;
        double p = a.prob * b.prob;
        if (s > cap)
          out.overflow += p;
        else
          raw.push_back({s, p});
      }
    }
    std::sort(raw.begin(), raw.end(), [](const Atom& x, const Atom& y) { return x.size < y.size; });
    for (const auto& a : raw) {
      if (!out.atoms.empty() && out.atoms.back().size == a.size)
        out.atoms.back().prob += a.prob;
      else
        out.atoms.push_back(a);
    }
  }
  return out;
}

inline SumDist point_mass(Units cap) {
  SumDist d;
  d.cap = cap;
  return d;
}

// Exact distribution of the block's total size, lumped above the capacity.
inline SumDist convolve_block(const Instance& inst, std::span<const ItemId> block) {
  check_block(inst, block);
  SumDist d = point_mass(inst.scale());
  for (ItemId i : block) d = convolve(d, inst.item(i).dist, inst.scale());
  return d;
}

// Caches block and block-prefix distributions (lumped at the instance scale)
// for evaluators that see the same greedy prefixes many times.
class BlockDistCache {
 public:
  explicit BlockDistCache(const Instance& inst) : inst_(&inst) {}

  // Distributions of every prefix of `block`; element j is the total of the
  // first j+1 items.
  std::vector<std::shared_ptr<const SumDist>> prefixes(std::span<const ItemId> block) {
    std::vector<std::shared_ptr<const SumDist>> out(block.size());
    std::size_t known = 0;
    for (std::size_t len = block.size(); len > 0; --len) {
      auto it = cache_.find(key(block.first(len)));
      if (it != cache_.end()) {
        known = len;
        out[len - 1] = it->second;
        break;
      }
    }
    for (std::size_t len = known; len > 0; --len) {
      if (!out[len - 1]) out[len - 1] = cache_.at(key(block.first(len)));
    }
    auto prev = known > 0 ? out[known - 1] : std::make_shared<const SumDist>(point_mass(inst_->scale()));
    for (std::size_t len = known + 1; len <= block.size(); ++len) {
      auto next = std::make_shared<const SumDist>(
          convolve(*prev, inst_->item(block[len - 1]).dist, inst_->scale()));
      cache_.emplace(key(block.first(len)), next);
      out[len - 1] = next;
      prev = next;
    }
    return out;
  }

  std::shared_ptr<const SumDist> total(std::span<const ItemId> block) {
    if (block.empty()) return std::make_shared<const SumDist>(point_mass(inst_->scale()));
    return prefixes(block).back();
  }

  std::size_t entries() const { return cache_.size(); }

 private:
  struct VecHash {
    std::size_t operator()(const std::vector<ItemId>& v) const noexcept {
      std::size_t h = 1469598103934665603ULL;
      for (ItemId x : v) h = (h ^ (x + 0x9e3779b97f4a7c15ULL)) * 1099511628211ULL;
      return h;
    }
  };
  static std::vector<ItemId> key(std::span<const ItemId> s) { return {s.begin(), s.end()}; }

  const Instance* inst_;
  std::unordered_map<std::vector<ItemId>, std::shared_ptr<const SumDist>, VecHash> cache_;
};

}  // namespace skadapt
