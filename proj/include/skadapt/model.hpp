#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "skadapt/units.hpp"

namespace skadapt {

using ItemId = std::size_t;

enum class Variant { Risky, NonRisky };

inline const char* to_string(Variant v) {
  return v == Variant::Risky ? "risky" : "nonrisky";
}

inline Variant parse_variant(const std::string& s) {
  if (s == "risky") return Variant::Risky;
  if (s == "nonrisky" || s == "non-risky") return Variant::NonRisky;
  throw std::invalid_argument("unknown variant '" + s + "'");
}

// Thrown when an exact oracle is asked for an instance beyond its limits.
struct size_limit_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Atom {
  Units size = 0;
  double prob = 0.0;
  friend bool operator==(const Atom&, const Atom&) = default;
};

inline constexpr double kProbRenormTol = 1e-9;

// Finite distribution over nonnegative grid sizes. Atoms are sorted by size,
// sizes are distinct and every probability is strictly positive.
class DiscreteDist {
 public:
  DiscreteDist() : atoms_{{0, 1.0}} {}

  explicit DiscreteDist(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
    normalize();
  }

  static DiscreteDist point(Units size) { return DiscreteDist({{size, 1.0}}); }

  std::span<const Atom> atoms() const { return atoms_; }
  std::size_t support() const { return atoms_.size(); }

  double prob_at_most(Units c) const {
    double p = 0.0;
    for (const auto& a : atoms_) {
      if (a.size > c) break;
      p += a.prob;
    }
    return p;
  }

  // Every atom above `scale` is behaviorally "does not fit"; fold them into a
  // single atom at 2*scale.
  DiscreteDist folded(Units scale) const {
    std::vector<Atom> out;
    double over = 0.0;
    for (const auto& a : atoms_) {
      if (a.size > scale)
        over += a.prob;
      else
        out.push_back(a);
    }
    if (over > 0.0) out.push_back({2 * scale, over});
    DiscreteDist d;
    d.atoms_ = std::move(out);
    return d;
  }

  friend bool operator==(const DiscreteDist&, const DiscreteDist&) = default;

 private:
  void normalize() {
    if (atoms_.empty()) throw std::invalid_argument("distribution has no atoms");
    double total = 0.0;
    for (const auto& a : atoms_) {
      if (a.size < 0) throw std::invalid_argument("negative atom size");
      if (!(a.prob >= 0.0) || !std::isfinite(a.prob))
        throw std::invalid_argument("atom probability must be finite and >= 0");
      total += a.prob;
    }
    if (std::abs(total - 1.0) > kProbRenormTol)
      throw std::invalid_argument("atom probabilities sum to " +
                                  std::to_string(total) + ", expected 1");
    std::erase_if(atoms_, [](const Atom& a) { return a.prob == 0.0; });
    std::sort(atoms_.begin(), atoms_.end(),
              [](const Atom& a, const Atom& b) { return a.size < b.size; });
    std::vector<Atom> merged;
    for (const auto& a : atoms_) {
      if (!merged.empty() && merged.back().size == a.size)
        merged.back().prob += a.prob;
      else
        merged.push_back(a);
    }
    atoms_ = std::move(merged);
    double s = 0.0;
    for (const auto& a : atoms_) s += a.prob;
    for (auto& a : atoms_) a.prob /= s;
  }

  std::vector<Atom> atoms_;
};

struct Item {
  double value = 0.0;
  DiscreteDist dist;
};

class Instance {
 public:
  Instance(std::vector<Item> items, Units scale, Variant variant)
      : items_(std::move(items)), scale_(scale), variant_(variant) {
    if (scale_ < 1) throw std::invalid_argument("scale must be >= 1");
    for (auto& it : items_) {
      if (!(it.value >= 0.0) || !std::isfinite(it.value))
        throw std::invalid_argument("item value must be finite and >= 0");
      it.dist = it.dist.folded(scale_);
    }
  }

  std::span<const Item> items() const { return items_; }
  const Item& item(ItemId i) const { return items_.at(i); }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  Units scale() const { return scale_; }
  Variant variant() const { return variant_; }

  Instance with_variant(Variant v) const { return Instance(items_, scale_, v); }

  Instance sub_instance(std::span<const ItemId> ids) const {
    std::vector<Item> sub;
    sub.reserve(ids.size());
    for (ItemId i : ids) sub.push_back(items_.at(i));
    return Instance(std::move(sub), scale_, variant_);
  }

  double total_value() const {
    double v = 0.0;
    for (const auto& it : items_) v += it.value;
    return v;
  }

 private:
  std::vector<Item> items_;
  Units scale_;
  Variant variant_;
};

struct DerivedItemStats {
  double effective_value = 0.0;       // v * Pr(S <= 1)
  double mean_truncated_size = 0.0;   // E[min(S, 1)]
  double density = 0.0;               // w / mu, +inf when mu == 0 < w
};

inline DerivedItemStats item_stats(const Item& it, Units scale) {
  DerivedItemStats s;
  double fit = 0.0;
  long double mu = 0.0L;
  const long double sc = static_cast<long double>(scale);
  for (const auto& a : it.dist.atoms()) {
    if (a.size <= scale) {
      fit += a.prob;
      mu += static_cast<long double>(a.prob) * (static_cast<long double>(a.size) / sc);
    } else {
      mu += a.prob;
    }
  }
  s.effective_value = it.value * fit;
  s.mean_truncated_size = std::min(1.0, static_cast<double>(mu));
  if (s.mean_truncated_size > 0.0)
    s.density = s.effective_value / s.mean_truncated_size;
  else
    s.density = s.effective_value > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  return s;
}

inline std::vector<DerivedItemStats> derive_stats(const Instance& inst) {
  std::vector<DerivedItemStats> out;
  out.reserve(inst.size());
  for (const auto& it : inst.items()) out.push_back(item_stats(it, inst.scale()));
  return out;
}

struct SmallLargePartition {
  std::vector<ItemId> small;
  std::vector<ItemId> large;
};

inline SmallLargePartition classify_small_large(const Instance& inst, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("eps must lie in (0,1)");
  SmallLargePartition p;
  auto stats = derive_stats(inst);
  for (ItemId i = 0; i < stats.size(); ++i)
    (stats[i].mean_truncated_size <= eps ? p.small : p.large).push_back(i);
  return p;
}

// Non-increasing density; zero-size items with positive value first,
// zero-value items last, ties by lower index.
inline std::vector<ItemId> greedy_order(std::span<const DerivedItemStats> stats) {
  std::vector<ItemId> ids(stats.size());
  std::iota(ids.begin(), ids.end(), ItemId{0});
  auto klass = [&](ItemId i) {
    if (stats[i].effective_value <= 0.0) return 2;
    return stats[i].mean_truncated_size == 0.0 ? 0 : 1;
  };
  std::stable_sort(ids.begin(), ids.end(), [&](ItemId a, ItemId b) {
    int ka = klass(a), kb = klass(b);
    if (ka != kb) return ka < kb;
    if (ka == 1 && stats[a].density != stats[b].density)
      return stats[a].density > stats[b].density;
    return a < b;
  });
  return ids;
}

inline std::vector<ItemId> greedy_order(const Instance& inst) {
  auto stats = derive_stats(inst);
  return greedy_order(stats);
}

// Sums over a block of items.
struct BlockTotals {
  double mu = 0.0;
  double value = 0.0;
  double effective_value = 0.0;
};

inline BlockTotals block_totals(std::span<const DerivedItemStats> stats,
                                const Instance& inst, std::span<const ItemId> block) {
  BlockTotals t;
  for (ItemId i : block) {
    t.mu += stats[i].mean_truncated_size;
    t.effective_value += stats[i].effective_value;
    t.value += inst.item(i).value;
  }
  return t;
}

inline void check_block(const Instance& inst, std::span<const ItemId> block) {
  std::vector<char> seen(inst.size(), 0);
  for (ItemId i : block) {
    if (i >= inst.size())
      throw std::invalid_argument("item id " + std::to_string(i + 1) + " out of range");
    if (seen[i]) throw std::invalid_argument("duplicate item id " + std::to_string(i + 1));
    seen[i] = 1;
  }
}

}  // namespace skadapt
