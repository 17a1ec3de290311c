#pragma once

#include <algorithm>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "skadapt/model.hpp"

namespace skadapt {

struct DecisionNode;
using NodePtr = std::shared_ptr<const DecisionNode>;

// Child selected when the remaining capacity after the node's block lies in
// [lo, hi] (grid units, inclusive).
struct Branch {
  Units lo = 0;
  Units hi = 0;
  NodePtr node;
};

// Empty `insert` is Stop. A node with no children stops after its block; a
// node with more than one child is an observation point.
struct DecisionNode {
  std::vector<ItemId> insert;
  std::vector<Branch> children;

  bool is_stop() const { return insert.empty(); }
  bool observes() const { return children.size() > 1; }
};

inline NodePtr make_stop() { return std::make_shared<const DecisionNode>(); }

inline NodePtr make_node(std::vector<ItemId> insert, std::vector<Branch> children = {}) {
  return std::make_shared<const DecisionNode>(DecisionNode{std::move(insert), std::move(children)});
}

struct TreePolicy {
  NodePtr root = make_stop();
  int query_budget = -1;  // -1: unbounded
};

struct NonAdaptivePlan {
  std::vector<ItemId> order;
};

// What a procedural rule sees at a decision point. `stage` is the opaque
// counter returned by the rule's previous step (0 at the start).
struct Observation {
  Units remaining = 0;
  std::size_t stage = 0;
  int queries_used = 0;
  std::span<const ItemId> inserted;
};

// Insert `block` in order; if everything fits and `observe` is set, the rule
// is consulted again with the new remaining capacity. Empty block stops.
struct Step {
  std::vector<ItemId> block;
  bool observe = false;
  std::size_t next_stage = 0;
};

// Rules must be deterministic functions of the observation.
class BlockRule {
 public:
  virtual ~BlockRule() = default;
  virtual Step next(const Observation& obs) const = 0;
};

struct ProceduralPolicy {
  std::string family;
  nlohmann::json params = nlohmann::json::object();
  std::shared_ptr<const BlockRule> rule;
};

using Policy = std::variant<NonAdaptivePlan, TreePolicy, ProceduralPolicy>;

// Rule that plays a fixed plan and never observes.
class PlanRule final : public BlockRule {
 public:
  explicit PlanRule(std::vector<ItemId> order) : order_(std::move(order)) {}
  Step next(const Observation& obs) const override {
    if (obs.stage != 0) return {};
    return {order_, false, 1};
  }

 private:
  std::vector<ItemId> order_;
};

inline ProceduralPolicy as_procedural(const NonAdaptivePlan& plan) {
  nlohmann::json order = nlohmann::json::array();
  for (ItemId i : plan.order) order.push_back(i + 1);
  return {"plan", {{"order", order}}, std::make_shared<PlanRule>(plan.order)};
}

inline const Branch* select_child(const DecisionNode& node, Units remaining) {
  for (const auto& b : node.children)
    if (remaining >= b.lo && remaining <= b.hi) return &b;
  return nullptr;
}

// Throws std::invalid_argument if some node's child intervals are not
// disjoint or do not cover [0, scale].
inline void check_intervals(const DecisionNode& node, Units scale) {
  if (node.children.empty()) return;
  if (node.insert.empty()) throw std::invalid_argument("stop node cannot have children");
  std::vector<Branch> sorted = node.children;
  std::sort(sorted.begin(), sorted.end(), [](const Branch& a, const Branch& b) { return a.lo < b.lo; });
  Units next = 0;
  for (const auto& b : sorted) {
    if (!b.node) throw std::invalid_argument("tree branch has no child node");
    if (b.lo > b.hi) throw std::invalid_argument("empty capacity interval [" + to_string(b.lo) + "," + to_string(b.hi) + "]");
    if (b.lo != next)
      throw std::invalid_argument(b.lo < next ? "overlapping capacity intervals"
                                              : "capacity intervals leave a gap at " + to_string(next));
    next = b.hi + 1;
  }
  if (next != scale + 1) throw std::invalid_argument("capacity intervals must cover [0, scale]");
}

}  // namespace skadapt
