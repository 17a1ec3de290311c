#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "skadapt/evalexact.hpp"
#include "skadapt/io.hpp"
#include "skadapt/policies.hpp"
#include "skadapt/policy.hpp"

namespace skadapt {

// Tree JSON: {"query_budget": k (optional), "root": 0,
//             "nodes": [{"id": 0, "insert": [1-based ids],
//                        "children": [[lo, hi, child_id], ...]}, ...]}
// Node ids are arbitrary integers; shared subtrees may be referenced twice.
inline json tree_to_json(const TreePolicy& tree) {
  std::unordered_map<const DecisionNode*, std::size_t> ids;
  std::vector<const DecisionNode*> order;
  std::function<void(const DecisionNode*)> index = [&](const DecisionNode* n) {
    if (ids.count(n)) return;
    ids.emplace(n, order.size());
    order.push_back(n);
    for (const auto& b : n->children) index(b.node.get());
  };
  index(tree.root.get());
  json nodes = json::array();
  for (const DecisionNode* n : order) {
    json kids = json::array();
    for (const auto& b : n->children)
      kids.push_back(json::array({units_to_json(b.lo), units_to_json(b.hi), ids.at(b.node.get())}));
    json ins = json::array();
    for (ItemId i : n->insert) ins.push_back(i + 1);
    nodes.push_back({{"id", ids.at(n)}, {"insert", ins}, {"children", kids}});
  }
  json j = {{"root", 0}, {"nodes", nodes}};
  if (tree.query_budget >= 0) j["query_budget"] = tree.query_budget;
  return j;
}

inline TreePolicy tree_from_json(const json& j) {
  if (!j.is_object() || !j.contains("nodes") || !j.contains("root"))
    throw std::invalid_argument("tree JSON needs 'root' and 'nodes'");
  std::unordered_map<std::int64_t, const json*> raw;
  for (const auto& n : j.at("nodes")) {
    auto id = n.at("id").get<std::int64_t>();
    if (!raw.emplace(id, &n).second) throw std::invalid_argument("duplicate tree node id " + std::to_string(id));
  }
  std::unordered_map<std::int64_t, NodePtr> built;
  std::unordered_map<std::int64_t, bool> active;
  std::function<NodePtr(std::int64_t)> build = [&](std::int64_t id) -> NodePtr {
    if (auto it = built.find(id); it != built.end()) return it->second;
    auto it = raw.find(id);
    if (it == raw.end()) throw std::invalid_argument("tree references unknown node " + std::to_string(id));
    if (active[id]) throw std::invalid_argument("tree has a cycle through node " + std::to_string(id));
    active[id] = true;
    const json& n = *it->second;
    std::vector<ItemId> insert;
    if (n.contains("insert"))
      for (const auto& x : n.at("insert")) {
        auto v = x.get<std::int64_t>();
        if (v < 1) throw std::invalid_argument("tree item ids are 1-based");
        insert.push_back(static_cast<ItemId>(v - 1));
      }
    std::vector<Branch> kids;
    if (n.contains("children"))
      for (const auto& c : n.at("children")) {
        if (!c.is_array() || c.size() != 3) throw std::invalid_argument("tree child must be [lo, hi, node]");
        kids.push_back({units_from_json(c[0]), units_from_json(c[1]), build(c[2].get<std::int64_t>())});
      }
    active[id] = false;
    NodePtr node = make_node(std::move(insert), std::move(kids));
    built.emplace(id, node);
    return node;
  };
  TreePolicy t;
  t.root = build(j.at("root").get<std::int64_t>());
  if (j.contains("query_budget")) t.query_budget = j.at("query_budget").get<int>();
  return t;
}

inline TreePolicy load_tree(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open tree file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("malformed JSON in '" + path + "': " + e.what());
  }
  return tree_from_json(j);
}

struct ParsedPolicy {
  Policy policy;
  std::string name;
  json trace;  // greedy0/semi1 trace when applicable, else null
};

namespace detail {

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

inline double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("bad number '" + s + "' for " + what);
  }
}

inline long parse_long(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    long v = std::stol(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("bad integer '" + s + "' for " + what);
  }
}

// "k=4,alpha=uniform" -> map
inline std::unordered_map<std::string, std::string> parse_kv(const std::string& s) {
  std::unordered_map<std::string, std::string> kv;
  if (s.empty()) return kv;
  for (const auto& part : split(s, ',')) {
    auto eq = part.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("expected key=value, got '" + part + "'");
    kv[part.substr(0, eq)] = part.substr(eq + 1);
  }
  return kv;
}

}  // namespace detail

// Policy strings:
//   plan:3,1,2              fixed order (1-based ids)
//   greedy0                 non-adaptive greedy (half-capacity prefix)
//   semi1                   one-observation greedy
//   semik:k=4,alpha=uniform k observations; alpha=uniform or a/b/c (k+1 values)
//   adaptive                optimal adaptive tree (small instances)
//   large:eps=0.2           adaptive tree for k rounds, then greedy0
//   threshold:k=99          one at a time; once full, stop at k items
//   always                  greedy order, never stop
//   tree:@file.json         explicit decision tree
inline ParsedPolicy parse_policy(const std::string& text, const Instance& inst) {
  auto colon = text.find(':');
  std::string head = text.substr(0, colon);
  std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
  ParsedPolicy out;
  out.name = head;
  out.trace = nullptr;
  if (head == "plan") {
    NonAdaptivePlan plan;
    if (!arg.empty())
      for (const auto& s : detail::split(arg, ',')) {
        long v = detail::parse_long(s, "plan");
        if (v < 1 || static_cast<std::size_t>(v) > inst.size())
          throw std::invalid_argument("plan id " + s + " out of range 1.." + std::to_string(inst.size()));
        plan.order.push_back(static_cast<ItemId>(v - 1));
      }
    check_block(inst, plan.order);
    out.policy = plan;
  } else if (head == "greedy0") {
    auto [plan, tr] = non_adaptive_greedy(inst);
    out.policy = plan;
    out.trace = to_json(tr);
  } else if (head == "semi1") {
    auto [pol, tr] = one_semi_adaptive_greedy(inst);
    out.policy = pol;
    out.trace = to_json(tr);
  } else if (head == "semik") {
    auto kv = detail::parse_kv(arg);
    if (!kv.count("k")) throw std::invalid_argument("semik needs k=<int>");
    long k = detail::parse_long(kv["k"], "k");
    if (k < 0) throw std::invalid_argument("k must be >= 0");
    AlphaVector alpha;
    std::string a = kv.count("alpha") ? kv["alpha"] : "uniform";
    if (a == "uniform") {
      alpha = optimal_alpha(static_cast<int>(k));
    } else {
      for (const auto& s : detail::split(a, '/')) alpha.push_back(detail::parse_double(s, "alpha"));
    }
    out.policy = semi_adaptive_greedy(inst, static_cast<int>(k), alpha);
  } else if (head == "adaptive") {
    out.policy = optimal_adaptive(inst).tree;
  } else if (head == "large") {
    auto kv = detail::parse_kv(arg);
    if (!kv.count("eps")) throw std::invalid_argument("large needs eps=<float>");
    out.policy = large_item_hybrid(inst, detail::parse_double(kv["eps"], "eps"));
  } else if (head == "threshold") {
    auto kv = detail::parse_kv(arg);
    if (!kv.count("k")) throw std::invalid_argument("threshold needs k=<int>");
    long k = detail::parse_long(kv["k"], "k");
    if (k < 0) throw std::invalid_argument("k must be >= 0");
    out.policy = full_threshold_policy(inst, static_cast<std::size_t>(k));
  } else if (head == "always") {
    out.policy = NonAdaptivePlan{greedy_order(inst)};
  } else if (head == "tree") {
    if (arg.empty() || arg[0] != '@') throw std::invalid_argument("tree policy must be tree:@file.json");
    TreePolicy t = load_tree(arg.substr(1));
    validate_tree(inst, t);
    out.policy = t;
  } else {
    throw std::invalid_argument("unknown policy '" + text + "'");
  }
  return out;
}

}  // namespace skadapt
