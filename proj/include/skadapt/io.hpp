#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "skadapt/model.hpp"

namespace skadapt {

using json = nlohmann::json;

inline json units_to_json(Units u) {
  if (fits_int64(u)) return json(static_cast<std::int64_t>(u));
  return json(to_string(u));
}

inline Units units_from_json(const json& j) {
  if (j.is_number_integer()) return static_cast<Units>(j.get<std::int64_t>());
  if (j.is_number_unsigned()) return static_cast<Units>(j.get<std::uint64_t>());
  if (j.is_string()) return parse_units(j.get<std::string>());
  throw std::invalid_argument("grid size must be an integer (or decimal string)");
}

// {"variant":"risky"|"nonrisky","scale":<int>,"items":[{"value":v,"atoms":[[s,p],...]},...]}
inline json instance_to_json(const Instance& inst) {
  json items = json::array();
  for (const auto& it : inst.items()) {
    json atoms = json::array();
    for (const auto& a : it.dist.atoms()) atoms.push_back(json::array({units_to_json(a.size), a.prob}));
    items.push_back({{"value", it.value}, {"atoms", std::move(atoms)}});
  }
  return {{"variant", to_string(inst.variant())},
          {"scale", units_to_json(inst.scale())},
          {"items", std::move(items)}};
}

inline Instance instance_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("instance JSON must be an object");
  for (const char* key : {"variant", "scale", "items"})
    if (!j.contains(key)) throw std::invalid_argument(std::string("instance JSON missing '") + key + "'");
  Variant variant = parse_variant(j.at("variant").get<std::string>());
  Units scale = units_from_json(j.at("scale"));
  std::vector<Item> items;
  for (const auto& jit : j.at("items")) {
    Item it;
    it.value = jit.at("value").get<double>();
    std::vector<Atom> atoms;
    for (const auto& ja : jit.at("atoms")) {
      if (!ja.is_array() || ja.size() != 2)
        throw std::invalid_argument("atom must be a [size, prob] pair");
      atoms.push_back({units_from_json(ja[0]), ja[1].get<double>()});
    }
    it.dist = DiscreteDist(std::move(atoms));
    items.push_back(std::move(it));
  }
  return Instance(std::move(items), scale, variant);
}

inline Instance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open instance file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("malformed JSON in '" + path + "': " + e.what());
  }
  return instance_from_json(j);
}

inline void save_json(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

// 12 significant digits, as printed in reports.
inline std::string num12(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

// Rounds every floating-point number in `j` to 12 significant digits so that
// the shortest round-trip form printed by dump() has at most 12 digits.
inline json round_sig(const json& j) {
  if (j.is_number_float()) {
    double x = j.get<double>();
    if (!std::isfinite(x)) return num12(x);
    return std::strtod(num12(x).c_str(), nullptr);
  }
  if (j.is_array()) {
    json out = json::array();
    for (const auto& e : j) out.push_back(round_sig(e));
    return out;
  }
  if (j.is_object()) {
    json out = json::object();
    for (auto it = j.begin(); it != j.end(); ++it) out[it.key()] = round_sig(it.value());
    return out;
  }
  return j;
}

// FNV-1a over the canonical (sorted-key, compact) JSON of the normalized
// instance, numbers at 12 significant digits so that renormalization noise
// from a save/load round trip does not change it.
inline std::string fingerprint(const Instance& inst) {
  std::string canon = round_sig(instance_to_json(inst)).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canon) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace skadapt
