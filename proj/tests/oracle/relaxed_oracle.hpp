#pragma once

// Test-only exhaustive effective-size oracle. Evaluates a program with an arbitrary set of
// input edges cut (cut edges read every object), using id sets and attribute words, and
// tries every subset of cuttable edges.

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "clevr/program.hpp"
#include "clevr/scene.hpp"
#include "oracle/brute_force.hpp"

namespace oracle {

using Cut = std::set<std::pair<int, int>>;  // (consumer, slot)

struct RValue {
  bool is_words = false;
  std::set<int> ids;
  std::set<std::string> words;
};

inline RValue relaxed_eval(const clevr::Program& p, int node, const clevr::SceneGraph& scene, const Cut& cut) {
  const auto& n = p.nodes.at(node);
  const std::string name(clevr::to_string(n.kind));
  auto arg = [&](int i) {
    if (cut.count({node, i}) != 0) {
      RValue all;
      for (const auto& o : scene.objects()) all.ids.insert(o.id);
      return all;
    }
    return relaxed_eval(p, n.inputs.at(i), scene, cut);
  };
  auto literal = [&] { return clevr::literal_to_string(n.value_inputs.at(0)); };
  RValue out;
  if (name == "scene") {
    for (const auto& o : scene.objects()) out.ids.insert(o.id);
  } else if (name == "unique") {
    out = arg(0);
  } else if (name == "relate") {
    for (int anchor : arg(0).ids) {
      for (const auto& o : scene.objects()) {
        if (in_relation(scene, o.id, anchor, literal())) out.ids.insert(o.id);
      }
    }
  } else if (name.rfind("same_", 0) == 0) {
    const std::string attr = suffix_attr(name);
    for (int anchor : arg(0).ids) {
      for (const auto& o : scene.objects()) {
        if (o.id != anchor && attr_word(o, attr) == attr_word(record(scene, anchor), attr)) out.ids.insert(o.id);
      }
    }
  } else if (name.rfind("filter_", 0) == 0) {
    for (int id : arg(0).ids) {
      if (attr_word(record(scene, id), suffix_attr(name)) == literal()) out.ids.insert(id);
    }
  } else if (name == "AND" || name == "OR") {
    const RValue a = arg(0), b = arg(1);
    for (const auto& o : scene.objects()) {
      const bool ina = a.ids.count(o.id) > 0, inb = b.ids.count(o.id) > 0;
      if (name == "AND" ? (ina && inb) : (ina || inb)) out.ids.insert(o.id);
    }
  } else if (name == "count") {
    out.is_words = true;
    out.words.insert(std::to_string(arg(0).ids.size()));
  } else if (name == "exist") {
    out.is_words = true;
    out.words.insert(arg(0).ids.empty() ? "no" : "yes");
  } else if (name.rfind("query_", 0) == 0) {
    out.is_words = true;
    for (int id : arg(0).ids) out.words.insert(attr_word(record(scene, id), suffix_attr(name)));
  } else {
    const RValue a = arg(0), b = arg(1);
    out.is_words = true;
    for (const auto& x : a.words) {
      for (const auto& y : b.words) {
        bool r = x == y;
        if (name == "less_than") r = std::stoi(x) < std::stoi(y);
        if (name == "greater_than") r = std::stoi(x) > std::stoi(y);
        out.words.insert(r ? "yes" : "no");
      }
    }
  }
  return out;
}

/// Node count of the program after cutting: surviving original nodes plus one scene per
/// live cut edge.
inline int cut_size(const clevr::Program& p, const Cut& cut) {
  std::set<int> seen;
  int scenes = 0;
  std::vector<int> stack{p.root()};
  while (!stack.empty()) {
    const int n = stack.back();
    stack.pop_back();
    if (!seen.insert(n).second) continue;
    for (int s = 0; s < static_cast<int>(p.nodes[n].inputs.size()); ++s) {
      if (cut.count({n, s}) != 0) ++scenes;
      else stack.push_back(p.nodes[n].inputs[s]);
    }
  }
  return static_cast<int>(seen.size()) + scenes;
}

/// Smallest cut size whose relaxed answer is exactly {answer}.
inline int exhaustive_effective_size(const clevr::Program& p, const clevr::SceneGraph& scene,
                                     const std::string& answer) {
  std::vector<std::pair<int, int>> edges;
  for (int n = 0; n < static_cast<int>(p.nodes.size()); ++n) {
    for (int s = 0; s < static_cast<int>(p.nodes[n].inputs.size()); ++s) {
      const auto& src = p.nodes[p.nodes[n].inputs[s]];
      const auto out = clevr::signature(src.kind).output;
      const bool objects = out == clevr::ValueType::object || out == clevr::ValueType::object_set;
      if (objects && src.kind != clevr::FunctionKind::scene) edges.emplace_back(n, s);
    }
  }
  int best = static_cast<int>(p.size());
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << edges.size()); ++mask) {
    Cut cut;
    for (std::size_t i = 0; i < edges.size(); ++i) {
      if ((mask >> i) & 1U) cut.insert(edges[i]);
    }
    const int size = cut_size(p, cut);
    if (size >= best) continue;
    const RValue v = relaxed_eval(p, p.root(), scene, cut);
    if (v.is_words && v.words == std::set<std::string>{answer}) best = size;
  }
  return best;
}

}  // namespace oracle
