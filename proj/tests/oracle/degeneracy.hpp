#pragma once

// Test-only second implementation of the degeneracy rule, on ids and attribute words:
// a reference is degenerate when the attribute filters directly above its qualifier
// already pick out exactly one object.

#include <string>

#include "clevr/program.hpp"
#include "clevr/scene.hpp"
#include "oracle/brute_force.hpp"

namespace oracle {

inline bool is_degenerate(const clevr::Program& p, const clevr::SceneGraph& scene) {
  for (const auto& node : p.nodes) {
    if (std::string(clevr::to_string(node.kind)) != "unique") continue;
    std::vector<std::pair<std::string, std::string>> filters;
    const clevr::ProgramNode* below = &p.nodes[node.inputs[0]];
    while (std::string(clevr::to_string(below->kind)).rfind("filter_", 0) == 0) {
      filters.emplace_back(suffix_attr(std::string(clevr::to_string(below->kind))),
                           clevr::literal_to_string(below->value_inputs[0]));
      below = &p.nodes[below->inputs[0]];
    }
    const std::string name(clevr::to_string(below->kind));
    const bool qualifier = name == "relate" || name == "AND" || name == "OR" || name.rfind("same_", 0) == 0;
    if (!qualifier) continue;
    int matches = 0;
    for (const auto& o : scene.objects()) {
      bool all = true;
      for (const auto& [attr, word] : filters) all = all && attr_word(o, attr) == word;
      matches += all;
    }
    if (matches == 1) return true;
  }
  return false;
}

}  // namespace oracle
