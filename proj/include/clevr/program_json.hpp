#pragma once

#include <charconv>
#include <string>

#include <json.hpp>

#include "clevr/program.hpp"

namespace clevr {

using Json = nlohmann::ordered_json;

inline Json program_to_json(const Program& program) {
  Json nodes = Json::array();
  for (const ProgramNode& n : program.nodes) {
    Json literals = Json::array();
    for (const Literal& l : n.value_inputs) literals.push_back(literal_to_string(l));
    nodes.push_back(Json{{"function", to_string(n.kind)}, {"inputs", n.inputs}, {"value_inputs", literals}});
  }
  return Json{{"nodes", std::move(nodes)}};
}

/// Structural parse only; call typecheck() for well-formedness.
inline Program program_from_json(const Json& j) {
  try {
    const Json& nodes = j.is_array() ? j : j.at("nodes");
    if (!nodes.is_array()) throw ParseError("program 'nodes' must be an array");
    Program p;
    for (const Json& jn : nodes) {
      const std::string name = jn.at("function").get<std::string>();
      auto kind = try_parse_function(name);
      if (!kind) throw ParseError("unknown function '" + name + "'");
      ProgramNode node{*kind, {}, {}};
      if (jn.contains("inputs")) node.inputs = jn.at("inputs").get<std::vector<int>>();
      if (jn.contains("value_inputs")) {
        const auto expected = signature(*kind).literal;
        for (const Json& jl : jn.at("value_inputs")) {
          const std::string text = jl.get<std::string>();
          auto lit = expected ? parse_literal(text, *expected) : parse_any_literal(text);
          if (!lit && expected) lit = parse_any_literal(text);  // surfaced later as a TypeError
          if (!lit) throw ParseError("unknown value input '" + text + "'");
          node.value_inputs.push_back(*lit);
        }
      }
      p.nodes.push_back(std::move(node));
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed program JSON: ") + e.what());
  }
}

/// Parses an answer string ("brown", "yes", "3") as a value of type `type`.
inline std::optional<Value> parse_answer(std::string_view text, ValueType type) {
  switch (type) {
    case ValueType::boolean:
      if (text == "yes") return Value{yes};
      if (text == "no") return Value{no};
      return std::nullopt;
    case ValueType::integer: {
      int v = 0;
      const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec != std::errc{} || ptr != text.data() + text.size() || v < 0 || v > 10) return std::nullopt;
      return Value{Integer{v}};
    }
    default:
      if (auto l = parse_literal(text, type)) {
        return std::visit([](auto v) { return Value{v}; }, *l);
      }
      return std::nullopt;
  }
}

}  // namespace clevr
