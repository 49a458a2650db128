#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "clevr/attributes.hpp"
#include "clevr/scene.hpp"

namespace clevr {

enum class ValueType : std::uint8_t {
  object,
  object_set,
  integer,
  boolean,
  size,
  color,
  shape,
  material,
  relation,
};

constexpr std::string_view to_string(ValueType t) {
  constexpr std::array<std::string_view, 9> names = {"Object", "ObjectSet", "Integer",
                                                     "Boolean", "Size",     "Color",
                                                     "Shape",   "Material", "Relation"};
  return names[static_cast<int>(t)];
}

/// A single object, by position in the scene's object list.
struct ObjectRef {
  std::size_t index = 0;
  friend constexpr auto operator<=>(ObjectRef, ObjectRef) = default;
};

/// Integer in [0, 10].
struct Integer {
  int value = 0;
  friend constexpr auto operator<=>(Integer, Integer) = default;
};

struct Boolean {
  bool value = false;
  friend constexpr auto operator<=>(Boolean, Boolean) = default;
};

inline constexpr Boolean yes{true};
inline constexpr Boolean no{false};

/// Runtime values of the DSL. Alternative order matches ValueType.
using Value =
    std::variant<ObjectRef, ObjectSet, Integer, Boolean, Size, Color, Shape, Material, Relation>;

constexpr ValueType type_of(const Value& v) { return static_cast<ValueType>(v.index()); }

/// Literal arguments carried by filter/relate nodes.
using Literal = std::variant<Size, Color, Shape, Material, Relation>;

constexpr ValueType type_of(const Literal& l) {
  return static_cast<ValueType>(static_cast<int>(ValueType::size) + static_cast<int>(l.index()));
}

inline std::string literal_to_string(const Literal& l) {
  return std::visit([](auto v) { return std::string(to_string(v)); }, l);
}

inline std::optional<Literal> parse_literal(std::string_view text, ValueType type) {
  switch (type) {
    case ValueType::size:
      if (auto v = try_parse<Size>(text)) return Literal{*v};
      break;
    case ValueType::color:
      if (auto v = try_parse<Color>(text)) return Literal{*v};
      break;
    case ValueType::shape:
      if (auto v = try_parse<Shape>(text)) return Literal{*v};
      break;
    case ValueType::material:
      if (auto v = try_parse<Material>(text)) return Literal{*v};
      break;
    case ValueType::relation:
      if (auto v = try_parse<Relation>(text)) return Literal{*v};
      break;
    default: break;
  }
  return std::nullopt;
}

/// Literal of any attribute/relation type; used where the expected type is unknown.
inline std::optional<Literal> parse_any_literal(std::string_view text) {
  for (ValueType t : {ValueType::size, ValueType::color, ValueType::shape, ValueType::material,
                      ValueType::relation}) {
    if (auto l = parse_literal(text, t)) return l;
  }
  return std::nullopt;
}

/// Lowercase answer text, e.g. "brown", "yes", "3". Objects and sets have no answer form.
inline std::string answer_string(const Value& v) {
  return std::visit(
      [](auto x) -> std::string {
        using T = decltype(x);
        if constexpr (std::is_same_v<T, ObjectRef>) return "object#" + std::to_string(x.index);
        else if constexpr (std::is_same_v<T, ObjectSet>) return "set:" + std::to_string(x.bits());
        else if constexpr (std::is_same_v<T, Integer>) return std::to_string(x.value);
        else if constexpr (std::is_same_v<T, Boolean>) return x.value ? "yes" : "no";
        else return std::string(to_string(x));
      },
      v);
}

enum class FunctionKind : std::uint8_t {
  scene,
  unique,
  relate,
  count,
  exist,
  filter_size,
  filter_color,
  filter_material,
  filter_shape,
  query_size,
  query_color,
  query_material,
  query_shape,
  logical_and,
  logical_or,
  same_size,
  same_color,
  same_material,
  same_shape,
  equal_integer,
  less_than,
  greater_than,
  equal_size,
  equal_color,
  equal_material,
  equal_shape,
};

inline constexpr int kFunctionKindCount = 26;

struct Signature {
  std::string_view name;
  std::array<ValueType, 2> inputs;
  int arity;
  std::optional<ValueType> literal;
  ValueType output;
};

namespace detail {

using VT = ValueType;
inline constexpr VT kNone = VT::object;  // unused input slot

inline constexpr std::array<Signature, kFunctionKindCount> kSignatures = {{
    {"scene", {kNone, kNone}, 0, std::nullopt, VT::object_set},
    {"unique", {VT::object_set, kNone}, 1, std::nullopt, VT::object},
    {"relate", {VT::object, kNone}, 1, VT::relation, VT::object_set},
    {"count", {VT::object_set, kNone}, 1, std::nullopt, VT::integer},
    {"exist", {VT::object_set, kNone}, 1, std::nullopt, VT::boolean},
    {"filter_size", {VT::object_set, kNone}, 1, VT::size, VT::object_set},
    {"filter_color", {VT::object_set, kNone}, 1, VT::color, VT::object_set},
    {"filter_material", {VT::object_set, kNone}, 1, VT::material, VT::object_set},
    {"filter_shape", {VT::object_set, kNone}, 1, VT::shape, VT::object_set},
    {"query_size", {VT::object, kNone}, 1, std::nullopt, VT::size},
    {"query_color", {VT::object, kNone}, 1, std::nullopt, VT::color},
    {"query_material", {VT::object, kNone}, 1, std::nullopt, VT::material},
    {"query_shape", {VT::object, kNone}, 1, std::nullopt, VT::shape},
    {"AND", {VT::object_set, VT::object_set}, 2, std::nullopt, VT::object_set},
    {"OR", {VT::object_set, VT::object_set}, 2, std::nullopt, VT::object_set},
    {"same_size", {VT::object, kNone}, 1, std::nullopt, VT::object_set},
    {"same_color", {VT::object, kNone}, 1, std::nullopt, VT::object_set},
    {"same_material", {VT::object, kNone}, 1, std::nullopt, VT::object_set},
    {"same_shape", {VT::object, kNone}, 1, std::nullopt, VT::object_set},
    {"equal_integer", {VT::integer, VT::integer}, 2, std::nullopt, VT::boolean},
    {"less_than", {VT::integer, VT::integer}, 2, std::nullopt, VT::boolean},
    {"greater_than", {VT::integer, VT::integer}, 2, std::nullopt, VT::boolean},
    {"equal_size", {VT::size, VT::size}, 2, std::nullopt, VT::boolean},
    {"equal_color", {VT::color, VT::color}, 2, std::nullopt, VT::boolean},
    {"equal_material", {VT::material, VT::material}, 2, std::nullopt, VT::boolean},
    {"equal_shape", {VT::shape, VT::shape}, 2, std::nullopt, VT::boolean},
}};

}  // namespace detail

constexpr const Signature& signature(FunctionKind k) {
  return detail::kSignatures[static_cast<int>(k)];
}

constexpr std::string_view to_string(FunctionKind k) { return signature(k).name; }

inline std::optional<FunctionKind> try_parse_function(std::string_view name) {
  for (int i = 0; i < kFunctionKindCount; ++i) {
    if (detail::kSignatures[i].name == name) return static_cast<FunctionKind>(i);
  }
  if (name == "and" || name == "intersect") return FunctionKind::logical_and;
  if (name == "or" || name == "union") return FunctionKind::logical_or;
  return std::nullopt;
}

/// Attribute addressed by a filter/query/same/equal function, if any.
constexpr std::optional<AttributeKind> attribute_of(FunctionKind k) {
  using F = FunctionKind;
  switch (k) {
    case F::filter_size: case F::query_size: case F::same_size: case F::equal_size:
      return AttributeKind::size;
    case F::filter_color: case F::query_color: case F::same_color: case F::equal_color:
      return AttributeKind::color;
    case F::filter_material: case F::query_material: case F::same_material: case F::equal_material:
      return AttributeKind::material;
    case F::filter_shape: case F::query_shape: case F::same_shape: case F::equal_shape:
      return AttributeKind::shape;
    default: return std::nullopt;
  }
}

constexpr bool is_filter(FunctionKind k) {
  return k >= FunctionKind::filter_size && k <= FunctionKind::filter_shape;
}
constexpr bool is_query(FunctionKind k) {
  return k >= FunctionKind::query_size && k <= FunctionKind::query_shape;
}
constexpr bool is_same(FunctionKind k) {
  return k >= FunctionKind::same_size && k <= FunctionKind::same_shape;
}
constexpr bool is_integer_comparison(FunctionKind k) {
  return k >= FunctionKind::equal_integer && k <= FunctionKind::greater_than;
}
constexpr bool is_attribute_comparison(FunctionKind k) {
  return k >= FunctionKind::equal_size && k <= FunctionKind::equal_shape;
}

/// Root kinds that produce answers: count, exist, queries and comparisons.
constexpr bool is_root_kind(FunctionKind k) {
  return k == FunctionKind::count || k == FunctionKind::exist || is_query(k) ||
         is_integer_comparison(k) || is_attribute_comparison(k);
}

struct ProgramNode {
  FunctionKind kind = FunctionKind::scene;
  std::vector<int> inputs;
  std::vector<Literal> value_inputs;

  friend bool operator==(const ProgramNode&, const ProgramNode&) = default;
};

/// Function DAG in topological order; the last node is the root.
struct Program {
  std::vector<ProgramNode> nodes;

  int root() const { return static_cast<int>(nodes.size()) - 1; }
  std::size_t size() const { return nodes.size(); }
  FunctionKind question_type() const { return nodes.back().kind; }

  int add(FunctionKind kind, std::vector<int> inputs = {}, std::vector<Literal> literals = {}) {
    nodes.push_back({kind, std::move(inputs), std::move(literals)});
    return root();
  }

  friend bool operator==(const Program&, const Program&) = default;
};

struct TypeError {
  int node = -1;
  std::string expected;
  std::string found;

  std::string message() const {
    return "node " + std::to_string(node) + ": expected " + expected + ", found " + found;
  }
  friend bool operator==(const TypeError&, const TypeError&) = default;
};

/// Checks DAG ordering and every node's signature. Returns the first violation in
/// topological order, or nullopt when the program is well-typed.
inline std::optional<TypeError> typecheck(const Program& program) {
  if (program.nodes.empty()) return TypeError{0, "at least one node", "empty program"};
  for (int i = 0; i < static_cast<int>(program.nodes.size()); ++i) {
    const ProgramNode& node = program.nodes[i];
    const Signature& sig = signature(node.kind);
    if (static_cast<int>(node.inputs.size()) != sig.arity) {
      return TypeError{i, std::to_string(sig.arity) + " inputs", std::to_string(node.inputs.size()) + " inputs"};
    }
    for (int slot = 0; slot < sig.arity; ++slot) {
      const int src = node.inputs[slot];
      if (src < 0 || src >= i) {
        return TypeError{i, "input index in [0, " + std::to_string(i) + ")", std::to_string(src)};
      }
      const ValueType got = signature(program.nodes[src].kind).output;
      if (got != sig.inputs[slot]) {
        return TypeError{i, std::string(to_string(sig.inputs[slot])), std::string(to_string(got))};
      }
    }
    const std::size_t literal_count = sig.literal ? 1 : 0;
    if (node.value_inputs.size() != literal_count) {
      return TypeError{i, std::to_string(literal_count) + " value inputs",
                       std::to_string(node.value_inputs.size()) + " value inputs"};
    }
    if (sig.literal && type_of(node.value_inputs[0]) != *sig.literal) {
      return TypeError{i, std::string(to_string(*sig.literal)),
                       std::string(to_string(type_of(node.value_inputs[0])))};
    }
  }
  return std::nullopt;
}

/// Nodes reachable from the root.
inline std::vector<bool> reachable_nodes(const Program& program) {
  std::vector<bool> live(program.nodes.size(), false);
  if (program.nodes.empty()) return live;
  live.back() = true;
  for (int i = program.root(); i >= 0; --i) {
    if (!live[i]) continue;
    for (int src : program.nodes[i].inputs) live[src] = true;
  }
  return live;
}

/// Drops nodes the root does not depend on, preserving relative order.
inline Program compact(const Program& program) {
  const auto live = reachable_nodes(program);
  std::vector<int> remap(program.nodes.size(), -1);
  Program out;
  for (std::size_t i = 0; i < program.nodes.size(); ++i) {
    if (!live[i]) continue;
    ProgramNode node = program.nodes[i];
    for (int& src : node.inputs) src = remap[src];
    remap[i] = static_cast<int>(out.nodes.size());
    out.nodes.push_back(std::move(node));
  }
  return out;
}

/// Nested functional form, e.g. "count(filter_color(red, scene()))".
inline std::string to_functional_string(const Program& program, int node = -1) {
  if (node < 0) node = program.root();
  const ProgramNode& n = program.nodes.at(node);
  std::string out(to_string(n.kind));
  out += '(';
  bool first = true;
  for (const Literal& l : n.value_inputs) {
    out += literal_to_string(l);
    first = false;
  }
  for (int src : n.inputs) {
    if (!first) out += ", ";
    out += to_functional_string(program, src);
    first = false;
  }
  out += ')';
  return out;
}

}  // namespace clevr
