#pragma once

#include <cassert>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "clevr/program.hpp"
#include "clevr/scene.hpp"

namespace clevr {

enum class FailureKind : std::uint8_t { ill_posed, type_error, unknown_object };

constexpr std::string_view to_string(FailureKind k) {
  switch (k) {
    case FailureKind::ill_posed: return "ill_posed";
    case FailureKind::type_error: return "type_error";
    case FailureKind::unknown_object: return "unknown_object";
  }
  return "ill_posed";
}

struct ExecFailure {
  FailureKind kind = FailureKind::ill_posed;
  int node = -1;
  int set_size = -1;  // |input| of the failing unique, for ill-posed failures
  std::string detail;
};

class ExecOutcome {
 public:
  ExecOutcome(Value v) : result_(std::move(v)) {}  // NOLINT: implicit by design of the result type
  ExecOutcome(ExecFailure f) : result_(std::move(f)) {}  // NOLINT

  bool ok() const { return std::holds_alternative<Value>(result_); }
  explicit operator bool() const { return ok(); }
  const Value& answer() const { return std::get<Value>(result_); }
  const ExecFailure& failure() const { return std::get<ExecFailure>(result_); }

 private:
  std::variant<Value, ExecFailure> result_;
};

namespace detail {

inline ObjectSet filter_by(const SceneGraph& scene, ObjectSet in, AttributeKind kind, int code) {
  ObjectSet out;
  in.for_each([&](std::size_t i) {
    if (attribute_code(scene.at(i), kind) == code) out.insert(i);
  });
  return out;
}

inline int literal_code(const Literal& l) {
  return std::visit([](auto v) { return static_cast<int>(v); }, l);
}

inline Value query_value(const ObjectRecord& o, AttributeKind kind) {
  switch (kind) {
    case AttributeKind::size: return o.size;
    case AttributeKind::color: return o.color;
    case AttributeKind::material: return o.material;
    case AttributeKind::shape: return o.shape;
  }
  return o.size;
}

}  // namespace detail

/// Applies one function to already-evaluated inputs. Inputs must match the signature.
inline ExecOutcome apply_function(const ProgramNode& node, std::span<const Value> in,
                                  const SceneGraph& scene, int node_index = -1) {
  using F = FunctionKind;
  auto object_at = [&](const Value& v) -> std::optional<std::size_t> {
    const std::size_t i = std::get<ObjectRef>(v).index;
    if (i >= scene.size()) return std::nullopt;
    return i;
  };
  auto unknown = [&] {
    return ExecFailure{FailureKind::unknown_object, node_index, -1, "object reference outside scene"};
  };
  const F k = node.kind;
  switch (k) {
    case F::scene: return Value{scene.all()};
    case F::unique: {
      const ObjectSet s = std::get<ObjectSet>(in[0]);
      if (s.size() != 1) {
        return ExecFailure{FailureKind::ill_posed, node_index, s.size(),
                           "unique over " + std::to_string(s.size()) + " objects"};
      }
      return Value{ObjectRef{s.front()}};
    }
    case F::relate: {
      auto i = object_at(in[0]);
      if (!i) return unknown();
      return Value{scene.related_to(*i, std::get<Relation>(node.value_inputs[0]))};
    }
    case F::count: {
      const int n = std::get<ObjectSet>(in[0]).size();
      assert(n <= 10);
      return Value{Integer{n}};
    }
    case F::exist: return Value{Boolean{!std::get<ObjectSet>(in[0]).empty()}};
    case F::logical_and: return Value{std::get<ObjectSet>(in[0]) & std::get<ObjectSet>(in[1])};
    case F::logical_or: return Value{std::get<ObjectSet>(in[0]) | std::get<ObjectSet>(in[1])};
    case F::equal_integer:
      return Value{Boolean{std::get<Integer>(in[0]).value == std::get<Integer>(in[1]).value}};
    case F::less_than:
      return Value{Boolean{std::get<Integer>(in[0]).value < std::get<Integer>(in[1]).value}};
    case F::greater_than:
      return Value{Boolean{std::get<Integer>(in[0]).value > std::get<Integer>(in[1]).value}};
    default: break;
  }
  const AttributeKind attr = *attribute_of(k);
  if (is_filter(k)) {
    return Value{detail::filter_by(scene, std::get<ObjectSet>(in[0]), attr,
                                   detail::literal_code(node.value_inputs[0]))};
  }
  if (is_query(k)) {
    auto i = object_at(in[0]);
    if (!i) return unknown();
    return detail::query_value(scene.at(*i), attr);
  }
  if (is_same(k)) {
    auto i = object_at(in[0]);
    if (!i) return unknown();
    return Value{scene.same_attribute(*i, attr)};
  }
  // Attribute comparison: both inputs hold the same alternative.
  return Value{Boolean{in[0] == in[1]}};
}

/// Evaluates every node bottom-up; on success the vector holds one value per node.
inline std::variant<std::vector<Value>, ExecFailure> evaluate_all(const Program& program,
                                                                  const SceneGraph& scene) {
  if (auto err = typecheck(program)) {
    return ExecFailure{FailureKind::type_error, err->node, -1, err->message()};
  }
  std::vector<Value> values;
  values.reserve(program.nodes.size());
  std::array<Value, 2> args;
  for (int i = 0; i < static_cast<int>(program.nodes.size()); ++i) {
    const ProgramNode& node = program.nodes[i];
    for (std::size_t s = 0; s < node.inputs.size(); ++s) args[s] = values[node.inputs[s]];
    ExecOutcome out = apply_function(node, std::span<const Value>(args.data(), node.inputs.size()),
                                     scene, i);
    if (!out) return out.failure();
    values.push_back(out.answer());
  }
  return values;
}

/// Strict execution. Any ill-posed unique anywhere in the DAG fails the whole program.
inline ExecOutcome execute(const Program& program, const SceneGraph& scene) {
  auto all = evaluate_all(program, scene);
  if (auto* f = std::get_if<ExecFailure>(&all)) return *f;
  return std::get<std::vector<Value>>(all).back();
}

class NotARootKind : public std::invalid_argument {
 public:
  explicit NotARootKind(FunctionKind k)
      : std::invalid_argument(std::string(to_string(k)) + " does not produce an answer") {}
};

/// All answers a question of the given type can have.
inline std::vector<Value> answer_space(FunctionKind question_type) {
  std::vector<Value> out;
  auto add_all = [&](const auto& values) {
    for (auto v : values) out.emplace_back(v);
  };
  switch (question_type) {
    case FunctionKind::query_size: add_all(kSizes); break;
    case FunctionKind::query_color: add_all(kColors); break;
    case FunctionKind::query_material: add_all(kMaterials); break;
    case FunctionKind::query_shape: add_all(kShapes); break;
    case FunctionKind::count:
      for (int i = 0; i <= 10; ++i) out.emplace_back(Integer{i});
      break;
    default:
      if (!is_root_kind(question_type)) throw NotARootKind(question_type);
      out = {Value{yes}, Value{no}};
  }
  return out;
}

}  // namespace clevr
