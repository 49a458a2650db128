#pragma once

#include <algorithm>
#include <array>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <variant>
#include <vector>

#include "clevr/executor.hpp"
#include "clevr/program.hpp"
#include "clevr/program_json.hpp"
#include "clevr/scene.hpp"

namespace clevr {

/// Sorted, duplicate-free set of scalar values (attributes, integers, booleans).
using ValueSet = std::vector<Value>;

/// Relaxed-semantics value: objects become object sets, queries return value sets.
using RelaxedValue = std::variant<ObjectSet, ValueSet>;

namespace detail {

inline void insert_sorted(ValueSet& set, const Value& v) {
  auto it = std::lower_bound(set.begin(), set.end(), v);
  if (it == set.end() || *it != v) set.insert(it, v);
}

inline RelaxedValue relaxed_apply(const ProgramNode& node, const RelaxedValue* in,
                                  const SceneGraph& scene) {
  using F = FunctionKind;
  const F k = node.kind;
  auto objects = [&](int i) { return std::get<ObjectSet>(in[i]); };
  switch (k) {
    case F::scene: return scene.all();
    case F::unique: return objects(0);
    case F::relate: {
      ObjectSet out;
      const Relation r = std::get<Relation>(node.value_inputs[0]);
      objects(0).for_each([&](std::size_t i) { out = out | scene.related_to(i, r); });
      return out;
    }
    case F::count: return ValueSet{Integer{static_cast<int>(objects(0).size())}};
    case F::exist: return ValueSet{Boolean{!objects(0).empty()}};
    case F::logical_and: return objects(0) & objects(1);
    case F::logical_or: return objects(0) | objects(1);
    default: break;
  }
  if (is_filter(k)) {
    return filter_by(scene, objects(0), *attribute_of(k), literal_code(node.value_inputs[0]));
  }
  if (is_same(k)) {
    ObjectSet out;
    objects(0).for_each([&](std::size_t i) { out = out | scene.same_attribute(i, *attribute_of(k)); });
    return out;
  }
  if (is_query(k)) {
    ValueSet out;
    objects(0).for_each([&](std::size_t i) { insert_sorted(out, query_value(scene.at(i), *attribute_of(k))); });
    return out;
  }
  // Comparison over value sets: the set of outcomes over all pairings.
  const ValueSet& a = std::get<ValueSet>(in[0]);
  const ValueSet& b = std::get<ValueSet>(in[1]);
  ValueSet out;
  for (const Value& x : a) {
    for (const Value& y : b) {
      bool r = false;
      if (k == F::equal_integer) r = std::get<Integer>(x).value == std::get<Integer>(y).value;
      else if (k == F::less_than) r = std::get<Integer>(x).value < std::get<Integer>(y).value;
      else if (k == F::greater_than) r = std::get<Integer>(x).value > std::get<Integer>(y).value;
      else r = x == y;
      insert_sorted(out, Boolean{r});
    }
  }
  return out;
}

}  // namespace detail

/// Executes under relaxed semantics; never fails on ill-posed references.
/// Throws std::invalid_argument for programs that do not typecheck.
inline RelaxedValue execute_relaxed(const Program& program, const SceneGraph& scene) {
  if (auto err = typecheck(program)) throw std::invalid_argument("relaxed execution: " + err->message());
  std::vector<RelaxedValue> values;
  values.reserve(program.nodes.size());
  RelaxedValue args[2];
  for (const ProgramNode& node : program.nodes) {
    for (std::size_t s = 0; s < node.inputs.size(); ++s) args[s] = values[node.inputs[s]];
    values.push_back(detail::relaxed_apply(node, args, scene));
  }
  return values.back();
}

/// Relaxed answer as a value set; object-set roots are not answers and yield an empty set.
inline ValueSet relaxed_answer(const Program& program, const SceneGraph& scene) {
  RelaxedValue v = execute_relaxed(program, scene);
  if (auto* set = std::get_if<ValueSet>(&v)) return std::move(*set);
  return {};
}

/// An input edge whose source may be replaced by scene(): consumer node and input slot.
struct PruneEdge {
  int consumer = 0;
  int slot = 0;
  friend bool operator==(const PruneEdge&, const PruneEdge&) = default;
};

/// Edges carrying Object/ObjectSet inputs from non-scene sources, innermost first.
inline std::vector<PruneEdge> prunable_edges(const Program& program) {
  std::vector<PruneEdge> out;
  for (int c = 0; c < static_cast<int>(program.nodes.size()); ++c) {
    const ProgramNode& node = program.nodes[c];
    const Signature& sig = signature(node.kind);
    for (int s = 0; s < sig.arity; ++s) {
      const bool object_input = sig.inputs[s] == ValueType::object || sig.inputs[s] == ValueType::object_set;
      if (object_input && program.nodes[node.inputs[s]].kind != FunctionKind::scene) out.push_back({c, s});
    }
  }
  return out;
}

/// Rewrites each listed edge to read from a fresh scene() node, then drops dead nodes.
/// The result is well-typed only under relaxed semantics when an Object input was pruned.
inline Program prune(const Program& program, const std::vector<PruneEdge>& edges) {
  Program out;
  std::vector<int> remap(program.nodes.size());
  for (int i = 0; i < static_cast<int>(program.nodes.size()); ++i) {
    ProgramNode node = program.nodes[i];
    for (int s = 0; s < static_cast<int>(node.inputs.size()); ++s) {
      const bool pruned = std::find(edges.begin(), edges.end(), PruneEdge{i, s}) != edges.end();
      node.inputs[s] = pruned ? out.add(FunctionKind::scene) : remap[node.inputs[s]];
    }
    out.nodes.push_back(std::move(node));
    remap[i] = out.root();
  }
  return compact(out);
}

/// Relaxed-typed check: like typecheck, but Object and ObjectSet are interchangeable.
inline bool relaxed_well_typed(const Program& program) {
  for (int i = 0; i < static_cast<int>(program.nodes.size()); ++i) {
    const ProgramNode& node = program.nodes[i];
    const Signature& sig = signature(node.kind);
    if (static_cast<int>(node.inputs.size()) != sig.arity) return false;
    if (static_cast<int>(node.value_inputs.size()) != (sig.literal ? 1 : 0)) return false;
    for (int s = 0; s < sig.arity; ++s) {
      const int src = node.inputs[s];
      if (src < 0 || src >= i) return false;
      auto widen = [](ValueType t) { return t == ValueType::object ? ValueType::object_set : t; };
      if (widen(signature(program.nodes[src].kind).output) != widen(sig.inputs[s])) return false;
    }
  }
  return true;
}

namespace detail {

inline RelaxedValue execute_relaxed_unchecked(const Program& program, const SceneGraph& scene) {
  std::vector<RelaxedValue> values;
  values.reserve(program.nodes.size());
  RelaxedValue args[2];
  for (const ProgramNode& node : program.nodes) {
    for (std::size_t s = 0; s < node.inputs.size(); ++s) args[s] = values[node.inputs[s]];
    values.push_back(relaxed_apply(node, args, scene));
  }
  return values.back();
}

}  // namespace detail

/// Relaxed answer of a (possibly pruned) program. Pruned programs may feed an ObjectSet
/// where an Object is expected, which relaxed semantics allows.
inline ValueSet relaxed_answer_of_pruned(const Program& program, const SceneGraph& scene) {
  if (!relaxed_well_typed(program)) throw std::invalid_argument("pruned program is not relaxed-typed");
  RelaxedValue v = detail::execute_relaxed_unchecked(program, scene);
  if (auto* set = std::get_if<ValueSet>(&v)) return std::move(*set);
  return {};
}

struct EffectiveQuestion {
  Program pruned;
  int effective_size = 0;
  Value answer;
  int candidates_evaluated = 0;
};

/// Every distinct pruning of `program`, as edge lists. Edges inside an already removed
/// subtree are never listed, so each candidate program appears once. The first entry is
/// the empty pruning (the original program).
inline std::vector<std::vector<PruneEdge>> enumerate_prunings(const Program& program) {
  const std::vector<PruneEdge> edges = prunable_edges(program);
  std::vector<std::vector<PruneEdge>> out;
  std::vector<PruneEdge> chosen;
  // Outermost edges are decided first so that pruning one hides the edges below it.
  std::vector<PruneEdge> order(edges.rbegin(), edges.rend());
  std::function<void(std::size_t)> walk = [&](std::size_t i) {
    if (i == order.size()) {
      out.push_back(chosen);
      return;
    }
    // Is the consumer of this edge still part of the program under the current choices?
    std::vector<bool> live(program.nodes.size(), false);
    live.back() = true;
    for (int n = program.root(); n >= 0; --n) {
      if (!live[n]) continue;
      for (int s = 0; s < static_cast<int>(program.nodes[n].inputs.size()); ++s) {
        if (std::find(chosen.begin(), chosen.end(), PruneEdge{n, s}) == chosen.end()) {
          live[program.nodes[n].inputs[s]] = true;
        }
      }
    }
    walk(i + 1);
    if (live[order[i].consumer]) {
      chosen.push_back(order[i]);
      walk(i + 1);
      chosen.pop_back();
    }
  };
  walk(0);
  return out;
}

/// Smallest pruning whose relaxed answer is exactly the strict answer. Ties go to the
/// earliest candidate in enumerate_prunings order. Throws std::invalid_argument when the
/// program does not execute strictly.
inline EffectiveQuestion effective_question(const Program& program, const SceneGraph& scene) {
  const ExecOutcome strict = execute(program, scene);
  if (!strict.ok()) throw std::invalid_argument("effective question needs a well-posed program");
  EffectiveQuestion best{program, static_cast<int>(program.size()), strict.answer(), 0};
  const ValueSet target{strict.answer()};
  for (const auto& edges : enumerate_prunings(program)) {
    if (edges.empty()) continue;
    Program candidate = prune(program, edges);
    ++best.candidates_evaluated;
    if (static_cast<int>(candidate.size()) >= best.effective_size) continue;
    if (relaxed_answer_of_pruned(candidate, scene) == target) {
      best.effective_size = static_cast<int>(candidate.size());
      best.pruned = std::move(candidate);
    }
  }
  return best;
}

/// Objects in the half of the scene on the `r` side of the centroid, in the camera frame.
inline ObjectSet half_plane(const SceneGraph& scene, Relation r) {
  Vec2 centroid{0, 0};
  for (const auto& o : scene.objects()) {
    centroid.x += o.position.x / static_cast<double>(scene.size());
    centroid.y += o.position.y / static_cast<double>(scene.size());
  }
  const Vec2 axis = (r == Relation::behind || r == Relation::front) ? scene.axes().behind : scene.axes().right;
  const bool positive = r == Relation::behind || r == Relation::right;
  ObjectSet out;
  for (std::size_t i = 0; i < scene.size(); ++i) {
    const Vec2 p = scene.at(i).ground();
    const double d = dot(Vec2{p.x - centroid.x, p.y - centroid.y}, axis);
    if (positive ? d > 0 : d < 0) out.insert(i);
  }
  return out;
}

/// Strict execution with every relate replaced by its half-plane; nullopt if ill-posed.
/// A relate's anchor subtree is ignored entirely, so it is not evaluated.
inline std::optional<Value> execute_absolute(const Program& program, const SceneGraph& scene) {
  if (typecheck(program)) return std::nullopt;
  const int n = static_cast<int>(program.nodes.size());
  std::vector<bool> needed(n, false);
  needed[n - 1] = true;
  for (int i = n - 1; i >= 0; --i) {
    if (!needed[i] || program.nodes[i].kind == FunctionKind::relate) continue;
    for (int in : program.nodes[i].inputs) needed[in] = true;
  }
  std::vector<Value> values(n);
  std::array<Value, 2> args;
  for (int i = 0; i < n; ++i) {
    if (!needed[i]) continue;
    const ProgramNode& node = program.nodes[i];
    if (node.kind == FunctionKind::relate) {
      values[i] = half_plane(scene, std::get<Relation>(node.value_inputs[0]));
      continue;
    }
    for (std::size_t s = 0; s < node.inputs.size(); ++s) args[s] = values[node.inputs[s]];
    ExecOutcome out = apply_function(node, std::span<const Value>(args.data(), node.inputs.size()), scene, i);
    if (!out) return std::nullopt;
    values[i] = out.answer();
  }
  return values.back();
}

/// Whether ignoring every relate's anchor (absolute half-image reasoning) still gives the answer.
inline bool absolute_spatial_answerable(const Program& program, const SceneGraph& scene) {
  const ExecOutcome strict = execute(program, scene);
  if (!strict.ok()) throw std::invalid_argument("absolute-spatial check needs a well-posed program");
  const auto modified = execute_absolute(program, scene);
  return modified && *modified == strict.answer();
}

enum class Topology : std::uint8_t { chain, tree };

constexpr std::string_view to_string(Topology t) { return t == Topology::chain ? "chain" : "tree"; }

struct QuestionProfile {
  FunctionKind question_type = FunctionKind::count;
  int size = 0;
  int effective_size = 0;
  Topology topology = Topology::chain;
  int spatial_relation_count = 0;
  int same_attribute_relation_count = 0;
  bool absolute_spatial_answerable = false;

  friend bool operator==(const QuestionProfile&, const QuestionProfile&) = default;
};

inline Topology topology_of(const Program& program) {
  for (const ProgramNode& n : program.nodes) {
    if (n.inputs.size() >= 2) return Topology::tree;
  }
  return Topology::chain;
}

inline QuestionProfile profile(const Program& program, const SceneGraph& scene) {
  QuestionProfile p;
  p.question_type = program.question_type();
  p.size = static_cast<int>(program.size());
  p.effective_size = effective_question(program, scene).effective_size;
  p.topology = topology_of(program);
  for (const ProgramNode& n : program.nodes) {
    p.spatial_relation_count += n.kind == FunctionKind::relate;
    p.same_attribute_relation_count += is_same(n.kind);
  }
  p.absolute_spatial_answerable = absolute_spatial_answerable(program, scene);
  return p;
}

inline Json profile_to_json(const QuestionProfile& p) {
  return Json{{"question_type", to_string(p.question_type)},
              {"size", p.size},
              {"effective_size", p.effective_size},
              {"topology", to_string(p.topology)},
              {"spatial_relation_count", p.spatial_relation_count},
              {"same_attribute_relation_count", p.same_attribute_relation_count},
              {"absolute_spatial_answerable", p.absolute_spatial_answerable}};
}

inline QuestionProfile profile_from_json(const Json& j) {
  QuestionProfile p;
  const std::string type = j.at("question_type").get<std::string>();
  auto kind = try_parse_function(type);
  if (!kind) throw ParseError("unknown question type '" + type + "'");
  p.question_type = *kind;
  p.size = j.at("size").get<int>();
  p.effective_size = j.at("effective_size").get<int>();
  p.topology = j.at("topology").get<std::string>() == "tree" ? Topology::tree : Topology::chain;
  p.spatial_relation_count = j.at("spatial_relation_count").get<int>();
  p.same_attribute_relation_count = j.at("same_attribute_relation_count").get<int>();
  p.absolute_spatial_answerable = j.at("absolute_spatial_answerable").get<bool>();
  return p;
}

}  // namespace clevr
