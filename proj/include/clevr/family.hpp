#pragma once

#include <cctype>
#include <fstream>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "clevr/program.hpp"
#include "clevr/program_json.hpp"
#include "clevr/rng.hpp"

namespace clevr {

inline constexpr int kFamilySchemaVersion = 1;
inline constexpr int kMaxSlotsPerFamily = 19;

class ValidationError : public std::runtime_error {
 public:
  ValidationError(std::string family_id, std::string rule, const std::string& detail)
      : std::runtime_error("family '" + family_id + "': " + rule + ": " + detail),
        family_id_(std::move(family_id)),
        rule_(std::move(rule)) {}
  const std::string& family_id() const { return family_id_; }
  const std::string& rule() const { return rule_; }

 private:
  std::string family_id_;
  std::string rule_;
};

class UnboundSlot : public std::invalid_argument {
 public:
  explicit UnboundSlot(const std::string& slot) : std::invalid_argument("unbound slot " + slot) {}
};

class InvalidAfterRemoval : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TemplateHoleLeft : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ParameterSlot {
  std::string name;  // "<C>", "<Z2>", ...
  ValueType type = ValueType::color;
  bool nullable = true;
};

/// A node value input: either a fixed literal or a slot name.
struct TemplateValue {
  std::optional<Literal> literal;
  std::string slot;
  bool is_slot() const { return !literal.has_value(); }
};

struct TemplateNode {
  FunctionKind kind = FunctionKind::scene;
  std::vector<int> inputs;
  std::vector<TemplateValue> value_inputs;
};

struct Constraint {
  enum class Kind : std::uint8_t { not_equal, non_nil } kind = Kind::not_equal;
  std::vector<std::string> slots;
};

enum class BalanceMode : std::uint8_t { uniform_hard, uniform_soft };

constexpr std::string_view to_string(BalanceMode m) {
  return m == BalanceMode::uniform_hard ? "uniform_hard" : "uniform_soft";
}

struct QuestionFamily {
  std::string family_id;
  std::vector<TemplateNode> program;
  std::vector<ParameterSlot> slots;
  std::vector<std::string> text_templates;
  std::vector<Constraint> constraints;
  BalanceMode answer_balancing = BalanceMode::uniform_hard;

  const ParameterSlot* find_slot(const std::string& name) const {
    for (const auto& s : slots) {
      if (s.name == name) return &s;
    }
    return nullptr;
  }
  FunctionKind question_type() const { return program.back().kind; }
};

/// Slot name -> bound value; std::nullopt stands for nil.
using Binding = std::map<std::string, std::optional<Literal>>;

inline std::vector<Literal> slot_domain(ValueType t) {
  std::vector<Literal> out;
  switch (t) {
    case ValueType::size: out.assign(kSizes.begin(), kSizes.end()); break;
    case ValueType::color: out.assign(kColors.begin(), kColors.end()); break;
    case ValueType::shape: out.assign(kShapes.begin(), kShapes.end()); break;
    case ValueType::material: out.assign(kMaterials.begin(), kMaterials.end()); break;
    case ValueType::relation: out.assign(kRelations.begin(), kRelations.end()); break;
    default: break;
  }
  return out;
}

/// False only when every slot the constraint names is bound and the constraint fails,
/// so it can be checked on partial bindings.
inline bool constraint_holds(const Constraint& c, const Binding& b) {
  if (c.kind == Constraint::Kind::non_nil) {
    auto it = b.find(c.slots[0]);
    return it == b.end() || it->second.has_value();
  }
  auto x = b.find(c.slots[0]);
  auto y = b.find(c.slots[1]);
  if (x == b.end() || y == b.end() || !x->second || !y->second) return true;
  return *x->second != *y->second;
}

inline bool satisfies_constraints(const QuestionFamily& f, const Binding& b) {
  for (const auto& c : f.constraints) {
    if (!constraint_holds(c, b)) return false;
  }
  return true;
}

/// Substitutes the binding and deletes nil-bound nodes, rewiring consumers to their input.
inline Program instantiate_program(const QuestionFamily& family, const Binding& binding) {
  Program out;
  std::vector<int> remap(family.program.size(), -1);
  for (std::size_t i = 0; i < family.program.size(); ++i) {
    const TemplateNode& t = family.program[i];
    ProgramNode node{t.kind, {}, {}};
    for (int in : t.inputs) node.inputs.push_back(remap[in]);
    bool removed = false;
    for (const TemplateValue& v : t.value_inputs) {
      if (!v.is_slot()) {
        node.value_inputs.push_back(*v.literal);
        continue;
      }
      auto it = binding.find(v.slot);
      if (it == binding.end()) throw UnboundSlot(v.slot);
      if (it->second) node.value_inputs.push_back(*it->second);
      else removed = true;
    }
    if (removed) {
      if (node.inputs.size() != 1) {
        throw InvalidAfterRemoval("family '" + family.family_id + "': nil node " + std::to_string(i) +
                                  " does not have exactly one input");
      }
      remap[i] = node.inputs[0];
      continue;
    }
    out.nodes.push_back(std::move(node));
    remap[i] = out.root();
  }
  // A removed root leaves the last surviving node as a bogus root; reject it like any malformed DAG.
  if (out.nodes.empty() || remap.back() != out.root()) {
    throw InvalidAfterRemoval("family '" + family.family_id + "': root removed by nil binding");
  }
  if (auto err = typecheck(out)) {
    throw InvalidAfterRemoval("family '" + family.family_id + "': " + err->message());
  }
  return out;
}

// ---------------------------------------------------------------------------------------
// Synonyms and text realization

struct SynonymTable {
  std::map<std::string, std::vector<std::string>> synonyms;  // canonical -> forms (canonical included)
  std::map<std::string, std::string> canonical_of;           // form -> canonical
  std::vector<std::string> generic_nouns;                    // first entry is canonical
  std::map<std::string, std::string> relation_phrases;       // "front" -> "in front of"

  const std::vector<std::string>& forms(const std::string& canonical) const {
    static const std::vector<std::string> none;
    auto it = synonyms.find(canonical);
    return it == synonyms.end() ? none : it->second;
  }
};

inline SynonymTable synonyms_from_json(const Json& j) {
  SynonymTable t;
  try {
    if (j.at("schema_version").get<int>() != kFamilySchemaVersion) {
      throw ParseError("unsupported synonym schema_version");
    }
    for (const auto& [canonical, list] : j.at("synonyms").items()) {
      std::vector<std::string> forms{canonical};
      for (const auto& f : list) {
        if (f.get<std::string>() != canonical) forms.push_back(f.get<std::string>());
      }
      t.synonyms[canonical] = forms;
    }
    for (const auto& n : j.at("generic_nouns")) t.generic_nouns.push_back(n.get<std::string>());
    for (const auto& [rel, phrase] : j.at("relations").items()) t.relation_phrases[rel] = phrase.get<std::string>();
  } catch (const Json::exception& e) {
    throw ParseError(std::string("synonym table: ") + e.what());
  }
  if (t.generic_nouns.empty()) throw ParseError("synonym table: generic_nouns is empty");
  t.synonyms[t.generic_nouns.front()] = t.generic_nouns;
  for (const auto& [canonical, forms] : t.synonyms) {
    for (const auto& f : forms) {
      auto [it, fresh] = t.canonical_of.emplace(f, canonical);
      if (!fresh && it->second != canonical) {
        throw ParseError("synonym table: '" + f + "' maps to both '" + it->second + "' and '" + canonical + "'");
      }
    }
  }
  for (Relation r : kRelations) {
    if (!t.relation_phrases.count(std::string(to_string(r)))) {
      throw ParseError("synonym table: no phrase for relation " + std::string(to_string(r)));
    }
  }
  return t;
}

inline SynonymTable load_synonyms(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open synonym table " + path);
  try {
    return synonyms_from_json(Json::parse(in));
  } catch (const Json::parse_error& e) {
    throw ParseError("synonym table " + path + ": " + e.what());
  }
}

namespace detail {

inline const std::regex& placeholder_pattern() {
  static const std::regex re("<[A-Z][0-9]*>(s?)");
  return re;
}

inline std::string normalize_spacing(const std::string& text) {
  std::string out;
  for (char c : text) {
    if (c == ' ' && (out.empty() || out.back() == ' ')) continue;
    if ((c == '?' || c == '.' || c == ',' || c == ';') && !out.empty() && out.back() == ' ') out.pop_back();
    out.push_back(c);
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

inline bool starts_with_vowel(const std::string& w) {
  return !w.empty() && std::string("aeiouAEIOU").find(w.front()) != std::string::npos;
}

/// "a" / "an" agreement with the following word.
inline std::string fix_articles(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> words;
  for (std::string w; in >> w;) words.push_back(w);
  for (std::size_t i = 0; i + 1 < words.size(); ++i) {
    std::string& w = words[i];
    const bool cap = !w.empty() && std::isupper(static_cast<unsigned char>(w[0]));
    std::string lower = w;
    for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (lower != "a" && lower != "an") continue;
    w = starts_with_vowel(words[i + 1]) ? "an" : "a";
    if (cap) w[0] = 'A';
  }
  std::string out;
  for (const auto& w : words) out += (out.empty() ? "" : " ") + w;
  return out;
}

inline std::string finish_sentence(std::string text) {
  text = fix_articles(normalize_spacing(text));
  if (!text.empty()) text[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(text[0])));
  return text;
}

}  // namespace detail

/// Renders one text template. With rng == nullptr every mention uses its canonical word,
/// which gives the canonical question text.
inline std::string render_template(const QuestionFamily& family, std::size_t template_index, const Binding& binding,
                                   const SynonymTable& table, Rng* rng) {
  const std::string& tmpl = family.text_templates.at(template_index);
  auto choose = [&](const std::string& canonical) {
    const auto& forms = table.forms(canonical);
    if (forms.empty()) return canonical;
    return rng == nullptr ? forms.front() : forms[rng->below(forms.size())];
  };
  std::string out;
  auto begin = std::sregex_iterator(tmpl.begin(), tmpl.end(), detail::placeholder_pattern());
  std::size_t last = 0;
  for (auto it = begin; it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    out += tmpl.substr(last, m.position(0) - last);
    last = m.position(0) + m.length(0);
    const bool plural = m.length(1) > 0;
    const std::string name = m.str(0).substr(0, m.length(0) - m.length(1));
    const ParameterSlot* slot = family.find_slot(name);
    if (slot == nullptr) throw TemplateHoleLeft("family '" + family.family_id + "': undeclared placeholder " + name);
    auto bound = binding.find(name);
    if (bound == binding.end()) throw UnboundSlot(name);
    std::string word;
    if (bound->second) {
      const std::string canonical = literal_to_string(*bound->second);
      word = slot->type == ValueType::relation ? table.relation_phrases.at(canonical) : choose(canonical);
    } else if (slot->type == ValueType::shape) {
      word = choose(table.generic_nouns.front());
    }
    if (plural && !word.empty()) word += "s";
    out += word;
  }
  out += tmpl.substr(last);
  if (out.find('<') != std::string::npos || out.find('>') != std::string::npos) {
    throw TemplateHoleLeft("family '" + family.family_id + "': placeholder left in \"" + out + "\"");
  }
  return detail::finish_sentence(out);
}

struct RealizedText {
  std::string text;
  std::size_t template_index = 0;
};

/// Picks a template and synonyms from `rng`.
inline RealizedText realize_text(const QuestionFamily& family, const Binding& binding, const SynonymTable& table,
                                 Rng& rng) {
  const std::size_t index = rng.below(family.text_templates.size());
  return {render_template(family, index, binding, table, &rng), index};
}

inline std::string canonical_text(const QuestionFamily& family, std::size_t template_index, const Binding& binding,
                                  const SynonymTable& table) {
  return render_template(family, template_index, binding, table, nullptr);
}

/// Maps every synonym (and its plural) back to the canonical word.
inline std::string desynonymize(const std::string& text, const SynonymTable& table) {
  static const std::regex word("[A-Za-z]+");
  std::string out;
  std::size_t last = 0;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), word); it != std::sregex_iterator(); ++it) {
    out += text.substr(last, it->position(0) - last);
    last = it->position(0) + it->length(0);
    std::string w = it->str(0);
    const bool cap = std::isupper(static_cast<unsigned char>(w[0]));
    std::string lower = w;
    for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    std::string mapped = lower;
    if (auto f = table.canonical_of.find(lower); f != table.canonical_of.end()) {
      mapped = f->second;
    } else if (lower.size() > 1 && lower.back() == 's') {
      if (auto g = table.canonical_of.find(lower.substr(0, lower.size() - 1)); g != table.canonical_of.end()) {
        mapped = g->second + "s";
      }
    }
    if (cap) mapped[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(mapped[0])));
    out += mapped;
  }
  out += text.substr(last);
  return detail::fix_articles(out);
}

// ---------------------------------------------------------------------------------------
// Loading and validation

namespace detail {

inline std::optional<ValueType> slot_type_from(const std::string& s) {
  for (ValueType t : {ValueType::size, ValueType::color, ValueType::shape, ValueType::material, ValueType::relation}) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

inline Constraint parse_constraint(const std::string& id, const std::string& text) {
  static const std::regex re(R"(\s*(not_equal|non_nil)\(\s*(<[A-Z][0-9]*>)\s*(?:,\s*(<[A-Z][0-9]*>)\s*)?\)\s*)");
  std::smatch m;
  if (!std::regex_match(text, m, re)) throw ValidationError(id, "constraint_syntax", text);
  Constraint c;
  c.kind = m.str(1) == "non_nil" ? Constraint::Kind::non_nil : Constraint::Kind::not_equal;
  c.slots.push_back(m.str(2));
  if (m[3].matched) c.slots.push_back(m.str(3));
  if (c.slots.size() != (c.kind == Constraint::Kind::non_nil ? 1U : 2U)) {
    throw ValidationError(id, "constraint_arity", text);
  }
  return c;
}

}  // namespace detail

/// Checks every family invariant; throws ValidationError naming the broken rule.
inline void validate_family(const QuestionFamily& f) {
  const std::string& id = f.family_id;
  if (id.empty()) throw ValidationError(id, "family_id", "empty id");
  if (f.program.empty()) throw ValidationError(id, "program", "empty program template");
  if (f.text_templates.empty()) throw ValidationError(id, "text_templates", "at least one template required");
  if (static_cast<int>(f.slots.size()) > kMaxSlotsPerFamily) {
    throw ValidationError(id, "slot_count", std::to_string(f.slots.size()) + " slots");
  }
  std::set<std::string> names;
  for (const auto& s : f.slots) {
    if (!std::regex_match(s.name, std::regex("<[A-Z][0-9]*>"))) throw ValidationError(id, "slot_name", s.name);
    if (!names.insert(s.name).second) throw ValidationError(id, "duplicate_slot", s.name);
  }
  std::set<std::string> used_in_program;
  for (std::size_t i = 0; i < f.program.size(); ++i) {
    const TemplateNode& n = f.program[i];
    const Signature& sig = signature(n.kind);
    if (static_cast<int>(n.inputs.size()) != sig.arity) {
      throw ValidationError(id, "arity", "node " + std::to_string(i) + " (" + std::string(sig.name) + ")");
    }
    for (int in : n.inputs) {
      if (in < 0 || in >= static_cast<int>(i)) throw ValidationError(id, "input_order", "node " + std::to_string(i));
    }
    if (n.value_inputs.size() != (sig.literal ? 1U : 0U)) {
      throw ValidationError(id, "value_inputs", "node " + std::to_string(i));
    }
    for (const auto& v : n.value_inputs) {
      const ValueType t = v.is_slot() ? (f.find_slot(v.slot) ? f.find_slot(v.slot)->type : ValueType::object)
                                      : type_of(*v.literal);
      if (v.is_slot() && f.find_slot(v.slot) == nullptr) throw ValidationError(id, "undeclared_slot", v.slot);
      if (t != *sig.literal) {
        throw ValidationError(id, "slot_type", "node " + std::to_string(i) + " expects " +
                                                   std::string(to_string(*sig.literal)));
      }
      if (v.is_slot()) used_in_program.insert(v.slot);
    }
  }
  if (!is_root_kind(f.question_type())) throw ValidationError(id, "root", "root is not a question type");
  for (const auto& s : f.slots) {
    if (!used_in_program.count(s.name)) throw ValidationError(id, "unused_slot", s.name);
  }
  for (const auto& t : f.text_templates) {
    for (auto it = std::sregex_iterator(t.begin(), t.end(), detail::placeholder_pattern()); it != std::sregex_iterator();
         ++it) {
      const std::string name = it->str(0).substr(0, it->length(0) - it->length(1));
      if (!names.count(name)) throw ValidationError(id, "undeclared_slot", name + " in text");
    }
  }
  for (const auto& c : f.constraints) {
    for (const auto& s : c.slots) {
      if (!names.count(s)) throw ValidationError(id, "undeclared_slot", s + " in constraint");
    }
  }
  // All-bound and all-nil instantiations must both typecheck.
  Binding full, empty;
  for (const auto& s : f.slots) {
    full[s.name] = slot_domain(s.type).front();
    empty[s.name] = s.nullable ? std::nullopt : std::optional<Literal>(slot_domain(s.type).front());
  }
  for (const Binding* b : {&full, &empty}) {
    try {
      instantiate_program(f, *b);
    } catch (const InvalidAfterRemoval& e) {
      throw ValidationError(id, "instantiation", e.what());
    }
  }
}

inline QuestionFamily family_from_json(const Json& j) {
  QuestionFamily f;
  try {
    f.family_id = j.at("family_id").get<std::string>();
    for (const auto& s : j.at("slots")) {
      ParameterSlot slot;
      slot.name = s.at("name").get<std::string>();
      const auto type = detail::slot_type_from(s.at("type").get<std::string>());
      if (!type) throw ValidationError(f.family_id, "slot_type", s.at("type").get<std::string>());
      slot.type = *type;
      slot.nullable = s.value("nullable", true);
      f.slots.push_back(slot);
    }
    for (const auto& n : j.at("program")) {
      TemplateNode node;
      const std::string fn = n.at("function").get<std::string>();
      auto kind = try_parse_function(fn);
      if (!kind) throw ValidationError(f.family_id, "unknown_function", fn);
      node.kind = *kind;
      node.inputs = n.value("inputs", std::vector<int>{});
      for (const auto& v : n.value("value_inputs", Json::array())) {
        const std::string text = v.get<std::string>();
        TemplateValue tv;
        if (!text.empty() && text.front() == '<') {
          tv.slot = text;
        } else {
          const auto& sig = signature(node.kind);
          tv.literal = sig.literal ? parse_literal(text, *sig.literal) : std::nullopt;
          if (!tv.literal) throw ValidationError(f.family_id, "literal", text);
        }
        node.value_inputs.push_back(tv);
      }
      f.program.push_back(node);
    }
    for (const auto& t : j.at("text_templates")) f.text_templates.push_back(t.get<std::string>());
    for (const auto& c : j.value("constraints", Json::array())) {
      f.constraints.push_back(detail::parse_constraint(f.family_id, c.get<std::string>()));
    }
    const std::string mode = j.value("answer_balancing", std::string("uniform_hard"));
    if (mode == "uniform_hard") f.answer_balancing = BalanceMode::uniform_hard;
    else if (mode == "uniform_soft") f.answer_balancing = BalanceMode::uniform_soft;
    else throw ValidationError(f.family_id, "answer_balancing", mode);
  } catch (const Json::exception& e) {
    throw ParseError("family '" + f.family_id + "': " + e.what());
  }
  validate_family(f);
  return f;
}

inline Json family_to_json(const QuestionFamily& f) {
  Json program = Json::array();
  for (const auto& n : f.program) {
    Json values = Json::array();
    for (const auto& v : n.value_inputs) values.push_back(v.is_slot() ? v.slot : literal_to_string(*v.literal));
    program.push_back({{"function", to_string(n.kind)}, {"inputs", n.inputs}, {"value_inputs", values}});
  }
  Json slots = Json::array();
  for (const auto& s : f.slots) slots.push_back({{"name", s.name}, {"type", to_string(s.type)}, {"nullable", s.nullable}});
  Json constraints = Json::array();
  for (const auto& c : f.constraints) {
    std::string text = c.kind == Constraint::Kind::non_nil ? "non_nil(" : "not_equal(";
    for (std::size_t i = 0; i < c.slots.size(); ++i) text += (i ? "," : "") + c.slots[i];
    constraints.push_back(text + ")");
  }
  return {{"family_id", f.family_id},           {"program", program},
          {"slots", slots},                     {"text_templates", f.text_templates},
          {"constraints", constraints},         {"answer_balancing", to_string(f.answer_balancing)}};
}

/// Parses a catalog document; blank text is an empty catalog. Load order is preserved.
inline std::vector<QuestionFamily> families_from_text(const std::string& text) {
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) return {};
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("family catalog: ") + e.what());
  }
  if (!j.is_object() || j.value("schema_version", 0) != kFamilySchemaVersion) {
    throw ParseError("family catalog: missing or unsupported schema_version");
  }
  std::vector<QuestionFamily> out;
  std::set<std::string> ids;
  for (const auto& f : j.value("families", Json::array())) {
    out.push_back(family_from_json(f));
    if (!ids.insert(out.back().family_id).second) {
      throw ValidationError(out.back().family_id, "duplicate_family", "family_id used twice");
    }
  }
  return out;
}

inline std::vector<QuestionFamily> load_families(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open family catalog " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return families_from_text(buffer.str());
}

inline Json binding_to_json(const Binding& b) {
  Json j = Json::object();
  for (const auto& [slot, value] : b) j[slot] = value ? Json(literal_to_string(*value)) : Json(nullptr);
  return j;
}

}  // namespace clevr
