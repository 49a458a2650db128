#include <gtest/gtest.h>

#include <set>

#include "clevr/family.hpp"
#include "clevr/relaxed.hpp"
#include "support/bindings.hpp"

using namespace clevr;
using testing_support::data_path;

namespace {

const char* kRedThings = R"({"schema_version": 1, "families": [{
  "family_id": "count_cm",
  "program": [{"function": "scene"},
              {"function": "filter_color", "inputs": [0], "value_inputs": ["<C>"]},
              {"function": "filter_material", "inputs": [1], "value_inputs": ["<M>"]},
              {"function": "count", "inputs": [2]}],
  "slots": [{"name": "<C>", "type": "Color", "nullable": true},
            {"name": "<M>", "type": "Material", "nullable": true}],
  "text_templates": ["How many <C> <M> things are there?"],
  "answer_balancing": "uniform_soft"}]})";

QuestionFamily red_things() { return families_from_text(kRedThings).at(0); }

const SynonymTable& synonyms() {
  static const SynonymTable table = load_synonyms(data_path("synonyms.json"));
  return table;
}

const std::vector<QuestionFamily>& catalog() {
  static const std::vector<QuestionFamily> families = load_families(data_path("families.json"));
  return families;
}

std::string with_family_field(const std::string& field) {
  std::string text = kRedThings;
  text.insert(text.find("\"answer_balancing\""), field + ", ");
  return text;
}

}  // namespace

TEST(Instantiate, NilRemovalDropsFilters) {
  const QuestionFamily f = red_things();
  EXPECT_EQ(to_functional_string(instantiate_program(f, {{"<C>", Color::red}, {"<M>", std::nullopt}})),
            "count(filter_color(red, scene()))");
  EXPECT_EQ(to_functional_string(instantiate_program(f, {{"<C>", std::nullopt}, {"<M>", std::nullopt}})),
            "count(scene())");
  EXPECT_THROW(instantiate_program(f, {{"<C>", Color::red}}), UnboundSlot);
}

TEST(Instantiate, ShippedCatalogAlwaysTypechecks) {
  Rng rng(3);
  for (const auto& f : catalog()) {
    if (f.slots.size() <= 4) {
      // Exhaustive over every slot value and nil.
      std::vector<std::vector<std::optional<Literal>>> options;
      for (const auto& s : f.slots) {
        const auto domain = slot_domain(s.type);
        std::vector<std::optional<Literal>> o(domain.begin(), domain.end());
        if (s.nullable) o.push_back(std::nullopt);
        options.push_back(o);
      }
      std::vector<std::size_t> idx(f.slots.size(), 0);
      for (;;) {
        Binding b;
        for (std::size_t i = 0; i < idx.size(); ++i) b[f.slots[i].name] = options[i][idx[i]];
        if (satisfies_constraints(f, b)) {
          ASSERT_NO_THROW(instantiate_program(f, b)) << f.family_id;
        }
        std::size_t k = 0;
        while (k < idx.size() && ++idx[k] == options[k].size()) idx[k++] = 0;
        if (k == idx.size()) break;
      }
    }
    for (int i = 0; i < 300; ++i) {
      const Binding b = testing_support::random_binding(f, rng);
      ASSERT_NO_THROW(instantiate_program(f, b)) << f.family_id;
    }
  }
}

TEST(Realize, NilSlotsElide) {
  const QuestionFamily f = red_things();
  Rng rng(1);
  EXPECT_EQ(realize_text(f, {{"<C>", Color::red}, {"<M>", std::nullopt}}, synonyms(), rng).text,
            "How many red things are there?");
  EXPECT_EQ(canonical_text(f, 0, {{"<C>", std::nullopt}, {"<M>", std::nullopt}}, synonyms()),
            "How many things are there?");
}

TEST(Realize, SynonymsVaryPerMention) {
  const QuestionFamily f = red_things();
  std::set<std::string> seen;
  Rng rng(5);
  for (int i = 0; i < 200; ++i) seen.insert(realize_text(f, {{"<C>", Color::red}, {"<M>", Material::metal}}, synonyms(), rng).text);
  EXPECT_EQ(seen, (std::set<std::string>{"How many red metal things are there?", "How many red metallic things are there?",
                                         "How many red shiny things are there?"}));
}

TEST(Realize, ArticlesAgreeWithTheNextWord) {
  const QuestionFamily* f = nullptr;
  for (const auto& fam : catalog()) {
    if (fam.family_id == "exist_attributes") f = &fam;
  }
  ASSERT_NE(f, nullptr);
  const Binding nil{{"<Z>", std::nullopt}, {"<C>", std::nullopt}, {"<M>", std::nullopt}, {"<S>", std::nullopt}};
  EXPECT_EQ(canonical_text(*f, 1, nil, synonyms()), "Is there a thing?");
  Binding metal = nil;
  metal["<M>"] = Material::rubber;
  metal["<S>"] = Shape::cube;
  EXPECT_EQ(canonical_text(*f, 1, metal, synonyms()), "Is there a rubber cube?");
  std::set<std::string> seen;
  Rng rng(2);
  for (int i = 0; i < 300; ++i) seen.insert(render_template(*f, 1, nil, synonyms(), &rng));
  EXPECT_EQ(seen, (std::set<std::string>{"Is there a thing?", "Is there an object?"}));
}

TEST(Realize, UndeclaredPlaceholderIsAHole) {
  QuestionFamily f = red_things();
  f.text_templates = {"How many <C> <Q> things?"};
  Rng rng(1);
  EXPECT_THROW(realize_text(f, {{"<C>", Color::red}, {"<M>", std::nullopt}}, synonyms(), rng), TemplateHoleLeft);
}

// Totality and invertibility over the shipped catalog.
TEST(RealizeProperties, TenThousandRealizationsRoundTrip) {
  Rng rng(42);
  for (int i = 0; i < 10000; ++i) {
    const QuestionFamily& f = catalog()[i % catalog().size()];
    const Binding b = testing_support::random_binding(f, rng);
    const RealizedText r = realize_text(f, b, synonyms(), rng);
    ASSERT_EQ(r.text.find('<'), std::string::npos) << r.text;
    ASSERT_EQ(r.text.find("  "), std::string::npos) << r.text;
    ASSERT_EQ(r.text.find(" ?"), std::string::npos) << r.text;
    ASSERT_TRUE(std::isupper(static_cast<unsigned char>(r.text[0]))) << r.text;
    ASSERT_EQ(desynonymize(r.text, synonyms()), desynonymize(canonical_text(f, r.template_index, b, synonyms()), synonyms()))
        << r.text;
  }
}

TEST(Synonyms, EveryFormHasOneCanonicalWord) {
  for (const auto& [canonical, forms] : synonyms().synonyms) {
    for (const auto& form : forms) EXPECT_EQ(synonyms().canonical_of.at(form), canonical);
  }
  EXPECT_EQ(synonyms().canonical_of.at("shiny"), "metal");
  EXPECT_EQ(synonyms().canonical_of.at("object"), "thing");
  EXPECT_EQ(desynonymize("Is there a tiny shiny ball behind the big matte block?", synonyms()),
            "Is there a small metal sphere behind the large rubber cube?");
  EXPECT_EQ(desynonymize("How many objects are there?", synonyms()), "How many things are there?");
}

TEST(Synonyms, AmbiguousTableIsRejected) {
  const Json bad = Json::parse(R"({"schema_version":1,"synonyms":{"small":["tiny"],"large":["tiny"]},
                                   "generic_nouns":["thing"],"relations":{"left":"left of","right":"right of",
                                   "front":"in front of","behind":"behind"}})");
  EXPECT_THROW(synonyms_from_json(bad), ParseError);
}

TEST(LoadFamilies, CatalogCoverage) {
  std::set<FunctionKind> roots;
  std::set<Topology> topologies;
  int min_size = 100, max_size = 0, spatial = 0, same = 0;
  std::set<std::string> ids;
  for (const auto& f : catalog()) {
    ids.insert(f.family_id);
    EXPECT_GE(f.text_templates.size(), 2U) << f.family_id;
    Binding all_bound;
    for (const auto& s : f.slots) all_bound[s.name] = slot_domain(s.type).back();
    const Program p = instantiate_program(f, all_bound);
    roots.insert(p.question_type());
    topologies.insert(topology_of(p));
    min_size = std::min(min_size, static_cast<int>(p.size()));
    max_size = std::max(max_size, static_cast<int>(p.size()));
    for (const auto& n : p.nodes) {
      spatial += n.kind == FunctionKind::relate;
      same += is_same(n.kind);
    }
  }
  EXPECT_GE(catalog().size(), 20U);
  EXPECT_EQ(ids.size(), catalog().size());
  for (int k = 0; k < kFunctionKindCount; ++k) {
    if (is_root_kind(static_cast<FunctionKind>(k))) {
      EXPECT_TRUE(roots.count(static_cast<FunctionKind>(k))) << k;
    }
  }
  EXPECT_EQ(topologies.size(), 2U);
  EXPECT_GT(spatial, 0);
  EXPECT_GT(same, 0);
  EXPECT_EQ(min_size, 3);
  EXPECT_GE(max_size, 18);
}

TEST(LoadFamilies, ValidationNamesTheRule) {
  auto rule_of = [](const std::string& text) {
    try {
      families_from_text(text);
    } catch (const ValidationError& e) {
      return e.rule();
    }
    return std::string("none");
  };
  std::string undeclared = kRedThings;
  undeclared.replace(undeclared.find("<C> <M> things"), 3, "<Z>");
  EXPECT_EQ(rule_of(undeclared), "undeclared_slot");
  EXPECT_EQ(rule_of(with_family_field(R"j("constraints": ["not_equal(<C>)"])j")), "constraint_arity");
  EXPECT_EQ(rule_of(with_family_field(R"j("constraints": ["differs(<C>,<M>)"])j")), "constraint_syntax");
  std::string dup = kRedThings;
  dup.replace(dup.find("\"<M>\", \"type\""), 5, "\"<C>\"");
  EXPECT_EQ(rule_of(dup), "duplicate_slot");
  std::string nullable_relation = R"({"schema_version": 1, "families": [{"family_id": "r",
    "program": [{"function": "scene"}, {"function": "unique", "inputs": [0]},
                {"function": "relate", "inputs": [1], "value_inputs": ["<R>"]}, {"function": "count", "inputs": [2]}],
    "slots": [{"name": "<R>", "type": "Relation", "nullable": true}],
    "text_templates": ["How many things are <R> it?"]}]})";
  EXPECT_EQ(rule_of(nullable_relation), "instantiation");
  EXPECT_EQ(rule_of(kRedThings), "none");
}

TEST(LoadFamilies, EmptyAndMalformedFiles) {
  EXPECT_TRUE(families_from_text("").empty());
  EXPECT_TRUE(families_from_text("  \n").empty());
  EXPECT_THROW(families_from_text("{"), ParseError);
  EXPECT_THROW(families_from_text(R"({"families": []})"), ParseError);
  EXPECT_THROW(load_families("/nonexistent/families.json"), ParseError);
}

TEST(LoadFamilies, JsonRoundTrip) {
  for (const auto& f : catalog()) {
    const Json j = family_to_json(f);
    EXPECT_EQ(family_to_json(family_from_json(j)), j) << f.family_id;
  }
}

TEST(Constraints, CheckedOnPartialBindings) {
  const QuestionFamily f = families_from_text(with_family_field(R"j("constraints": ["non_nil(<C>)"])j")).at(0);
  EXPECT_TRUE(satisfies_constraints(f, {}));
  EXPECT_FALSE(satisfies_constraints(f, {{"<C>", std::nullopt}}));
  Constraint ne{Constraint::Kind::not_equal, {"<C>", "<C2>"}};
  EXPECT_TRUE(constraint_holds(ne, {{"<C>", Color::red}}));
  EXPECT_FALSE(constraint_holds(ne, {{"<C>", Color::red}, {"<C2>", Color::red}}));
  EXPECT_TRUE(constraint_holds(ne, {{"<C>", std::nullopt}, {"<C2>", std::nullopt}}));
}
