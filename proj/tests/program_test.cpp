#include <gtest/gtest.h>

#include <set>

#include "clevr/executor.hpp"
#include "clevr/program_json.hpp"
#include "clevr/rng.hpp"
#include "clevr/sampler.hpp"
#include "support/fixtures.hpp"
#include "support/random_program.hpp"

using namespace clevr;

TEST(Signatures, TableIsTotalAndNamesAreDistinct) {
  std::set<std::string_view> names;
  for (int i = 0; i < kFunctionKindCount; ++i) {
    const auto k = static_cast<FunctionKind>(i);
    names.insert(to_string(k));
    EXPECT_EQ(try_parse_function(to_string(k)), k);
  }
  EXPECT_EQ(names.size(), 26U);
  EXPECT_EQ(signature(FunctionKind::relate).inputs[0], ValueType::object);
  EXPECT_EQ(signature(FunctionKind::relate).literal, ValueType::relation);
  EXPECT_EQ(signature(FunctionKind::count).output, ValueType::integer);
  EXPECT_EQ(signature(FunctionKind::same_shape).output, ValueType::object_set);
}

TEST(Typecheck, CountOfSceneIsWellTyped) {
  Program p;
  p.add(FunctionKind::count, {p.add(FunctionKind::scene)});
  EXPECT_FALSE(typecheck(p).has_value());
}

TEST(Typecheck, QueryOnSetIsRejectedAtTheQueryNode) {
  Program p;
  p.add(FunctionKind::query_color, {p.add(FunctionKind::scene)});
  const auto err = typecheck(p);
  ASSERT_TRUE(err.has_value());
  EXPECT_EQ(*err, (TypeError{1, "Object", "ObjectSet"}));
}

TEST(Typecheck, StructuralErrors) {
  Program forward;
  forward.nodes.push_back({FunctionKind::count, {1}, {}});
  forward.nodes.push_back({FunctionKind::scene, {}, {}});
  EXPECT_EQ(typecheck(forward)->node, 0);

  Program missing_literal;
  missing_literal.add(FunctionKind::filter_color, {missing_literal.add(FunctionKind::scene)});
  EXPECT_EQ(typecheck(missing_literal)->node, 1);

  Program wrong_literal;
  wrong_literal.add(FunctionKind::filter_color, {wrong_literal.add(FunctionKind::scene)}, {Shape::cube});
  EXPECT_EQ(*typecheck(wrong_literal), (TypeError{1, "Color", "Shape"}));

  EXPECT_TRUE(typecheck(Program{}).has_value());
}

TEST(Typecheck, WorkedExampleIsWellTyped) {
  EXPECT_FALSE(typecheck(testing_support::worked_example_program()).has_value());
  EXPECT_EQ(to_functional_string(testing_support::worked_example_program()),
            "query_color(unique(filter_shape(cube, relate(behind, unique(filter_shape(cylinder, scene()))))))");
}

TEST(ProgramJson, LayoutAndRoundTrip) {
  const Program p = testing_support::worked_example_program();
  const Json j = program_to_json(p);
  EXPECT_EQ(j["nodes"][3]["function"], "relate");
  EXPECT_EQ(j["nodes"][3]["inputs"], Json::array({2}));
  EXPECT_EQ(j["nodes"][3]["value_inputs"], Json::array({"behind"}));
  EXPECT_EQ(program_from_json(j), p);
  EXPECT_EQ(program_from_json(Json::parse(j.dump())), p);
}

TEST(ProgramJson, RandomProgramsRoundTrip) {
  SamplerConfig config;
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    const SceneGraph scene = sample_indexed_scene(config, i);
    const Program p = testing_support::RandomProgramBuilder(scene, rng, 18).build();
    ASSERT_FALSE(typecheck(p).has_value()) << typecheck(p)->message();
    ASSERT_EQ(program_from_json(program_to_json(p)), p);
  }
}

TEST(ProgramJson, RejectsUnknownNames) {
  EXPECT_THROW(program_from_json(Json::parse(R"({"nodes":[{"function":"teleport","inputs":[]}]})")), ParseError);
  EXPECT_THROW(program_from_json(Json::parse(R"({"nodes":[{"function":"filter_color","inputs":[0],"value_inputs":["mauve"]}]})")),
               ParseError);
  EXPECT_THROW(program_from_json(Json::parse(R"({"nodes": 3})")), ParseError);
}

TEST(ProgramJson, AcceptsLowercaseLogicalAliases) {
  const Program p = program_from_json(Json::parse(
      R"({"nodes":[{"function":"scene"},{"function":"scene"},{"function":"intersect","inputs":[0,1]},{"function":"count","inputs":[2]}]})"));
  EXPECT_EQ(p.nodes[2].kind, FunctionKind::logical_and);
  EXPECT_FALSE(typecheck(p).has_value());
}

TEST(ProgramJson, MistypedLiteralSurfacesAsTypeError) {
  const Program p = program_from_json(Json::parse(
      R"({"nodes":[{"function":"scene"},{"function":"filter_color","inputs":[0],"value_inputs":["cube"]},{"function":"count","inputs":[1]}]})"));
  EXPECT_EQ(typecheck(p)->node, 1);
}

TEST(Compact, DropsUnreachableNodes) {
  Program p;
  p.add(FunctionKind::scene);
  const int s = p.add(FunctionKind::scene);
  p.add(FunctionKind::count, {s});
  const Program c = compact(p);
  EXPECT_EQ(c.size(), 2U);
  EXPECT_EQ(c.nodes[1].inputs, std::vector<int>{0});
}
