#include <gtest/gtest.h>

#include "clevr/executor.hpp"
#include "clevr/rng.hpp"
#include "clevr/sampler.hpp"
#include "oracle/brute_force.hpp"
#include "support/fixtures.hpp"
#include "support/random_program.hpp"

using namespace clevr;

namespace {

ExecOutcome run(const Program& p, const SceneGraph& s) { return execute(p, s); }

std::vector<SceneGraph> scenes(int n, std::uint64_t seed = 1) {
  SamplerConfig config;
  config.seed = seed;
  return sample_scenes(config, n);
}

}  // namespace

TEST(Execute, WorkedExampleAnswersBrown) {
  const auto out = run(testing_support::worked_example_program(), testing_support::worked_example_scene());
  ASSERT_TRUE(out.ok());
  EXPECT_EQ(out.answer(), Value{Color::brown});
}

TEST(Execute, DisjointColourFiltersCountZero) {
  Program p;
  const int s = p.add(FunctionKind::scene);
  const int blue = p.add(FunctionKind::filter_color, {s}, {Color::blue});
  p.add(FunctionKind::count, {p.add(FunctionKind::filter_color, {blue}, {Color::red})});
  for (const auto& scene : scenes(50)) EXPECT_EQ(run(p, scene).answer(), Value{Integer{0}});
}

TEST(Execute, UniqueOnEmptyAndMultiSetsIsIllPosed) {
  const SceneGraph scene = testing_support::worked_example_scene();
  Program many;
  many.add(FunctionKind::query_color, {many.add(FunctionKind::unique, {many.add(FunctionKind::scene)})});
  auto out = run(many, scene);
  ASSERT_FALSE(out.ok());
  EXPECT_EQ(out.failure().kind, FailureKind::ill_posed);
  EXPECT_EQ(out.failure().set_size, 3);
  EXPECT_EQ(out.failure().node, 1);

  Program none;
  const int sp = none.add(FunctionKind::filter_shape, {none.add(FunctionKind::scene)}, {Shape::sphere});
  none.add(FunctionKind::query_color, {none.add(FunctionKind::unique, {sp})});
  out = run(none, scene);
  ASSERT_FALSE(out.ok());
  EXPECT_EQ(out.failure().set_size, 0);
}

TEST(Execute, IllPosedBranchFailsWholeQuestion) {
  // exist(scene()) would succeed, but an unused-looking unique still sits in the DAG.
  const SceneGraph scene = testing_support::worked_example_scene();
  Program p;
  const int s = p.add(FunctionKind::scene);
  const int u = p.add(FunctionKind::unique, {s});
  const int same = p.add(FunctionKind::same_color, {u});
  p.add(FunctionKind::exist, {p.add(FunctionKind::logical_or, {s, same})});
  EXPECT_EQ(run(p, scene).failure().kind, FailureKind::ill_posed);
}

TEST(Execute, TypeErrorsAreReportedNotThrown) {
  Program p;
  p.add(FunctionKind::query_color, {p.add(FunctionKind::scene)});
  const auto out = run(p, testing_support::worked_example_scene());
  ASSERT_FALSE(out.ok());
  EXPECT_EQ(out.failure().kind, FailureKind::type_error);
}

TEST(Execute, NilRemovedTemplateCountsRedThings) {
  Program p;
  p.add(FunctionKind::count, {p.add(FunctionKind::filter_color, {p.add(FunctionKind::scene)}, {Color::red})});
  for (const auto& scene : scenes(30)) {
    int red = 0;
    for (const auto& o : scene.objects()) red += o.color == Color::red;
    EXPECT_EQ(run(p, scene).answer(), Value{Integer{red}});
  }
}

TEST(AnswerSpace, SizesPerQuestionType) {
  EXPECT_EQ(answer_space(FunctionKind::query_size).size(), 2U);
  EXPECT_EQ(answer_space(FunctionKind::query_color).size(), 8U);
  EXPECT_EQ(answer_space(FunctionKind::query_material).size(), 2U);
  EXPECT_EQ(answer_space(FunctionKind::query_shape).size(), 3U);
  EXPECT_EQ(answer_space(FunctionKind::exist), (std::vector<Value>{yes, no}));
  EXPECT_EQ(answer_space(FunctionKind::equal_color).size(), 2U);
  EXPECT_EQ(answer_space(FunctionKind::greater_than).size(), 2U);
  const auto counts = answer_space(FunctionKind::count);
  ASSERT_EQ(counts.size(), 11U);
  EXPECT_EQ(counts.front(), Value{Integer{0}});
  EXPECT_EQ(counts.back(), Value{Integer{10}});
  EXPECT_THROW(answer_space(FunctionKind::filter_color), NotARootKind);
  EXPECT_THROW(answer_space(FunctionKind::relate), NotARootKind);
}

// Property suite over random well-typed programs; the oracle is the reference.
TEST(ExecuteProperties, MatchesBruteForceOracle) {
  Rng rng(2024);
  int well_posed = 0;
  const auto pool = scenes(1000, 77);
  for (const auto& scene : pool) {
    const Program p = testing_support::RandomProgramBuilder(scene, rng, 18).build();
    ASSERT_LE(p.size(), 20U);
    const auto got = run(p, scene);
    const auto expected = oracle::run(p, scene);
    ASSERT_EQ(got.ok(), expected.has_value()) << to_functional_string(p);
    if (got.ok()) {
      ++well_posed;
      ASSERT_EQ(answer_string(got.answer()), *expected) << to_functional_string(p);
    } else {
      ASSERT_EQ(got.failure().kind, FailureKind::ill_posed);
    }
  }
  EXPECT_GT(well_posed, 150);
}

TEST(ExecuteProperties, SetAlgebraAndFilterCommutation) {
  Rng rng(5);
  for (const auto& scene : scenes(300, 9)) {
    const ObjectSet all = scene.all();
    const ObjectSet s(rng.next() & all.bits());
    const ObjectSet t(rng.next() & all.bits());
    const ProgramNode and_node{FunctionKind::logical_and, {0, 1}, {}};
    const ProgramNode or_node{FunctionKind::logical_or, {0, 1}, {}};
    auto apply2 = [&](const ProgramNode& n, ObjectSet a, ObjectSet b) {
      const Value args[2] = {a, b};
      return std::get<ObjectSet>(apply_function(n, args, scene).answer());
    };
    EXPECT_EQ(apply2(and_node, s, s), s);
    EXPECT_EQ(apply2(and_node, s, t), apply2(and_node, t, s));
    EXPECT_EQ(apply2(or_node, s, t), apply2(or_node, t, s));
    EXPECT_EQ(apply2(and_node, s, all), s);
    EXPECT_EQ(apply2(or_node, s, ObjectSet{}), s);

    const Color c = scene.at(rng.below(scene.size())).color;
    const Size z = kSizes[rng.below(2)];
    const ProgramNode fc{FunctionKind::filter_color, {0}, {c}};
    const ProgramNode fz{FunctionKind::filter_size, {0}, {z}};
    auto apply1 = [&](const ProgramNode& n, ObjectSet a) {
      const Value args[1] = {a};
      return std::get<ObjectSet>(apply_function(n, args, scene).answer());
    };
    EXPECT_EQ(apply1(fc, apply1(fz, s)), apply1(fz, apply1(fc, s)));

    const Value one[1] = {s};
    const bool exists = std::get<Boolean>(apply_function({FunctionKind::exist, {0}, {}}, one, scene).answer()).value;
    const int count = std::get<Integer>(apply_function({FunctionKind::count, {0}, {}}, one, scene).answer()).value;
    EXPECT_EQ(exists, count > 0);
  }
}

TEST(ExecuteProperties, DeterministicAcrossRepeatedCalls) {
  Rng rng(8);
  for (const auto& scene : scenes(100, 4)) {
    const Program p = testing_support::RandomProgramBuilder(scene, rng, 18).build();
    const auto a = run(p, scene);
    const auto b = run(p, scene);
    ASSERT_EQ(a.ok(), b.ok());
    if (a.ok()) {
      EXPECT_EQ(a.answer(), b.answer());
    }
  }
}
