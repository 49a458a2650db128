#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "clevr/sampler.hpp"
#include "clevr/scene.hpp"
#include "clevr/scene_json.hpp"
#include "support/fixtures.hpp"

using namespace clevr;

TEST(DeriveAxes, AxisAlignedView) {
  const CameraAxes axes = derive_axes({0, -1, -0.5});
  EXPECT_DOUBLE_EQ(axes.behind.x, 0.0);
  EXPECT_DOUBLE_EQ(axes.behind.y, 1.0);
  EXPECT_DOUBLE_EQ(axes.right.x, 1.0);
  EXPECT_DOUBLE_EQ(axes.right.y, 0.0);
}

TEST(DeriveAxes, VerticalViewIsDegenerate) {
  EXPECT_THROW(derive_axes({0, 0, -1}), DegenerateCamera);
}

TEST(DeriveAxes, DiagonalViewMatchesHandComputation) {
  // Hand oracle: ground projection (1, 1) has length sqrt(2); negate, then rotate by -90
  // degrees with (x, y) -> (y, -x).
  const double h = 1.0 / std::sqrt(2.0);
  const CameraAxes axes = derive_axes({1, 1, -1});
  EXPECT_NEAR(axes.behind.x, -h, 1e-12);
  EXPECT_NEAR(axes.behind.y, -h, 1e-12);
  EXPECT_NEAR(axes.right.x, -h, 1e-12);
  EXPECT_NEAR(axes.right.y, h, 1e-12);
  EXPECT_NEAR(dot(axes.behind, axes.right), 0.0, 1e-12);
  EXPECT_NEAR(std::hypot(axes.right.x, axes.right.y), 1.0, 1e-12);
}

namespace {

SceneGraph two_objects(Vec3 a, Vec3 b) {
  return SceneGraph(0, {0, -1, -0.5},
                    {{10, Shape::cube, Size::small, Color::red, Material::metal, a, 0},
                     {20, Shape::sphere, Size::large, Color::blue, Material::rubber, b, 0}});
}

}  // namespace

TEST(RelatePair, BehindAndItsConverse) {
  const SceneGraph s = two_objects({0, 2, 0}, {0, 0, 0});
  EXPECT_TRUE(relate_pair(s, 10, 20, Relation::behind));
  EXPECT_TRUE(relate_pair(s, 20, 10, Relation::front));
  EXPECT_FALSE(relate_pair(s, 10, 20, Relation::front));
}

TEST(RelatePair, RightAndItsConverse) {
  const SceneGraph s = two_objects({3, 0, 0}, {0, 0, 0});
  EXPECT_TRUE(relate_pair(s, 10, 20, Relation::right));
  EXPECT_TRUE(relate_pair(s, 20, 10, Relation::left));
}

TEST(RelatePair, EqualProjectionsSatisfyNeitherSide) {
  const SceneGraph s = two_objects({1, 0, 0}, {1, 5, 0});
  EXPECT_FALSE(relate_pair(s, 10, 20, Relation::left));
  EXPECT_FALSE(relate_pair(s, 10, 20, Relation::right));
  EXPECT_TRUE(relate_pair(s, 20, 10, Relation::behind));
}

TEST(RelatePair, UnknownIdThrows) {
  const SceneGraph s = two_objects({3, 0, 0}, {0, 0, 0});
  EXPECT_THROW(relate_pair(s, 10, 99, Relation::left), UnknownObject);
  EXPECT_THROW(same_attribute_set(s, 42, AttributeKind::color), UnknownObject);
}

TEST(RelatePair, Irreflexive) {
  const SceneGraph s = testing_support::worked_example_scene();
  for (Relation r : kRelations) EXPECT_FALSE(relate_pair(s, 1, 1, r));
}

TEST(SameAttribute, SingleObjectSceneIsEmpty) {
  const SceneGraph s(0, {0, -1, -0.5}, {{0, Shape::cube, Size::small, Color::red, Material::metal, {}, 0}});
  for (AttributeKind k : kAttributeKinds) EXPECT_TRUE(same_attribute_set(s, 0, k).empty());
}

TEST(SameAttribute, WorkedExampleCubes) {
  const SceneGraph s = testing_support::worked_example_scene();
  EXPECT_EQ(same_attribute_set(s, 2, AttributeKind::shape), std::vector<int>{0});
  EXPECT_EQ(same_attribute_set(s, 2, AttributeKind::color), std::vector<int>{0});
  EXPECT_EQ(same_attribute_set(s, 1, AttributeKind::size), std::vector<int>{2});
}

TEST(SameAttribute, MatchesBruteForceFilterOnSampledScenes) {
  SamplerConfig config;
  for (int i = 0; i < 200; ++i) {
    config.seed = static_cast<std::uint64_t>(i);
    const SceneGraph s = sample_indexed_scene(config, i);
    for (const auto& a : s.objects()) {
      for (AttributeKind k : kAttributeKinds) {
        std::vector<int> expected;
        for (const auto& b : s.objects()) {
          if (b.id != a.id && attribute_code(a, k) == attribute_code(b, k)) expected.push_back(b.id);
        }
        const auto got = same_attribute_set(s, a.id, k);
        ASSERT_EQ(got, expected);
        for (int b : got) {
          const auto back = same_attribute_set(s, b, k);
          EXPECT_NE(std::find(back.begin(), back.end(), a.id), back.end());
        }
      }
    }
  }
}

TEST(SceneGraph, RejectsDuplicateIds) {
  EXPECT_THROW(SceneGraph(0, {0, -1, 0},
                          {{1, Shape::cube, Size::small, Color::red, Material::metal, {}, 0},
                           {1, Shape::cube, Size::small, Color::red, Material::metal, {1, 1, 0}, 0}}),
               SceneError);
}

TEST(SceneJson, RoundTripKeepsObjectsAndRelationships) {
  SamplerConfig config;
  for (int i = 0; i < 50; ++i) {
    const SceneGraph s = sample_indexed_scene(config, i);
    const Json j = scene_to_json(s);
    const SceneGraph back = scene_from_json(j);
    EXPECT_EQ(back.objects(), s.objects());
    EXPECT_EQ(back.camera_view(), s.camera_view());
    EXPECT_EQ(scene_to_json(back).dump(), j.dump());
  }
}

TEST(SceneJson, RelationshipsOptionalOnInputButValidatedWhenPresent) {
  Json j = scene_to_json(testing_support::worked_example_scene());
  Json without = j;
  without.erase("relationships");
  EXPECT_EQ(scene_to_json(scene_from_json(without)).dump(), j.dump());

  j["relationships"]["behind"][1] = Json::array();
  EXPECT_THROW(scene_from_json(j), SceneError);
}

TEST(SceneJson, FieldLayout) {
  const Json j = scene_to_json(testing_support::worked_example_scene());
  EXPECT_EQ(j["scene_id"], 7);
  EXPECT_EQ(j["objects"][2]["shape"], "cube");
  EXPECT_EQ(j["objects"][2]["position"].size(), 3U);
  // The large cube (id 2) is the only object behind the cylinder (id 1).
  EXPECT_EQ(j["relationships"]["behind"][1], Json::array({2}));
  EXPECT_THROW(scene_from_json(Json::parse(R"({"scene_id": 1})")), ParseError);
}
