#pragma once

#include "clevr/program.hpp"
#include "clevr/scene.hpp"

namespace testing_support {

// Worked-example scene: a small brown cube in front, a gray cylinder in the middle and a
// large brown cube at the back. The camera frame is axis aligned: behind = +y, right = +x.
inline clevr::SceneGraph worked_example_scene() {
  using namespace clevr;
  std::vector<ObjectRecord> objects = {
      {0, Shape::cube, Size::small, Color::brown, Material::rubber, {-1.5, -2.0, 0.35}, 30},
      {1, Shape::cylinder, Size::large, Color::gray, Material::rubber, {1.5, 0.0, 0.7}, 0},
      {2, Shape::cube, Size::large, Color::brown, Material::metal, {0.0, 2.0, 0.7}, 75},
  };
  return SceneGraph(7, Vec3{0, -1, -0.5}, std::move(objects));
}

// query_color(unique(filter_shape(cube, relate(behind, unique(filter_shape(cylinder, scene()))))))
inline clevr::Program worked_example_program() {
  using namespace clevr;
  Program p;
  const int s = p.add(FunctionKind::scene);
  const int cyl = p.add(FunctionKind::filter_shape, {s}, {Shape::cylinder});
  const int u1 = p.add(FunctionKind::unique, {cyl});
  const int rel = p.add(FunctionKind::relate, {u1}, {Relation::behind});
  const int cube = p.add(FunctionKind::filter_shape, {rel}, {Shape::cube});
  const int u2 = p.add(FunctionKind::unique, {cube});
  p.add(FunctionKind::query_color, {u2});
  return p;
}

// query_color(unique(filter_shape(cube, scene())))
inline clevr::Program worked_example_effective_program() {
  using namespace clevr;
  Program p;
  const int s = p.add(FunctionKind::scene);
  const int cube = p.add(FunctionKind::filter_shape, {s}, {Shape::cube});
  const int u = p.add(FunctionKind::unique, {cube});
  p.add(FunctionKind::query_color, {u});
  return p;
}

}  // namespace testing_support
