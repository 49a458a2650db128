#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "clevr/config.hpp"
#include "clevr/parallel.hpp"
#include "clevr/rng.hpp"
#include "clevr/scene.hpp"

namespace clevr {

enum class Condition : std::uint8_t { full, A, B };

inline std::string_view to_string(Condition c) {
  switch (c) {
    case Condition::full: return "full";
    case Condition::A: return "A";
    case Condition::B: return "B";
  }
  return "full";
}

inline Condition parse_condition(std::string_view s) {
  if (s == "full") return Condition::full;
  if (s == "A" || s == "a") return Condition::A;
  if (s == "B" || s == "b") return Condition::B;
  throw ConfigError("unknown condition '" + std::string(s) + "'");
}

/// Colours a shape may take under a generation condition.
inline std::span<const Color> allowed_colors(Condition condition, Shape shape) {
  static constexpr std::array<Color, 4> kPaletteOne = {Color::gray, Color::blue, Color::brown,
                                                       Color::yellow};
  static constexpr std::array<Color, 4> kPaletteTwo = {Color::red, Color::green, Color::purple,
                                                       Color::cyan};
  if (condition == Condition::full || shape == Shape::sphere) return kColors;
  const bool first = (shape == Shape::cube) == (condition == Condition::A);
  return first ? std::span<const Color>(kPaletteOne) : std::span<const Color>(kPaletteTwo);
}

inline bool palette_allows(Condition condition, Shape shape, Color color) {
  for (Color c : allowed_colors(condition, shape)) {
    if (c == color) return true;
  }
  return false;
}

/// Placement parameters. Radii, margins and extents are artifact constants in scene units.
struct SamplerConfig {
  int min_objects = 3;
  int max_objects = 10;
  double min_pairwise_distance = 0.25;  // clearance added to the two radii
  double min_axis_margin = 0.4;         // along both the right and behind axes
  double radius_small = 0.35;
  double radius_large = 0.7;
  double placement_extent = 3.0;  // objects land in [-extent, extent]^2
  int placement_attempts = 50;    // per object
  int scene_attempts = 100;       // fresh restarts before a batch gives up on an index
  double camera_azimuth = -43.3;  // degrees, scene-to-camera direction on the ground plane
  double camera_elevation = 0.55;
  double camera_jitter = 5.0;  // +/- degrees of azimuth
  Condition condition = Condition::full;
  std::uint64_t seed = 0;

  double radius(Size s) const { return s == Size::small ? radius_small : radius_large; }

  void validate() const {
    if (!(3 <= min_objects && min_objects <= max_objects && max_objects <= 10)) {
      throw ConfigError("object counts must satisfy 3 <= min_objects <= max_objects <= 10");
    }
    if (!(min_axis_margin > 0 && min_pairwise_distance > 0)) {
      throw ConfigError("margins must be positive");
    }
    if (!(radius_small > 0 && radius_large > 0 && placement_extent > 0)) {
      throw ConfigError("radii and placement extent must be positive");
    }
    if (placement_attempts < 1 || scene_attempts < 1) throw ConfigError("attempt budgets must be >= 1");
    if (camera_jitter < 0) throw ConfigError("camera_jitter must be non-negative");
  }

  static SamplerConfig from_map(const ConfigMap& map) {
    SamplerConfig c;
    ConfigReader r(map);
    std::string condition(to_string(c.condition));
    r.read("min_objects", c.min_objects);
    r.read("max_objects", c.max_objects);
    r.read("min_pairwise_distance", c.min_pairwise_distance);
    r.read("min_axis_margin", c.min_axis_margin);
    r.read("radius_small", c.radius_small);
    r.read("radius_large", c.radius_large);
    r.read("placement_extent", c.placement_extent);
    r.read("placement_attempts", c.placement_attempts);
    r.read("scene_attempts", c.scene_attempts);
    r.read("camera_azimuth", c.camera_azimuth);
    r.read("camera_elevation", c.camera_elevation);
    r.read("camera_jitter", c.camera_jitter);
    r.read("condition", condition);
    r.read("seed", c.seed);
    r.finish();
    c.condition = parse_condition(condition);
    c.validate();
    return c;
  }

  ConfigMap to_map() const {
    auto num = [](double v) { return nlohmann::json(v).dump(); };
    return {{"min_objects", std::to_string(min_objects)},
            {"max_objects", std::to_string(max_objects)},
            {"min_pairwise_distance", num(min_pairwise_distance)},
            {"min_axis_margin", num(min_axis_margin)},
            {"radius_small", num(radius_small)},
            {"radius_large", num(radius_large)},
            {"placement_extent", num(placement_extent)},
            {"placement_attempts", std::to_string(placement_attempts)},
            {"scene_attempts", std::to_string(scene_attempts)},
            {"camera_azimuth", num(camera_azimuth)},
            {"camera_elevation", num(camera_elevation)},
            {"camera_jitter", num(camera_jitter)},
            {"condition", std::string(to_string(condition))},
            {"seed", std::to_string(seed)}};
  }
};

class PlacementExhausted : public std::runtime_error {
 public:
  explicit PlacementExhausted(int object_index)
      : std::runtime_error("no valid position for object " + std::to_string(object_index)) {}
};

namespace detail {

enum class PairCheck { ok, intersects, right_margin, behind_margin };

inline double projection_gap(Vec2 a, Vec2 b, Vec2 axis) {
  return std::abs(dot(Vec2{a.x - b.x, a.y - b.y}, axis));
}

}  // namespace detail

/// Samples one scene by rejection placement. Throws PlacementExhausted when an object
/// cannot be placed within its attempt budget.
inline SceneGraph sample_scene(const SamplerConfig& config, Rng& rng, int scene_id = 0) {
  config.validate();
  const double azimuth =
      (config.camera_azimuth + rng.uniform(-config.camera_jitter, config.camera_jitter)) *
      std::numbers::pi / 180.0;
  const Vec3 view{std::cos(azimuth), std::sin(azimuth), config.camera_elevation};
  const CameraAxes axes = derive_axes(view);

  const int count = rng.between(config.min_objects, config.max_objects);
  std::vector<ObjectRecord> objects;
  objects.reserve(count);
  for (int i = 0; i < count; ++i) {
    ObjectRecord o;
    o.id = i;
    o.shape = rng.pick<Shape>(kShapes);
    o.color = rng.pick(allowed_colors(config.condition, o.shape));
    o.size = rng.pick<Size>(kSizes);
    o.material = rng.pick<Material>(kMaterials);
    o.rotation = rng.uniform(0.0, 360.0);
    const double r = config.radius(o.size);
    bool placed = false;
    for (int attempt = 0; attempt < config.placement_attempts && !placed; ++attempt) {
      const Vec2 p{rng.uniform(-config.placement_extent, config.placement_extent),
                   rng.uniform(-config.placement_extent, config.placement_extent)};
      placed = true;
      for (const auto& other : objects) {
        const Vec2 q = other.ground();
        const double needed = r + config.radius(other.size) + config.min_pairwise_distance;
        if (std::hypot(p.x - q.x, p.y - q.y) < needed ||
            detail::projection_gap(p, q, axes.right) < config.min_axis_margin ||
            detail::projection_gap(p, q, axes.behind) < config.min_axis_margin) {
          placed = false;
          break;
        }
      }
      if (placed) o.position = {p.x, p.y, r};
    }
    if (!placed) throw PlacementExhausted(i);
    objects.push_back(o);
  }
  return SceneGraph(scene_id, view, std::move(objects));
}

/// Samples scene `index` of a batch, restarting with a fresh derived stream on placement failure.
inline SceneGraph sample_indexed_scene(const SamplerConfig& config, int index) {
  for (int attempt = 0; attempt < config.scene_attempts; ++attempt) {
    Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(index),
                        static_cast<std::uint64_t>(attempt)));
    try {
      return sample_scene(config, rng, index);
    } catch (const PlacementExhausted&) {
    }
  }
  throw PlacementExhausted(-1);
}

/// Samples `count` scenes; the result depends only on (config, count), never on `workers`.
inline std::vector<SceneGraph> sample_scenes(const SamplerConfig& config, int count,
                                             unsigned workers = 1) {
  config.validate();
  std::vector<std::optional<SceneGraph>> slots(static_cast<std::size_t>(std::max(count, 0)));
  parallel_for(slots.size(), workers, [&](std::size_t i) { slots[i].emplace(sample_indexed_scene(config, static_cast<int>(i))); });
  std::vector<SceneGraph> scenes;
  scenes.reserve(slots.size());
  for (auto& s : slots) scenes.push_back(std::move(*s));
  return scenes;
}

struct Violation {
  std::string rule;  // ObjectCount, Intersection, AxisMargin, Palette, BelowGround, OutOfBounds
  std::vector<int> ids;
  std::string detail;

  friend bool operator==(const Violation&, const Violation&) = default;
};

/// Lists every sampler constraint the scene breaks; empty means the scene is valid.
inline std::vector<Violation> validate_scene(const SceneGraph& scene, const SamplerConfig& config) {
  std::vector<Violation> out;
  const auto& objects = scene.objects();
  const int n = static_cast<int>(objects.size());
  if (n < config.min_objects || n > config.max_objects) {
    out.push_back({"ObjectCount", {}, std::to_string(n) + " objects"});
  }
  for (const auto& o : objects) {
    if (o.position.z < 0) out.push_back({"BelowGround", {o.id}, ""});
    if (std::abs(o.position.x) > config.placement_extent ||
        std::abs(o.position.y) > config.placement_extent) {
      out.push_back({"OutOfBounds", {o.id}, ""});
    }
    if (!palette_allows(config.condition, o.shape, o.color)) {
      out.push_back({"Palette", {o.id},
                     std::string(to_string(o.color)) + " " + std::string(to_string(o.shape))});
    }
  }
  const CameraAxes& axes = scene.axes();
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const ObjectRecord& a = objects[i];
      const ObjectRecord& b = objects[j];
      const Vec2 pa = a.ground();
      const Vec2 pb = b.ground();
      const double needed = config.radius(a.size) + config.radius(b.size) + config.min_pairwise_distance;
      if (std::hypot(pa.x - pb.x, pa.y - pb.y) < needed) out.push_back({"Intersection", {a.id, b.id}, ""});
      if (detail::projection_gap(pa, pb, axes.right) < config.min_axis_margin) {
        out.push_back({"AxisMargin", {a.id, b.id}, "left"});
      }
      if (detail::projection_gap(pa, pb, axes.behind) < config.min_axis_margin) {
        out.push_back({"AxisMargin", {a.id, b.id}, "behind"});
      }
    }
  }
  return out;
}

}  // namespace clevr
