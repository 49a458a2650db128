#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "clevr/attributes.hpp"

namespace clevr {

struct Vec2 {
  double x = 0;
  double y = 0;
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

struct Vec3 {
  double x = 0;
  double y = 0;
  double z = 0;
  friend bool operator==(const Vec3&, const Vec3&) = default;
};

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }

class DegenerateCamera : public std::invalid_argument {
 public:
  DegenerateCamera() : std::invalid_argument("camera view has no ground-plane projection") {}
};

class UnknownObject : public std::out_of_range {
 public:
  explicit UnknownObject(int id) : std::out_of_range("unknown object id " + std::to_string(id)) {}
};

class SceneError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Ground-plane frame derived from the camera.
struct CameraAxes {
  Vec2 behind;  // points away from the camera
  Vec2 right;   // behind rotated by -90 degrees
};

/// `view` is the scene-to-camera direction; only its ground-plane part matters.
inline CameraAxes derive_axes(Vec3 view) {
  const double norm = std::hypot(view.x, view.y);
  if (!(norm > 1e-12)) throw DegenerateCamera();
  const Vec2 behind{-view.x / norm, -view.y / norm};
  return {behind, Vec2{behind.y, -behind.x}};
}

struct ObjectRecord {
  int id = 0;
  Shape shape = Shape::cube;
  Size size = Size::small;
  Color color = Color::gray;
  Material material = Material::rubber;
  Vec3 position;
  double rotation = 0;  // degrees about the vertical axis; no semantic effect

  Vec2 ground() const { return {position.x, position.y}; }
  friend bool operator==(const ObjectRecord&, const ObjectRecord&) = default;
};

constexpr int attribute_code(const ObjectRecord& o, AttributeKind kind) {
  switch (kind) {
    case AttributeKind::size: return static_cast<int>(o.size);
    case AttributeKind::color: return static_cast<int>(o.color);
    case AttributeKind::material: return static_cast<int>(o.material);
    case AttributeKind::shape: return static_cast<int>(o.shape);
  }
  return -1;
}

/// A set of objects, stored as a bitmask over positions in the scene's object list.
class ObjectSet {
 public:
  static constexpr std::size_t kCapacity = 64;

  constexpr ObjectSet() = default;
  constexpr explicit ObjectSet(std::uint64_t bits) : bits_(bits) {}

  static constexpr ObjectSet first_n(std::size_t n) {
    return ObjectSet(n >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1);
  }

  constexpr std::uint64_t bits() const { return bits_; }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr int size() const { return std::popcount(bits_); }
  constexpr bool contains(std::size_t index) const { return (bits_ >> index) & 1U; }
  constexpr void insert(std::size_t index) { bits_ |= std::uint64_t{1} << index; }
  constexpr void erase(std::size_t index) { bits_ &= ~(std::uint64_t{1} << index); }

  /// Position of the lowest member; only meaningful when non-empty.
  constexpr std::size_t front() const { return static_cast<std::size_t>(std::countr_zero(bits_)); }

  std::vector<std::size_t> indices() const {
    std::vector<std::size_t> out;
    for (std::uint64_t b = bits_; b != 0; b &= b - 1) out.push_back(std::countr_zero(b));
    return out;
  }

  template <typename F>
  constexpr void for_each(F&& f) const {
    for (std::uint64_t b = bits_; b != 0; b &= b - 1) f(static_cast<std::size_t>(std::countr_zero(b)));
  }

  friend constexpr ObjectSet operator&(ObjectSet a, ObjectSet b) { return ObjectSet(a.bits_ & b.bits_); }
  friend constexpr ObjectSet operator|(ObjectSet a, ObjectSet b) { return ObjectSet(a.bits_ | b.bits_); }
  friend constexpr bool operator==(ObjectSet, ObjectSet) = default;
  friend constexpr auto operator<=>(ObjectSet, ObjectSet) = default;

 private:
  std::uint64_t bits_ = 0;
};

/// Ground-truth scene. Immutable after construction; relationships are cached.
class SceneGraph {
 public:
  SceneGraph(int scene_id, Vec3 camera_view, std::vector<ObjectRecord> objects)
      : scene_id_(scene_id),
        camera_view_(camera_view),
        axes_(derive_axes(camera_view)),
        objects_(std::move(objects)) {
    if (objects_.size() > ObjectSet::kCapacity) {
      throw SceneError("scene " + std::to_string(scene_id_) + " has more than 64 objects");
    }
    for (std::size_t i = 0; i < objects_.size(); ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        if (objects_[i].id == objects_[j].id) {
          throw SceneError("duplicate object id " + std::to_string(objects_[i].id));
        }
      }
    }
    build_caches();
  }

  int scene_id() const { return scene_id_; }
  Vec3 camera_view() const { return camera_view_; }
  const CameraAxes& axes() const { return axes_; }
  const std::vector<ObjectRecord>& objects() const { return objects_; }
  std::size_t size() const { return objects_.size(); }
  const ObjectRecord& at(std::size_t index) const { return objects_.at(index); }
  ObjectSet all() const { return ObjectSet::first_n(objects_.size()); }

  std::optional<std::size_t> index_of(int id) const {
    for (std::size_t i = 0; i < objects_.size(); ++i) {
      if (objects_[i].id == id) return i;
    }
    return std::nullopt;
  }

  std::size_t require_index(int id) const {
    if (auto i = index_of(id)) return *i;
    throw UnknownObject(id);
  }

  /// Whether the object at index `a` stands in relation `r` to the object at index `b`.
  /// Equal projections satisfy neither side of the axis.
  bool relates(std::size_t a, std::size_t b, Relation r) const {
    if (a == b) return false;
    const Vec2 pa = objects_[a].ground();
    const Vec2 pb = objects_[b].ground();
    const Vec2 d{pa.x - pb.x, pa.y - pb.y};
    switch (r) {
      case Relation::behind: return dot(d, axes_.behind) > 0;
      case Relation::front: return dot(d, axes_.behind) < 0;
      case Relation::right: return dot(d, axes_.right) > 0;
      case Relation::left: return dot(d, axes_.right) < 0;
    }
    return false;
  }

  /// Objects standing in relation `r` to the anchor at `index` (relate's semantics).
  ObjectSet related_to(std::size_t index, Relation r) const {
    return related_[static_cast<int>(r)].at(index);
  }

  /// Other objects sharing the anchor's value of `kind`; never contains the anchor.
  ObjectSet same_attribute(std::size_t index, AttributeKind kind) const {
    return same_[static_cast<int>(kind)].at(index);
  }

  /// Per-object id lists for relation `r`, in object order.
  std::vector<std::vector<int>> relationship_ids(Relation r) const {
    std::vector<std::vector<int>> out(objects_.size());
    for (std::size_t i = 0; i < objects_.size(); ++i) {
      related_to(i, r).for_each([&](std::size_t j) { out[i].push_back(objects_[j].id); });
    }
    return out;
  }

  std::vector<int> ids(ObjectSet set) const {
    std::vector<int> out;
    set.for_each([&](std::size_t i) { out.push_back(objects_[i].id); });
    return out;
  }

 private:
  void build_caches() {
    const std::size_t n = objects_.size();
    for (auto& per_relation : related_) per_relation.assign(n, ObjectSet{});
    for (auto& per_kind : same_) per_kind.assign(n, ObjectSet{});
    for (std::size_t anchor = 0; anchor < n; ++anchor) {
      for (std::size_t other = 0; other < n; ++other) {
        if (other == anchor) continue;
        for (Relation r : kRelations) {
          if (relates(other, anchor, r)) related_[static_cast<int>(r)][anchor].insert(other);
        }
        for (AttributeKind k : kAttributeKinds) {
          if (attribute_code(objects_[other], k) == attribute_code(objects_[anchor], k)) {
            same_[static_cast<int>(k)][anchor].insert(other);
          }
        }
      }
    }
  }

  int scene_id_;
  Vec3 camera_view_;
  CameraAxes axes_;
  std::vector<ObjectRecord> objects_;
  std::array<std::vector<ObjectSet>, 4> related_;
  std::array<std::vector<ObjectSet>, 4> same_;
};

/// Id-level form of SceneGraph::relates: does object `a` stand in relation `r` to `b`?
inline bool relate_pair(const SceneGraph& scene, int a, int b, Relation r) {
  return scene.relates(scene.require_index(a), scene.require_index(b), r);
}

inline std::vector<int> same_attribute_set(const SceneGraph& scene, int a, AttributeKind kind) {
  return scene.ids(scene.same_attribute(scene.require_index(a), kind));
}

}  // namespace clevr
