#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "clevr/scene.hpp"

namespace clevr {

using Json = nlohmann::ordered_json;

namespace detail {

inline Vec3 vec3_from_json(const Json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) {
    throw ParseError(std::string(what) + " must be an array of three numbers");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline const Json& require(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(std::string("missing field '") + key + "'");
  return j.at(key);
}

}  // namespace detail

inline Json scene_to_json(const SceneGraph& scene) {
  Json objects = Json::array();
  for (const auto& o : scene.objects()) {
    objects.push_back(Json{{"id", o.id},
                           {"shape", to_string(o.shape)},
                           {"size", to_string(o.size)},
                           {"color", to_string(o.color)},
                           {"material", to_string(o.material)},
                           {"position", {o.position.x, o.position.y, o.position.z}},
                           {"rotation", o.rotation}});
  }
  Json relationships = Json::object();
  for (Relation r : kRelations) relationships[std::string(to_string(r))] = scene.relationship_ids(r);
  const Vec3 v = scene.camera_view();
  return Json{{"scene_id", scene.scene_id()},
              {"camera_view", {v.x, v.y, v.z}},
              {"objects", std::move(objects)},
              {"relationships", std::move(relationships)}};
}

/// Parses a scene; relationships are recomputed and, when present, must agree.
inline SceneGraph scene_from_json(const Json& j) {
  try {
    std::vector<ObjectRecord> objects;
    for (const Json& jo : detail::require(j, "objects")) {
      ObjectRecord o;
      o.id = detail::require(jo, "id").get<int>();
      o.shape = parse<Shape>(detail::require(jo, "shape").get<std::string>());
      o.size = parse<Size>(detail::require(jo, "size").get<std::string>());
      o.color = parse<Color>(detail::require(jo, "color").get<std::string>());
      o.material = parse<Material>(detail::require(jo, "material").get<std::string>());
      o.position = detail::vec3_from_json(detail::require(jo, "position"), "position");
      o.rotation = jo.value("rotation", 0.0);
      objects.push_back(o);
    }
    SceneGraph scene(detail::require(j, "scene_id").get<int>(),
                     detail::vec3_from_json(detail::require(j, "camera_view"), "camera_view"),
                     std::move(objects));
    if (j.contains("relationships")) {
      const Json& rel = j.at("relationships");
      for (Relation r : kRelations) {
        const std::string key(to_string(r));
        if (!rel.contains(key)) continue;
        if (rel.at(key).get<std::vector<std::vector<int>>>() != scene.relationship_ids(r)) {
          throw SceneError("scene " + std::to_string(scene.scene_id()) + ": '" + key +
                           "' relationships disagree with object positions");
        }
      }
    }
    return scene;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed scene JSON: ") + e.what());
  }
}

}  // namespace clevr
