#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace clevr {

enum class Size : std::uint8_t { small, large };
enum class Color : std::uint8_t { gray, red, blue, green, brown, purple, cyan, yellow };
enum class Shape : std::uint8_t { cube, sphere, cylinder };
enum class Material : std::uint8_t { rubber, metal };
enum class Relation : std::uint8_t { left, right, front, behind };

/// Which object attribute a filter/query/same/equal function addresses.
enum class AttributeKind : std::uint8_t { size, color, material, shape };

inline constexpr std::array kSizes = {Size::small, Size::large};
inline constexpr std::array kColors = {Color::gray,  Color::red,    Color::blue, Color::green,
                                       Color::brown, Color::purple, Color::cyan, Color::yellow};
inline constexpr std::array kShapes = {Shape::cube, Shape::sphere, Shape::cylinder};
inline constexpr std::array kMaterials = {Material::rubber, Material::metal};
inline constexpr std::array kRelations = {Relation::left, Relation::right, Relation::front,
                                          Relation::behind};
inline constexpr std::array kAttributeKinds = {AttributeKind::size, AttributeKind::color,
                                               AttributeKind::material, AttributeKind::shape};

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline constexpr std::array<std::string_view, 2> kSizeNames = {"small", "large"};
inline constexpr std::array<std::string_view, 8> kColorNames = {
    "gray", "red", "blue", "green", "brown", "purple", "cyan", "yellow"};
inline constexpr std::array<std::string_view, 3> kShapeNames = {"cube", "sphere", "cylinder"};
inline constexpr std::array<std::string_view, 2> kMaterialNames = {"rubber", "metal"};
inline constexpr std::array<std::string_view, 4> kRelationNames = {"left", "right", "front",
                                                                   "behind"};
inline constexpr std::array<std::string_view, 4> kAttributeKindNames = {"size", "color",
                                                                        "material", "shape"};

template <typename E, std::size_t N>
std::optional<E> lookup(std::string_view text, const std::array<std::string_view, N>& names) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == text) return static_cast<E>(i);
  }
  return std::nullopt;
}

}  // namespace detail

constexpr std::string_view to_string(Size v) { return detail::kSizeNames[static_cast<int>(v)]; }
constexpr std::string_view to_string(Color v) { return detail::kColorNames[static_cast<int>(v)]; }
constexpr std::string_view to_string(Shape v) { return detail::kShapeNames[static_cast<int>(v)]; }
constexpr std::string_view to_string(Material v) {
  return detail::kMaterialNames[static_cast<int>(v)];
}
constexpr std::string_view to_string(Relation v) {
  return detail::kRelationNames[static_cast<int>(v)];
}
constexpr std::string_view to_string(AttributeKind v) {
  return detail::kAttributeKindNames[static_cast<int>(v)];
}

// Parsing is exact and lowercase; "front" is the only spelling of the relation.
template <typename E>
std::optional<E> try_parse(std::string_view text);

template <>
inline std::optional<Size> try_parse<Size>(std::string_view t) {
  return detail::lookup<Size>(t, detail::kSizeNames);
}
template <>
inline std::optional<Color> try_parse<Color>(std::string_view t) {
  return detail::lookup<Color>(t, detail::kColorNames);
}
template <>
inline std::optional<Shape> try_parse<Shape>(std::string_view t) {
  return detail::lookup<Shape>(t, detail::kShapeNames);
}
template <>
inline std::optional<Material> try_parse<Material>(std::string_view t) {
  return detail::lookup<Material>(t, detail::kMaterialNames);
}
template <>
inline std::optional<Relation> try_parse<Relation>(std::string_view t) {
  return detail::lookup<Relation>(t, detail::kRelationNames);
}
template <>
inline std::optional<AttributeKind> try_parse<AttributeKind>(std::string_view t) {
  return detail::lookup<AttributeKind>(t, detail::kAttributeKindNames);
}

template <typename E>
E parse(std::string_view text) {
  if (auto v = try_parse<E>(text)) return *v;
  throw ParseError("unknown attribute value '" + std::string(text) + "'");
}

}  // namespace clevr
