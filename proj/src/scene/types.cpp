#include "sceneforge/scene/types.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace sceneforge::scene {

double Vec3::length() const { return std::sqrt(dot(*this)); }

bool Vec3::finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }

Vec3 Vec3::normalized() const {
  const double len = length();
  if (!(len > 0.0) || !std::isfinite(len)) throw std::invalid_argument("cannot normalize a zero vector");
  // Already-unit vectors are returned as-is so normalization is idempotent.
  if (std::abs(len - 1.0) <= 4 * std::numeric_limits<double>::epsilon()) return *this;
  return {x / len, y / len, z / len};
}

std::string Color::to_hex() const {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02X%02X%02X", r, g, b);
  return buf;
}

std::optional<Color> Color::from_hex(std::string_view text) {
  if (text.size() != 7 || text[0] != '#') return std::nullopt;
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  std::uint8_t channels[3];
  for (int i = 0; i < 3; ++i) {
    const int hi = nibble(text[1 + 2 * i]);
    const int lo = nibble(text[2 + 2 * i]);
    if (hi < 0 || lo < 0) return std::nullopt;
    channels[i] = static_cast<std::uint8_t>(hi * 16 + lo);
  }
  return Color{channels[0], channels[1], channels[2]};
}

std::string_view shape_name(Shape shape) {
  switch (shape) {
    case Shape::Cube: return "cube";
    case Shape::Sphere: return "sphere";
    case Shape::Cylinder: return "cylinder";
    case Shape::Plane: return "plane";
    case Shape::Capsule: return "capsule";
  }
  return "cube";
}

std::optional<Shape> parse_shape(std::string_view name) {
  for (Shape s : {Shape::Cube, Shape::Sphere, Shape::Cylinder, Shape::Plane, Shape::Capsule}) {
    if (shape_name(s) == name) return s;
  }
  return std::nullopt;
}

bool valid_entity_name(std::string_view name) {
  if (name.empty() || name.size() > 128) return false;
  if (name == kSelfName || name == kNoneName) return false;
  for (char c : name) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  }
  return true;
}

}  // namespace sceneforge::scene
