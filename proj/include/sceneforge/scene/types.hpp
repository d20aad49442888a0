#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace sceneforge::scene {

using EntityId = std::uint64_t;

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(const Vec3&, const Vec3&) = default;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }

  [[nodiscard]] double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  [[nodiscard]] double length() const;
  [[nodiscard]] bool finite() const;
  /// Unit vector in the same direction. Throws std::invalid_argument on a zero vector.
  [[nodiscard]] Vec3 normalized() const;
};

struct Color {
  std::uint8_t r = 255;
  std::uint8_t g = 255;
  std::uint8_t b = 255;

  friend bool operator==(const Color&, const Color&) = default;

  /// "#RRGGBB", upper-case hex.
  [[nodiscard]] std::string to_hex() const;
  /// Accepts "#RRGGBB" (either case). Returns nullopt on anything else.
  static std::optional<Color> from_hex(std::string_view text);
};

enum class Shape { Cube, Sphere, Cylinder, Plane, Capsule };

std::string_view shape_name(Shape shape);
std::optional<Shape> parse_shape(std::string_view name);

/// Local transform relative to the parent entity (or the world for roots).
/// Rotation holds Euler angles in degrees, applied Z first, then X, then Y.
struct Transform {
  Vec3 position{0.0, 0.0, 0.0};
  Vec3 rotation{0.0, 0.0, 0.0};
  Vec3 scale{1.0, 1.0, 1.0};

  friend bool operator==(const Transform&, const Transform&) = default;
};

/// Entity names are [A-Za-z0-9_]+ and may not be one of the reserved words.
bool valid_entity_name(std::string_view name);

inline constexpr std::string_view kSelfName = "self";
inline constexpr std::string_view kNoneName = "none";

}  // namespace sceneforge::scene
