#pragma once

#include "sceneforge/scene/types.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace sceneforge::scene {

/// Advances the Euler angles by axis * speed * dt every tick.
struct Spin {
  Vec3 axis{0.0, 1.0, 0.0};
  double speed = 0.0;  // deg/s

  friend bool operator==(const Spin&, const Spin&) = default;
};

/// Circles the named center at a fixed radius in the world XZ plane.
struct Orbit {
  std::string center;
  double radius = 1.0;  // m
  double speed = 0.0;   // deg/s
  // Angular position in degrees; derived from the current offset on first tick.
  std::optional<double> angle;

  friend bool operator==(const Orbit&, const Orbit&) = default;
};

/// Offsets the position by amplitude * sin(2*pi*clock/period) along the axis.
struct Oscillate {
  Vec3 axis{0.0, 1.0, 0.0};
  double amplitude = 0.0;  // m
  double period = 1.0;     // s, > 0
  // Offset currently baked into the position, so `set position` moves the anchor.
  double applied_offset = 0.0;

  friend bool operator==(const Oscillate&, const Oscillate&) = default;
};

/// Moves toward the named target at speed, never overshooting.
struct Follow {
  std::string target;
  double speed = 0.0;  // m/s, >= 0

  friend bool operator==(const Follow&, const Follow&) = default;
};

using Behavior = std::variant<Spin, Orbit, Oscillate, Follow>;

std::string_view behavior_kind(const Behavior& behavior);

/// Normalizes axes and validates ranges. Throws std::invalid_argument.
Behavior make_valid(Behavior behavior);

}  // namespace sceneforge::scene
