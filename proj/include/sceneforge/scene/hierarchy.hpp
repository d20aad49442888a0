#pragma once

#include "sceneforge/scene/scene.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace sceneforge::scene {

enum class NumberFormat {
  /// At most 6 decimals, trailing zeros dropped. The form shown to models.
  Compact,
  /// Shortest representation that round-trips the double exactly.
  Exact,
};

/// Nested array of entity objects with fields in fixed order:
/// name, shape, position, rotation, scale, color, behaviors, handlers, children.
nlohmann::ordered_json hierarchy_json(const Scene& scene, NumberFormat format = NumberFormat::Compact);

/// Single-line JSON text of hierarchy_json. A pure function of the scene.
std::string serialize_hierarchy(const Scene& scene, NumberFormat format = NumberFormat::Compact);

/// JSON array of root entity names, the fallback the analyzer uses on big scenes.
std::string serialize_top_level_names(const Scene& scene);

nlohmann::ordered_json behavior_json(const Behavior& behavior, NumberFormat format);

inline constexpr int kSceneFormatVersion = 1;

/// Export document: {"scene_format": 1, "clock", "next_id", "entities": exact hierarchy}.
nlohmann::ordered_json scene_document(const Scene& scene);

/// Hex SHA-256 over the exact scene document (entities, clock, id counter).
std::string scene_hash(const Scene& scene);

}  // namespace sceneforge::scene
