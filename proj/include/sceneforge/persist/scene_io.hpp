#pragma once

#include "sceneforge/scene/scene.hpp"

#include <nlohmann/json.hpp>

#include <stdexcept>
#include <string>
#include <string_view>

namespace sceneforge::persist {

class VersionMismatch : public std::runtime_error {
 public:
  VersionMismatch(int found, int expected);
  [[nodiscard]] int found() const { return found_; }

 private:
  int found_;
};

/// Malformed scene file. `line` is 1-based, 0 when unknown.
class SceneFileError : public std::runtime_error {
 public:
  SceneFileError(int line, const std::string& message);
  [[nodiscard]] int line() const { return line_; }

 private:
  int line_;
};

/// Rebuilds entities from a hierarchy document (the nested array produced by
/// serialize_hierarchy). Ids are assigned depth-first in document order.
scene::Scene scene_from_hierarchy(const nlohmann::json& entities);

/// Pretty-printed scene document with the "scene_format" header.
std::string export_scene_text(const scene::Scene& scene);
void export_scene(const scene::Scene& scene, const std::string& path);

/// Inverse of export_scene_text; restores clock and the id counter as well.
scene::Scene import_scene_text(std::string_view text);
scene::Scene import_scene(const std::string& path);

}  // namespace sceneforge::persist
