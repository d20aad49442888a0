#include "sceneforge/persist/scene_io.hpp"

#include "sceneforge/scene/hierarchy.hpp"
#include "sceneforge/script/script.hpp"
#include "sceneforge/util/text.hpp"

#include <algorithm>

namespace sceneforge::persist {

using nlohmann::json;
using scene::Scene;

VersionMismatch::VersionMismatch(int found, int expected)
    : std::runtime_error("scene_format " + std::to_string(found) + " is not supported (expected " +
                         std::to_string(expected) + ")"),
      found_(found) {}

SceneFileError::SceneFileError(int line, const std::string& message)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + message : message), line_(line) {}

namespace {

// Carries the entity name so callers can locate the offending line.
struct SchemaError {
  std::string entity;
  std::string message;
};

scene::Vec3 vec3(const json& j, const std::string& field, const std::string& entity) {
  if (!j.is_array() || j.size() != 3 || !std::all_of(j.begin(), j.end(), [](const json& x) { return x.is_number(); })) {
    throw SchemaError{entity, "field '" + field + "' must be an array of 3 numbers"};
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

const json& field(const json& obj, const char* name, const std::string& entity) {
  auto it = obj.find(name);
  if (it == obj.end()) throw SchemaError{entity, std::string("missing field '") + name + "'"};
  return *it;
}

double num(const json& obj, const char* name, const std::string& entity) {
  const json& v = field(obj, name, entity);
  if (!v.is_number()) throw SchemaError{entity, std::string("field '") + name + "' must be a number"};
  return v.get<double>();
}

std::string str(const json& obj, const char* name, const std::string& entity) {
  const json& v = field(obj, name, entity);
  if (!v.is_string()) throw SchemaError{entity, std::string("field '") + name + "' must be a string"};
  return v.get<std::string>();
}

scene::Behavior behavior(const json& b, const std::string& entity) {
  const std::string kind = str(b, "kind", entity);
  scene::Behavior out;
  if (kind == "spin") {
    out = scene::Spin{vec3(field(b, "axis", entity), "axis", entity), num(b, "speed", entity)};
  } else if (kind == "orbit") {
    scene::Orbit o;
    o.center = str(b, "center", entity);
    o.radius = num(b, "radius", entity);
    o.speed = num(b, "speed", entity);
    if (auto it = b.find("angle"); it != b.end() && !it->is_null()) o.angle = it->get<double>();
    out = o;
  } else if (kind == "oscillate") {
    scene::Oscillate o;
    o.axis = vec3(field(b, "axis", entity), "axis", entity);
    o.amplitude = num(b, "amplitude", entity);
    o.period = num(b, "period", entity);
    o.applied_offset = b.contains("offset") ? num(b, "offset", entity) : 0.0;
    out = o;
  } else if (kind == "follow") {
    out = scene::Follow{str(b, "target", entity), num(b, "speed", entity)};
  } else {
    throw SchemaError{entity, "unknown behavior kind '" + kind + "'"};
  }
  try {
    return scene::make_valid(out);
  } catch (const std::invalid_argument& e) {
    throw SchemaError{entity, e.what()};
  }
}

void add_entity(Scene& s, const json& obj, std::optional<scene::EntityId> parent,
                std::vector<std::pair<scene::EntityId, const json*>>& handler_lists, int depth) {
  if (depth > 512) throw SchemaError{"", "hierarchy nested too deeply"};
  if (!obj.is_object()) throw SchemaError{"", "entity must be an object"};
  const std::string name = str(obj, "name", "");
  const auto shape = scene::parse_shape(str(obj, "shape", name));
  if (!shape) throw SchemaError{name, "unknown shape '" + obj["shape"].get<std::string>() + "'"};
  scene::EntityId id = 0;
  try {
    id = s.insert_entity(name, *shape, parent);
  } catch (const std::exception& e) {
    throw SchemaError{name, e.what()};
  }
  scene::Entity& e = s.mutable_entity(id);
  e.transform.position = vec3(field(obj, "position", name), "position", name);
  e.transform.rotation = vec3(field(obj, "rotation", name), "rotation", name);
  e.transform.scale = vec3(field(obj, "scale", name), "scale", name);
  const auto& sc = e.transform.scale;
  if (!(sc.x > 0 && sc.y > 0 && sc.z > 0)) throw SchemaError{name, "scale components must be > 0"};
  const auto color = scene::Color::from_hex(str(obj, "color", name));
  if (!color) throw SchemaError{name, "field 'color' must be #RRGGBB"};
  e.color = *color;
  const json& behaviors = field(obj, "behaviors", name);
  if (!behaviors.is_array()) throw SchemaError{name, "field 'behaviors' must be an array"};
  for (const auto& b : behaviors) s.mutable_entity(id).behaviors.push_back(behavior(b, name));
  const json& handlers = field(obj, "handlers", name);
  if (!handlers.is_array()) throw SchemaError{name, "field 'handlers' must be an array"};
  handler_lists.emplace_back(id, &handlers);
  const json& children = field(obj, "children", name);
  if (!children.is_array()) throw SchemaError{name, "field 'children' must be an array"};
  for (const auto& child : children) add_entity(s, child, id, handler_lists, depth + 1);
}

Scene build(const json& entities) {
  if (!entities.is_array()) throw SchemaError{"", "entities must be an array"};
  Scene s;
  std::vector<std::pair<scene::EntityId, const json*>> handler_lists;
  for (const auto& root : entities) add_entity(s, root, std::nullopt, handler_lists, 0);
  for (const auto& [id, list] : handler_lists) {
    const std::string name = s.at(id).name;
    for (const auto& line : *list) {
      if (!line.is_string()) throw SchemaError{name, "handlers must be strings"};
      auto body = script::compile_handler_body(line.get<std::string>());
      if (auto* errors = std::get_if<std::vector<script::CompileError>>(&body)) {
        throw SchemaError{name, "handler does not compile: " + errors->front().message};
      }
      s.mutable_entity(id).handlers.push_back({id, std::get<0>(std::move(body))});
    }
  }
  s.validate();
  return s;
}

int line_of_offset(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

int line_of_entity(std::string_view text, const std::string& entity) {
  if (entity.empty()) return 0;
  const std::string needle = "\"name\": " + json(entity).dump();
  auto pos = text.find(needle);
  if (pos == std::string_view::npos) pos = text.find("\"name\":" + json(entity).dump());
  return pos == std::string_view::npos ? 0 : line_of_offset(text, pos);
}

}  // namespace

Scene scene_from_hierarchy(const json& entities) {
  try {
    return build(entities);
  } catch (const SchemaError& e) {
    throw SceneFileError(0, (e.entity.empty() ? "" : "entity '" + e.entity + "': ") + e.message);
  }
}

std::string export_scene_text(const Scene& scene) { return scene::scene_document(scene).dump(2) + "\n"; }

void export_scene(const Scene& scene, const std::string& path) { util::write_file(path, export_scene_text(scene)); }

Scene import_scene_text(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SceneFileError(line_of_offset(text, e.byte == 0 ? 0 : e.byte - 1), e.what());
  }
  if (!doc.is_object()) throw SceneFileError(1, "scene file must be a JSON object");
  const auto version = doc.find("scene_format");
  if (version == doc.end() || !version->is_number_integer()) {
    throw SceneFileError(1, "missing integer \"scene_format\" header");
  }
  if (version->get<int>() != scene::kSceneFormatVersion) {
    throw VersionMismatch(version->get<int>(), scene::kSceneFormatVersion);
  }
  try {
    Scene s = build(doc.value("entities", json::array()));
    const double clock = doc.value("clock", 0.0);
    try {
      s.set_clock(clock);
    } catch (const std::invalid_argument& e) {
      throw SchemaError{"", e.what()};
    }
    s.reserve_ids(doc.value("next_id", s.next_id()));
    return s;
  } catch (const SchemaError& e) {
    throw SceneFileError(line_of_entity(text, e.entity),
                         (e.entity.empty() ? "" : "entity '" + e.entity + "': ") + e.message);
  } catch (const json::exception& e) {
    throw SceneFileError(0, e.what());
  }
}

Scene import_scene(const std::string& path) { return import_scene_text(util::read_file(path)); }

}  // namespace sceneforge::persist
