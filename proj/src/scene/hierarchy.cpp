#include "sceneforge/scene/hierarchy.hpp"

#include "sceneforge/util/hash.hpp"

#include <cmath>

namespace sceneforge::scene {

namespace {

using ordered_json = nlohmann::ordered_json;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

ordered_json number(double value, NumberFormat format) {
  if (format == NumberFormat::Compact && std::fabs(value) < 1e15) {
    value = std::round(value * 1e6) / 1e6;
  }
  if (value == 0.0) return 0;
  // Integral values print without a trailing ".0".
  if (std::fabs(value) < 9.0e15 && std::trunc(value) == value) {
    return static_cast<std::int64_t>(value);
  }
  return value;
}

ordered_json vec(const Vec3& v, NumberFormat format) {
  return ordered_json::array({number(v.x, format), number(v.y, format), number(v.z, format)});
}

ordered_json entity_json(const Scene& scene, const Entity& e, NumberFormat format) {
  ordered_json obj;
  obj["name"] = e.name;
  obj["shape"] = std::string(shape_name(e.shape));
  obj["position"] = vec(e.transform.position, format);
  obj["rotation"] = vec(e.transform.rotation, format);
  obj["scale"] = vec(e.transform.scale, format);
  obj["color"] = e.color.to_hex();
  ordered_json behaviors = ordered_json::array();
  for (const auto& b : e.behaviors) behaviors.push_back(behavior_json(b, format));
  obj["behaviors"] = std::move(behaviors);
  ordered_json handlers = ordered_json::array();
  for (const auto& h : e.handlers) handlers.push_back(to_script(h.body));
  obj["handlers"] = std::move(handlers);
  ordered_json children = ordered_json::array();
  for (EntityId child : e.children) children.push_back(entity_json(scene, scene.at(child), format));
  obj["children"] = std::move(children);
  return obj;
}

}  // namespace

ordered_json behavior_json(const Behavior& behavior, NumberFormat format) {
  ordered_json obj;
  obj["kind"] = std::string(behavior_kind(behavior));
  std::visit(overloaded{
                 [&](const Spin& b) {
                   obj["axis"] = vec(b.axis, format);
                   obj["speed"] = number(b.speed, format);
                 },
                 [&](const Orbit& b) {
                   obj["center"] = b.center;
                   obj["radius"] = number(b.radius, format);
                   obj["speed"] = number(b.speed, format);
                   obj["angle"] = b.angle ? number(*b.angle, format) : ordered_json(nullptr);
                 },
                 [&](const Oscillate& b) {
                   obj["axis"] = vec(b.axis, format);
                   obj["amplitude"] = number(b.amplitude, format);
                   obj["period"] = number(b.period, format);
                   obj["offset"] = number(b.applied_offset, format);
                 },
                 [&](const Follow& b) {
                   obj["target"] = b.target;
                   obj["speed"] = number(b.speed, format);
                 },
             },
             behavior);
  return obj;
}

ordered_json hierarchy_json(const Scene& scene, NumberFormat format) {
  ordered_json out = ordered_json::array();
  for (EntityId root : scene.roots()) out.push_back(entity_json(scene, scene.at(root), format));
  return out;
}

std::string serialize_hierarchy(const Scene& scene, NumberFormat format) {
  return hierarchy_json(scene, format).dump();
}

std::string serialize_top_level_names(const Scene& scene) {
  ordered_json names = ordered_json::array();
  for (EntityId root : scene.roots()) names.push_back(scene.at(root).name);
  return names.dump();
}

ordered_json scene_document(const Scene& scene) {
  ordered_json doc;
  doc["scene_format"] = kSceneFormatVersion;
  doc["clock"] = number(scene.clock(), NumberFormat::Exact);
  doc["next_id"] = scene.next_id();
  doc["entities"] = hierarchy_json(scene, NumberFormat::Exact);
  return doc;
}

std::string scene_hash(const Scene& scene) { return util::sha256_hex(scene_document(scene).dump()); }

}  // namespace sceneforge::scene
