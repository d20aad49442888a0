#include "sceneforge/scene/scene.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <set>

namespace sceneforge::scene {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;

using Mat3 = std::array<std::array<double, 3>, 3>;

struct Affine {
  Mat3 m{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  Vec3 t;

  [[nodiscard]] Vec3 apply(const Vec3& p) const {
    return {m[0][0] * p.x + m[0][1] * p.y + m[0][2] * p.z + t.x,
            m[1][0] * p.x + m[1][1] * p.y + m[1][2] * p.z + t.y,
            m[2][0] * p.x + m[2][1] * p.y + m[2][2] * p.z + t.z};
  }
};

Mat3 multiply(const Mat3& a, const Mat3& b) {
  Mat3 out{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
  return out;
}

Affine compose(const Affine& outer, const Affine& inner) {
  Affine out;
  out.m = multiply(outer.m, inner.m);
  const Affine linear{outer.m, {}};
  out.t = linear.apply(inner.t) + outer.t;
  return out;
}

Affine inverse(const Affine& a) {
  const auto& m = a.m;
  const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                     m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                     m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  Affine inv;
  inv.m[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / det;
  inv.m[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det;
  inv.m[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det;
  inv.m[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / det;
  inv.m[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det;
  inv.m[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det;
  inv.m[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / det;
  inv.m[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det;
  inv.m[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det;
  const Affine linear{inv.m, {}};
  inv.t = linear.apply(a.t) * -1.0;
  return inv;
}

// R = Ry * Rx * Rz: a vector is rotated about Z first, then X, then Y.
Mat3 rotation_matrix(const Vec3& euler_deg) {
  const double cx = std::cos(euler_deg.x * kDegToRad), sx = std::sin(euler_deg.x * kDegToRad);
  const double cy = std::cos(euler_deg.y * kDegToRad), sy = std::sin(euler_deg.y * kDegToRad);
  const double cz = std::cos(euler_deg.z * kDegToRad), sz = std::sin(euler_deg.z * kDegToRad);
  const Mat3 rz{{{cz, -sz, 0}, {sz, cz, 0}, {0, 0, 1}}};
  const Mat3 rx{{{1, 0, 0}, {0, cx, -sx}, {0, sx, cx}}};
  const Mat3 ry{{{cy, 0, sy}, {0, 1, 0}, {-sy, 0, cy}}};
  return multiply(ry, multiply(rx, rz));
}

Affine local_affine(const Transform& t) {
  Affine a;
  a.m = rotation_matrix(t.rotation);
  for (int i = 0; i < 3; ++i) {
    a.m[i][0] *= t.scale.x;
    a.m[i][1] *= t.scale.y;
    a.m[i][2] *= t.scale.z;
  }
  a.t = t.position;
  return a;
}

bool valid_scale(const Vec3& s) { return s.finite() && s.x > 0.0 && s.y > 0.0 && s.z > 0.0; }

}  // namespace

std::string_view error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::EntityNotFound: return "EntityNotFound";
    case ErrorKind::DuplicateName: return "DuplicateName";
    case ErrorKind::CycleError: return "CycleError";
    case ErrorKind::HandlerError: return "HandlerError";
  }
  return "EntityNotFound";
}

const Entity* Scene::find(std::string_view name) const {
  auto it = by_name_.find(std::string(name));
  if (it == by_name_.end()) return nullptr;
  return &entities_.at(it->second);
}

const Entity& Scene::at(EntityId id) const { return entities_.at(id); }

const Entity& Scene::require(std::string_view name) const {
  const Entity* e = find(name);
  if (e == nullptr) {
    throw SceneError(ErrorKind::EntityNotFound, "entity '" + std::string(name) + "' not found");
  }
  return *e;
}

void Scene::apply(const Command& command) {
  std::visit(overloaded{
                 [this](const CreateCommand& c) { create(c); },
                 [this](const SetCommand& c) { set(c); },
                 [this](const DeleteCommand& c) { remove(c); },
                 [this](const AttachBehaviorCommand& c) { attach_behavior(c); },
                 [this](const AttachHandlerCommand& c) { attach_handler(c); },
             },
             command);
}

EntityId Scene::insert_entity(const std::string& name, Shape shape, std::optional<EntityId> parent) {
  if (!valid_entity_name(name)) throw std::invalid_argument("invalid entity name '" + name + "'");
  if (by_name_.count(name) != 0) {
    throw SceneError(ErrorKind::DuplicateName, "entity '" + name + "' already exists");
  }
  if (parent && entities_.count(*parent) == 0) throw std::invalid_argument("unknown parent id");
  const EntityId id = next_id_++;
  Entity e;
  e.id = id;
  e.name = name;
  e.shape = shape;
  e.parent = parent;
  entities_.emplace(id, std::move(e));
  by_name_.emplace(name, id);
  if (parent) {
    entities_.at(*parent).children.push_back(id);
  } else {
    roots_.push_back(id);
  }
  return id;
}

Entity& Scene::mutable_entity(EntityId id) { return entities_.at(id); }

void Scene::set_clock(double clock) {
  if (!std::isfinite(clock) || clock < 0.0) throw std::invalid_argument("clock must be finite and >= 0");
  clock_ = clock;
}

void Scene::reserve_ids(EntityId next_id) { next_id_ = std::max(next_id_, next_id); }

void Scene::create(const CreateCommand& cmd) {
  std::optional<EntityId> parent;
  if (cmd.parent) parent = require(*cmd.parent).id;
  if (!valid_entity_name(cmd.name)) throw std::invalid_argument("invalid entity name '" + cmd.name + "'");
  if (by_name_.count(cmd.name) != 0) {
    throw SceneError(ErrorKind::DuplicateName, "entity '" + cmd.name + "' already exists");
  }
  insert_entity(cmd.name, cmd.shape, parent);
}

void Scene::set(const SetCommand& cmd) {
  const Entity& current = require(cmd.target);
  Transform transform = current.transform;
  Color color = current.color;
  std::optional<std::optional<EntityId>> new_parent;

  for (const auto& a : cmd.assignments) {
    switch (a.property) {
      case Property::Position:
      case Property::Rotation:
      case Property::Scale: {
        const auto* v = std::get_if<Vec3>(&a.value);
        if (v == nullptr || !v->finite()) throw std::invalid_argument("vector property expects a finite vec3");
        if (a.property == Property::Position) transform.position = *v;
        if (a.property == Property::Rotation) transform.rotation = *v;
        if (a.property == Property::Scale) {
          if (!valid_scale(*v)) throw std::invalid_argument("scale components must be > 0");
          transform.scale = *v;
        }
        break;
      }
      case Property::Color: {
        const auto* c = std::get_if<Color>(&a.value);
        if (c == nullptr) throw std::invalid_argument("color expects #RRGGBB");
        color = *c;
        break;
      }
      case Property::Parent: {
        const auto* name = std::get_if<std::string>(&a.value);
        if (name == nullptr) throw std::invalid_argument("parent expects an entity name");
        if (*name == kNoneName) {
          new_parent = std::optional<EntityId>{};
        } else {
          const EntityId pid = require(*name).id;
          if (pid == current.id || is_ancestor(current.id, pid)) {
            throw SceneError(ErrorKind::CycleError,
                             "parenting '" + current.name + "' under '" + *name + "' would create a cycle");
          }
          new_parent = pid;
        }
        break;
      }
    }
  }

  const EntityId id = current.id;
  Entity& e = entities_.at(id);
  e.transform = transform;
  e.color = color;
  if (new_parent && *new_parent != e.parent) reparent(id, *new_parent);
}

void Scene::remove(const DeleteCommand& cmd) {
  const EntityId id = require(cmd.target).id;
  detach(id);
  std::vector<EntityId> stack{id};
  while (!stack.empty()) {
    const EntityId cur = stack.back();
    stack.pop_back();
    auto it = entities_.find(cur);
    for (EntityId child : it->second.children) stack.push_back(child);
    by_name_.erase(it->second.name);
    entities_.erase(it);
  }
}

void Scene::attach_behavior(const AttachBehaviorCommand& cmd) {
  const EntityId id = require(cmd.target).id;
  Behavior behavior = make_valid(cmd.behavior);
  entities_.at(id).behaviors.push_back(std::move(behavior));
}

void Scene::attach_handler(const AttachHandlerCommand& cmd) {
  const EntityId id = require(cmd.target).id;
  entities_.at(id).handlers.push_back(InteractionHandler{id, cmd.body});
}

bool Scene::is_ancestor(EntityId maybe_ancestor, EntityId id) const {
  std::optional<EntityId> cur = entities_.at(id).parent;
  while (cur) {
    if (*cur == maybe_ancestor) return true;
    cur = entities_.at(*cur).parent;
  }
  return false;
}

void Scene::detach(EntityId id) {
  Entity& e = entities_.at(id);
  auto& siblings = e.parent ? entities_.at(*e.parent).children : roots_;
  siblings.erase(std::remove(siblings.begin(), siblings.end(), id), siblings.end());
  e.parent.reset();
}

void Scene::reparent(EntityId child, std::optional<EntityId> parent) {
  detach(child);
  entities_.at(child).parent = parent;
  if (parent) {
    entities_.at(*parent).children.push_back(child);
  } else {
    roots_.push_back(child);
  }
}

namespace {

Affine world_affine(const Scene& scene, EntityId id) {
  const Entity& e = scene.at(id);
  const Affine local = local_affine(e.transform);
  if (!e.parent) return local;
  return compose(world_affine(scene, *e.parent), local);
}

}  // namespace

Vec3 Scene::world_position(EntityId id) const {
  const Entity& e = at(id);
  if (!e.parent) return e.transform.position;
  return world_affine(*this, *e.parent).apply(e.transform.position);
}

void Scene::set_world_position(EntityId id, const Vec3& world) {
  Entity& e = entities_.at(id);
  if (!e.parent) {
    e.transform.position = world;
    return;
  }
  e.transform.position = inverse(world_affine(*this, *e.parent)).apply(world);
}

void Scene::advance(double dt, std::vector<std::string>* warnings) {
  if (!std::isfinite(dt) || !(dt > 0.0)) throw std::invalid_argument("tick dt must be finite and > 0");
  clock_ += dt;
  auto warn = [warnings](std::string message) {
    if (warnings != nullptr) warnings->push_back(std::move(message));
  };

  for (auto& [id, entity] : entities_) {
    for (Behavior& behavior : entity.behaviors) {
      std::visit(overloaded{
                     [&](Spin& b) { entity.transform.rotation = entity.transform.rotation + b.axis * (b.speed * dt); },
                     [&](Oscillate& b) {
                       const double offset =
                           b.amplitude * std::sin(2.0 * std::numbers::pi * clock_ / b.period);
                       entity.transform.position =
                           entity.transform.position + b.axis * (offset - b.applied_offset);
                       b.applied_offset = offset;
                     },
                     [&](Orbit& b) {
                       const Entity* center = find(b.center);
                       if (center == nullptr) {
                         warn("orbit on '" + entity.name + "': center '" + b.center + "' not found, skipped");
                         return;
                       }
                       const Vec3 c = world_position(center->id);
                       const Vec3 p = world_position(id);
                       if (!b.angle) {
                         const double dx = p.x - c.x;
                         const double dz = p.z - c.z;
                         b.angle = (dx == 0.0 && dz == 0.0) ? 0.0 : std::atan2(dz, dx) * kRadToDeg;
                       }
                       *b.angle += b.speed * dt;
                       const double a = *b.angle * kDegToRad;
                       set_world_position(id, {c.x + b.radius * std::cos(a), p.y, c.z + b.radius * std::sin(a)});
                     },
                     [&](Follow& b) {
                       const Entity* target = find(b.target);
                       if (target == nullptr) {
                         warn("follow on '" + entity.name + "': target '" + b.target + "' not found, skipped");
                         return;
                       }
                       const Vec3 t = world_position(target->id);
                       const Vec3 p = world_position(id);
                       const Vec3 d = t - p;
                       const double distance = d.length();
                       if (distance == 0.0) return;
                       const double step = b.speed * dt;
                       set_world_position(id, step >= distance ? t : p + d * (step / distance));
                     },
                 },
                 behavior);
    }
  }
}

void Scene::validate() const {
  std::set<std::string> names;
  for (const auto& [id, e] : entities_) {
    if (e.id != id) throw std::logic_error("entity id mismatch");
    if (id >= next_id_) throw std::logic_error("entity id beyond id counter");
    if (!names.insert(e.name).second) throw std::logic_error("duplicate name " + e.name);
    auto it = by_name_.find(e.name);
    if (it == by_name_.end() || it->second != id) throw std::logic_error("name index out of sync");
    if (!valid_scale(e.transform.scale)) throw std::logic_error("non-positive scale on " + e.name);
    if (e.parent) {
      const auto& siblings = entities_.at(*e.parent).children;
      if (std::count(siblings.begin(), siblings.end(), id) != 1) throw std::logic_error("parent link broken");
    } else if (std::count(roots_.begin(), roots_.end(), id) != 1) {
      throw std::logic_error("root list broken");
    }
    for (EntityId child : e.children) {
      if (entities_.at(child).parent != id) throw std::logic_error("child link broken");
    }
    std::size_t depth = 0;
    for (auto cur = e.parent; cur; cur = entities_.at(*cur).parent) {
      if (++depth > entities_.size()) throw std::logic_error("parent cycle");
    }
  }
  if (by_name_.size() != entities_.size()) throw std::logic_error("name index size mismatch");
  for (EntityId r : roots_) {
    if (entities_.at(r).parent) throw std::logic_error("root has a parent");
  }
}

Scene apply_command(Scene scene, const Command& command) {
  scene.apply(command);
  return scene;
}

Scene tick(Scene scene, double dt, std::vector<std::string>* warnings) {
  scene.advance(dt, warnings);
  return scene;
}

namespace {

std::string substitute_self(const std::string& name, const std::string& owner) {
  return name == kSelfName ? owner : name;
}

Command bind_self(const HandlerStatement& statement, const std::string& owner) {
  return std::visit(overloaded{
                        [&](CreateCommand c) -> Command {
                          if (c.parent) c.parent = substitute_self(*c.parent, owner);
                          return c;
                        },
                        [&](SetCommand c) -> Command {
                          c.target = substitute_self(c.target, owner);
                          for (auto& a : c.assignments) {
                            if (auto* n = std::get_if<std::string>(&a.value)) *n = substitute_self(*n, owner);
                          }
                          return c;
                        },
                        [&](DeleteCommand c) -> Command {
                          c.target = substitute_self(c.target, owner);
                          return c;
                        },
                    },
                    statement);
}

}  // namespace

InteractionOutcome interact(const Scene& scene, std::string_view name) {
  const Entity& entity = scene.require(name);
  const EntityId owner_id = entity.id;
  const std::string owner = entity.name;
  const std::vector<InteractionHandler> handlers = entity.handlers;

  InteractionOutcome outcome{scene, 0, {}};
  for (std::size_t i = 0; i < handlers.size(); ++i) {
    Scene trial = outcome.scene;
    std::size_t j = 0;
    try {
      if (trial.entities().count(owner_id) == 0) {
        throw SceneError(ErrorKind::EntityNotFound, "handler owner '" + owner + "' no longer exists");
      }
      for (; j < handlers[i].body.size(); ++j) trial.apply(bind_self(handlers[i].body[j], owner));
      outcome.scene = std::move(trial);
    } catch (const SceneError& e) {
      outcome.failures.push_back({i, j, e.kind(), "handler " + std::to_string(i) + ": " + e.what()});
    }
    ++outcome.handlers_run;
  }
  return outcome;
}

}  // namespace sceneforge::scene
