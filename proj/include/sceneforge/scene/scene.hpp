#pragma once

#include "sceneforge/scene/behavior.hpp"
#include "sceneforge/scene/command.hpp"
#include "sceneforge/scene/types.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace sceneforge::scene {

enum class ErrorKind { EntityNotFound, DuplicateName, CycleError, HandlerError };

std::string_view error_kind_name(ErrorKind kind);

class SceneError : public std::runtime_error {
 public:
  SceneError(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  [[nodiscard]] ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

struct InteractionHandler {
  EntityId owner = 0;
  std::vector<HandlerStatement> body;

  friend bool operator==(const InteractionHandler&, const InteractionHandler&) = default;
};

struct Entity {
  EntityId id = 0;
  std::string name;
  Shape shape = Shape::Cube;
  Transform transform;
  Color color;
  std::optional<EntityId> parent;
  std::vector<EntityId> children;
  std::vector<Behavior> behaviors;
  std::vector<InteractionHandler> handlers;
};

/// The world state: a forest of named entities plus a clock.
///
/// Scene is a plain value. Mutating members give the strong exception
/// guarantee: a command that throws SceneError leaves the scene untouched.
class Scene {
 public:
  Scene() = default;

  [[nodiscard]] const std::map<EntityId, Entity>& entities() const { return entities_; }
  [[nodiscard]] const std::vector<EntityId>& roots() const { return roots_; }
  [[nodiscard]] double clock() const { return clock_; }
  [[nodiscard]] EntityId next_id() const { return next_id_; }
  [[nodiscard]] std::size_t size() const { return entities_.size(); }
  [[nodiscard]] bool empty() const { return entities_.empty(); }

  [[nodiscard]] const Entity* find(std::string_view name) const;
  [[nodiscard]] const Entity& at(EntityId id) const;
  /// Throws SceneError(EntityNotFound).
  [[nodiscard]] const Entity& require(std::string_view name) const;

  void apply(const Command& command);

  /// World-space position of the entity origin.
  [[nodiscard]] Vec3 world_position(EntityId id) const;

  /// Advances the clock and every behavior. Dangling orbit/follow references
  /// are skipped and described in `warnings` when provided.
  void advance(double dt, std::vector<std::string>* warnings = nullptr);

  // Low-level construction used by importers. Validates names and parents.
  EntityId insert_entity(const std::string& name, Shape shape, std::optional<EntityId> parent);
  Entity& mutable_entity(EntityId id);
  void set_clock(double clock);
  void reserve_ids(EntityId next_id);

  /// Checks every structural invariant; throws std::logic_error when broken.
  void validate() const;

 private:
  void create(const CreateCommand& cmd);
  void set(const SetCommand& cmd);
  void remove(const DeleteCommand& cmd);
  void attach_behavior(const AttachBehaviorCommand& cmd);
  void attach_handler(const AttachHandlerCommand& cmd);
  void reparent(EntityId child, std::optional<EntityId> parent);
  [[nodiscard]] bool is_ancestor(EntityId maybe_ancestor, EntityId id) const;
  void detach(EntityId id);
  void set_world_position(EntityId id, const Vec3& world);

  std::map<EntityId, Entity> entities_;
  std::vector<EntityId> roots_;
  std::unordered_map<std::string, EntityId> by_name_;
  double clock_ = 0.0;
  EntityId next_id_ = 1;
};

Scene apply_command(Scene scene, const Command& command);

/// Pure tick: returns the advanced copy.
Scene tick(Scene scene, double dt, std::vector<std::string>* warnings = nullptr);

struct HandlerFailure {
  std::size_t handler_index = 0;
  std::size_t statement_index = 0;
  ErrorKind cause = ErrorKind::EntityNotFound;
  std::string message;
};

struct InteractionOutcome {
  Scene scene;
  std::size_t handlers_run = 0;
  std::vector<HandlerFailure> failures;

  [[nodiscard]] bool ok() const { return failures.empty(); }
};

/// Runs each handler of the entity in order. Each handler is all-or-nothing:
/// a failing handler is rolled back and reported, later handlers still run.
/// Throws SceneError(EntityNotFound) when `name` is absent.
InteractionOutcome interact(const Scene& scene, std::string_view name);

}  // namespace sceneforge::scene
