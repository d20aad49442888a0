#pragma once

#include "sceneforge/scene/behavior.hpp"
#include "sceneforge/scene/types.hpp"

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace sceneforge::scene {

enum class Property { Position, Rotation, Scale, Color, Parent };

std::string_view property_name(Property property);
std::optional<Property> parse_property(std::string_view name);

/// Parent assignments carry a name; "none" detaches to the root list.
using PropertyValue = std::variant<Vec3, Color, std::string>;

struct Assignment {
  Property property = Property::Position;
  PropertyValue value;

  friend bool operator==(const Assignment&, const Assignment&) = default;
};

struct CreateCommand {
  std::string name;
  Shape shape = Shape::Cube;
  std::optional<std::string> parent;

  friend bool operator==(const CreateCommand&, const CreateCommand&) = default;
};

struct SetCommand {
  std::string target;
  std::vector<Assignment> assignments;

  friend bool operator==(const SetCommand&, const SetCommand&) = default;
};

struct DeleteCommand {
  std::string target;

  friend bool operator==(const DeleteCommand&, const DeleteCommand&) = default;
};

/// The statement subset allowed inside an interaction handler.
using HandlerStatement = std::variant<CreateCommand, SetCommand, DeleteCommand>;

struct AttachBehaviorCommand {
  std::string target;
  Behavior behavior;

  friend bool operator==(const AttachBehaviorCommand&, const AttachBehaviorCommand&) = default;
};

struct AttachHandlerCommand {
  std::string target;
  std::vector<HandlerStatement> body;

  friend bool operator==(const AttachHandlerCommand&, const AttachHandlerCommand&) = default;
};

using Command = std::variant<CreateCommand, SetCommand, DeleteCommand, AttachBehaviorCommand,
                             AttachHandlerCommand>;

/// Canonical single-line script rendering. Numbers use the shortest exact form,
/// so the text compiles back to an identical command.
std::string to_script(const Command& command);
std::string to_script(const HandlerStatement& statement);
/// Handler statements joined with "; ".
std::string to_script(const std::vector<HandlerStatement>& body);

std::string format_number(double value);

}  // namespace sceneforge::scene
