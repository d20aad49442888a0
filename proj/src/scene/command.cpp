#include "sceneforge/scene/command.hpp"

#include <array>
#include <charconv>
#include <cmath>

namespace sceneforge::scene {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string vec(const Vec3& v) {
  return "(" + format_number(v.x) + "," + format_number(v.y) + "," + format_number(v.z) + ")";
}

std::string value_text(const PropertyValue& value) {
  return std::visit(overloaded{
                        [](const Vec3& v) { return vec(v); },
                        [](const Color& c) { return c.to_hex(); },
                        [](const std::string& name) { return name; },
                    },
                    value);
}

std::string render(const CreateCommand& c) {
  std::string out = "create " + c.name + " shape=" + std::string(shape_name(c.shape));
  if (c.parent) out += " parent=" + *c.parent;
  return out;
}

std::string render(const SetCommand& c) {
  std::string out = "set " + c.target;
  for (const auto& a : c.assignments) {
    out += " ";
    out += property_name(a.property);
    out += "=" + value_text(a.value);
  }
  return out;
}

std::string render(const DeleteCommand& c) { return "delete " + c.target; }

std::string render(const AttachBehaviorCommand& c) {
  std::string out = "behavior " + c.target + " ";
  out += std::visit(overloaded{
                        [](const Spin& b) {
                          return "spin axis=" + vec(b.axis) + " speed=" + format_number(b.speed);
                        },
                        [](const Orbit& b) {
                          return "orbit center=" + b.center + " radius=" + format_number(b.radius) +
                                 " speed=" + format_number(b.speed);
                        },
                        [](const Oscillate& b) {
                          return "oscillate axis=" + vec(b.axis) + " amplitude=" +
                                 format_number(b.amplitude) + " period=" + format_number(b.period);
                        },
                        [](const Follow& b) {
                          return "follow target=" + b.target + " speed=" + format_number(b.speed);
                        },
                    },
                    c.behavior);
  return out;
}

std::string render(const AttachHandlerCommand& c) {
  if (c.body.empty()) return "on_interact " + c.target + " { }";
  return "on_interact " + c.target + " { " + to_script(c.body) + " }";
}

}  // namespace

std::string_view property_name(Property property) {
  switch (property) {
    case Property::Position: return "position";
    case Property::Rotation: return "rotation";
    case Property::Scale: return "scale";
    case Property::Color: return "color";
    case Property::Parent: return "parent";
  }
  return "position";
}

std::optional<Property> parse_property(std::string_view name) {
  for (Property p : {Property::Position, Property::Rotation, Property::Scale, Property::Color,
                     Property::Parent}) {
    if (property_name(p) == name) return p;
  }
  return std::nullopt;
}

std::string format_number(double value) {
  if (value == 0.0) return "0";  // folds -0
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) return "0";
  return std::string(buf.data(), ptr);
}

std::string to_script(const Command& command) {
  return std::visit([](const auto& c) { return render(c); }, command);
}

std::string to_script(const HandlerStatement& statement) {
  return std::visit([](const auto& c) { return render(c); }, statement);
}

std::string to_script(const std::vector<HandlerStatement>& body) {
  std::string out;
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (i != 0) out += "; ";
    out += to_script(body[i]);
  }
  return out;
}

}  // namespace sceneforge::scene
