#include "sceneforge/scene/behavior.hpp"

#include <cmath>
#include <stdexcept>

namespace sceneforge::scene {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_finite(double value, const char* what) {
  if (!std::isfinite(value)) throw std::invalid_argument(std::string(what) + " must be finite");
}

}  // namespace

std::string_view behavior_kind(const Behavior& behavior) {
  return std::visit(overloaded{
                        [](const Spin&) { return std::string_view("spin"); },
                        [](const Orbit&) { return std::string_view("orbit"); },
                        [](const Oscillate&) { return std::string_view("oscillate"); },
                        [](const Follow&) { return std::string_view("follow"); },
                    },
                    behavior);
}

Behavior make_valid(Behavior behavior) {
  std::visit(overloaded{
                 [](Spin& b) {
                   b.axis = b.axis.normalized();
                   require_finite(b.speed, "spin speed");
                 },
                 [](Orbit& b) {
                   require_finite(b.radius, "orbit radius");
                   require_finite(b.speed, "orbit speed");
                   if (b.radius < 0.0) throw std::invalid_argument("orbit radius must be >= 0");
                 },
                 [](Oscillate& b) {
                   b.axis = b.axis.normalized();
                   require_finite(b.amplitude, "oscillate amplitude");
                   require_finite(b.period, "oscillate period");
                   if (!(b.period > 0.0)) throw std::invalid_argument("oscillate period must be > 0");
                 },
                 [](Follow& b) {
                   require_finite(b.speed, "follow speed");
                   if (b.speed < 0.0) throw std::invalid_argument("follow speed must be >= 0");
                 },
             },
             behavior);
  return behavior;
}

}  // namespace sceneforge::scene
