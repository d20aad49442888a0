#include "sceneforge/scene/hierarchy.hpp"
#include "sceneforge/scene/scene.hpp"
#include "support/scene_gen.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

namespace sf = sceneforge::scene;
using sf::Scene;

namespace {

sf::CreateCommand create(const std::string& name, sf::Shape shape = sf::Shape::Cube,
                         std::optional<std::string> parent = std::nullopt) {
  return {name, shape, std::move(parent)};
}

sf::SetCommand set(const std::string& target, sf::Property p, sf::PropertyValue v) {
  return {target, {{p, std::move(v)}}};
}

sf::ErrorKind kind_of(const Scene& s, const sf::Command& c) {
  try {
    sf::apply_command(s, c);
  } catch (const sf::SceneError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "command did not fail";
  return sf::ErrorKind::HandlerError;
}

}  // namespace

TEST(SceneRuntime, CreateOnEmptySceneUsesDefaults) {
  Scene s = sf::apply_command(Scene{}, create("box"));
  ASSERT_EQ(s.size(), 1u);
  const auto& box = s.require("box");
  EXPECT_EQ(s.roots(), std::vector<sf::EntityId>{box.id});
  EXPECT_EQ(box.transform.position, (sf::Vec3{0, 0, 0}));
  EXPECT_EQ(box.transform.rotation, (sf::Vec3{0, 0, 0}));
  EXPECT_EQ(box.transform.scale, (sf::Vec3{1, 1, 1}));
  EXPECT_EQ(box.color.to_hex(), "#FFFFFF");
}

TEST(SceneRuntime, SetScaleTwiceAsBig) {
  Scene s = sf::apply_command(Scene{}, create("box"));
  s = sf::apply_command(s, set("box", sf::Property::Scale, sf::Vec3{2, 2, 2}));
  EXPECT_EQ(s.require("box").transform.scale, (sf::Vec3{2, 2, 2}));
}

TEST(SceneRuntime, RuntimeErrorKinds) {
  EXPECT_EQ(kind_of(Scene{}, sf::DeleteCommand{"ghost"}), sf::ErrorKind::EntityNotFound);
  Scene s = sf::apply_command(Scene{}, create("a"));
  EXPECT_EQ(kind_of(s, create("a")), sf::ErrorKind::DuplicateName);
  s = sf::apply_command(s, create("b", sf::Shape::Sphere, "a"));
  EXPECT_EQ(kind_of(s, set("a", sf::Property::Parent, std::string("b"))), sf::ErrorKind::CycleError);
  EXPECT_EQ(kind_of(s, set("a", sf::Property::Parent, std::string("a"))), sf::ErrorKind::CycleError);
  EXPECT_EQ(kind_of(s, create("c", sf::Shape::Cube, "nowhere")), sf::ErrorKind::EntityNotFound);
}

TEST(SceneRuntime, FailedCommandLeavesSceneUntouched) {
  Scene s = sf::apply_command(Scene{}, create("a"));
  const auto before = sf::serialize_hierarchy(s, sf::NumberFormat::Exact);
  sf::SetCommand multi{"a",
                       {{sf::Property::Position, sf::Vec3{5, 5, 5}},
                        {sf::Property::Parent, std::string("missing")}}};
  EXPECT_THROW(s.apply(multi), sf::SceneError);
  EXPECT_EQ(sf::serialize_hierarchy(s, sf::NumberFormat::Exact), before);
}

TEST(SceneRuntime, DeleteRemovesSubtreeAndIdsAreNotReused) {
  Scene s;
  s.apply(create("table"));
  s.apply(create("apple", sf::Shape::Sphere, "table"));
  s.apply(create("lamp"));
  const auto apple_id = s.require("apple").id;
  s.apply(sf::DeleteCommand{"table"});
  EXPECT_EQ(s.size(), 1u);
  EXPECT_EQ(s.find("apple"), nullptr);
  s.apply(create("apple"));
  EXPECT_GT(s.require("apple").id, apple_id);
  s.validate();
}

TEST(SceneRuntime, ParentNoneDetachesToRoots) {
  Scene s;
  s.apply(create("table"));
  s.apply(create("apple", sf::Shape::Sphere, "table"));
  s.apply(set("table", sf::Property::Position, sf::Vec3{1, 0, 0}));
  s.apply(set("apple", sf::Property::Parent, std::string("none")));
  EXPECT_FALSE(s.require("apple").parent.has_value());
  EXPECT_EQ(s.roots().size(), 2u);
  s.validate();
}

TEST(SceneTick, SpinUnitRate) {
  Scene s;
  s.apply(create("top"));
  s.apply(sf::AttachBehaviorCommand{"top", sf::Spin{{0, 1, 0}, 90}});
  s = sf::tick(s, 1.0);
  EXPECT_DOUBLE_EQ(s.require("top").transform.rotation.y, 90.0);
  EXPECT_DOUBLE_EQ(s.clock(), 1.0);
}

TEST(SceneTick, OscillateQuarterPeriod) {
  Scene s;
  s.apply(create("bob"));
  sf::Oscillate osc;
  osc.amplitude = 1.0;
  osc.period = 4.0;
  s.apply(sf::AttachBehaviorCommand{"bob", sf::make_valid(osc)});
  s = sf::tick(s, 1.0);
  EXPECT_NEAR(s.require("bob").transform.position.y, 1.0, 1e-12);
  s = sf::tick(s, 1.0);
  EXPECT_NEAR(s.require("bob").transform.position.y, 0.0, 1e-12);
}

TEST(SceneTick, FollowClampsAtTarget) {
  Scene s;
  s.apply(create("dog"));
  s.apply(create("ball"));
  s.apply(set("ball", sf::Property::Position, sf::Vec3{1, 0, 0}));
  s.apply(sf::AttachBehaviorCommand{"dog", sf::Follow{"ball", 2.0}});
  s = sf::tick(s, 1.0);
  EXPECT_EQ(s.require("dog").transform.position, (sf::Vec3{1, 0, 0}));
}

TEST(SceneTick, FollowWorksThroughParentTransforms) {
  Scene s;
  s.apply(create("cart"));
  s.apply(set("cart", sf::Property::Scale, sf::Vec3{2, 2, 2}));
  s.apply(set("cart", sf::Property::Position, sf::Vec3{10, 0, 0}));
  s.apply(create("rider", sf::Shape::Sphere, "cart"));
  s.apply(create("goal"));
  s.apply(set("goal", sf::Property::Position, sf::Vec3{10, 3, 0}));
  s.apply(sf::AttachBehaviorCommand{"rider", sf::Follow{"goal", 1.0}});
  s = sf::tick(s, 1.0);
  const auto world = s.world_position(s.require("rider").id);
  EXPECT_NEAR(world.x, 10.0, 1e-12);
  EXPECT_NEAR(world.y, 1.0, 1e-12);
}

TEST(SceneTick, OrbitKeepsRadius) {
  Scene s;
  s.apply(create("sun"));
  s.apply(create("planet", sf::Shape::Sphere));
  s.apply(set("planet", sf::Property::Position, sf::Vec3{3, 0.5, 0}));
  sf::Orbit orbit;
  orbit.center = "sun";
  orbit.radius = 3.0;
  orbit.speed = 90.0;
  s.apply(sf::AttachBehaviorCommand{"planet", orbit});
  s = sf::tick(s, 1.0);
  const auto p = s.require("planet").transform.position;
  EXPECT_NEAR(std::hypot(p.x, p.z), 3.0, 1e-12);
  EXPECT_NEAR(p.y, 0.5, 1e-12);
  EXPECT_NEAR(p.x, 0.0, 1e-12);
}

TEST(SceneTick, DanglingReferenceWarnsAndSkips) {
  Scene s;
  s.apply(create("dog"));
  s.apply(create("ball"));
  s.apply(sf::AttachBehaviorCommand{"dog", sf::Follow{"ball", 2.0}});
  s.apply(sf::DeleteCommand{"ball"});
  std::vector<std::string> warnings;
  s = sf::tick(s, 0.5, &warnings);
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("ball"), std::string::npos);
  EXPECT_EQ(s.require("dog").transform.position, (sf::Vec3{0, 0, 0}));
}

TEST(SceneInteract, NoHandlersIsNoOp) {
  Scene s;
  s.apply(create("box"));
  auto out = sf::interact(s, "box");
  EXPECT_TRUE(out.ok());
  EXPECT_EQ(out.handlers_run, 0u);
  EXPECT_EQ(sf::serialize_hierarchy(out.scene), sf::serialize_hierarchy(s));
}

TEST(SceneInteract, SelfColorHandler) {
  Scene s;
  s.apply(create("car"));
  s.apply(sf::AttachHandlerCommand{"car", {set("self", sf::Property::Color, sf::Color{255, 0, 0})}});
  auto out = sf::interact(s, "car");
  ASSERT_TRUE(out.ok());
  EXPECT_EQ(out.scene.require("car").color, (sf::Color{255, 0, 0}));
}

TEST(SceneInteract, FailingHandlerRollsBackButLaterHandlersRun) {
  Scene s;
  s.apply(create("button"));
  s.apply(create("lamp"));
  s.apply(sf::AttachHandlerCommand{
      "button",
      {set("self", sf::Property::Color, sf::Color{0, 0, 255}), sf::DeleteCommand{"ghost"}}});
  s.apply(sf::AttachHandlerCommand{"button", {set("lamp", sf::Property::Color, sf::Color{1, 2, 3})}});
  auto out = sf::interact(s, "button");
  ASSERT_EQ(out.failures.size(), 1u);
  EXPECT_EQ(out.failures[0].handler_index, 0u);
  EXPECT_EQ(out.failures[0].statement_index, 1u);
  EXPECT_EQ(out.failures[0].cause, sf::ErrorKind::EntityNotFound);
  EXPECT_EQ(out.scene.require("button").color, (sf::Color{255, 255, 255}));
  EXPECT_EQ(out.scene.require("lamp").color, (sf::Color{1, 2, 3}));
  EXPECT_THROW(sf::interact(s, "nobody"), sf::SceneError);
}

TEST(Hierarchy, EmptyScene) { EXPECT_EQ(sf::serialize_hierarchy(Scene{}), "[]"); }

TEST(Hierarchy, DefaultCubeFields) {
  auto doc = sf::hierarchy_json(sf::apply_command(Scene{}, create("box")));
  ASSERT_EQ(doc.size(), 1u);
  EXPECT_EQ(doc[0]["name"], "box");
  EXPECT_EQ(doc[0]["position"], nlohmann::ordered_json::parse("[0,0,0]"));
  EXPECT_EQ(doc[0]["scale"], nlohmann::ordered_json::parse("[1,1,1]"));
  std::vector<std::string> keys;
  for (auto it = doc[0].begin(); it != doc[0].end(); ++it) keys.push_back(it.key());
  EXPECT_EQ(keys, (std::vector<std::string>{"name", "shape", "position", "rotation", "scale", "color",
                                            "behaviors", "handlers", "children"}));
}

TEST(Hierarchy, ChildNestsUnderParent) {
  Scene s;
  s.apply(create("table"));
  s.apply(create("apple", sf::Shape::Sphere, "table"));
  auto doc = sf::hierarchy_json(s);
  ASSERT_EQ(doc.size(), 1u);
  EXPECT_EQ(doc[0]["name"], "table");
  ASSERT_EQ(doc[0]["children"].size(), 1u);
  EXPECT_EQ(doc[0]["children"][0]["name"], "apple");
}

TEST(Hierarchy, CompactFormatRoundsToSixDecimals) {
  Scene s;
  s.apply(create("box"));
  s.apply(set("box", sf::Property::Position, sf::Vec3{1.0 / 3.0, 2.5, -0.0000004}));
  EXPECT_EQ(sf::hierarchy_json(s)[0]["position"].dump(), "[0.333333,2.5,0]");
  EXPECT_EQ(sf::hierarchy_json(s, sf::NumberFormat::Exact)[0]["position"][0].get<double>(), 1.0 / 3.0);
}

TEST(Hierarchy, HandlersRenderAsOneLine) {
  Scene s;
  s.apply(create("car"));
  s.apply(sf::AttachHandlerCommand{
      "car", {set("self", sf::Property::Color, sf::Color{255, 0, 0}), sf::DeleteCommand{"wheel"}}});
  auto doc = sf::hierarchy_json(s);
  ASSERT_EQ(doc[0]["handlers"].size(), 1u);
  EXPECT_EQ(doc[0]["handlers"][0], "set self color=#FF0000; delete wheel");
}

TEST(Hierarchy, HashCoversClock) {
  Scene s;
  s.apply(create("box"));
  const auto h0 = sf::scene_hash(s);
  EXPECT_EQ(h0.size(), 64u);
  EXPECT_EQ(sf::scene_hash(s), h0);
  EXPECT_NE(sf::scene_hash(sf::tick(s, 0.1)), h0);
}

using sceneforge::testing::random_scene;

TEST(SceneProperties, TickDeterminism) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dt(0.001, 0.2);
  for (int trial = 0; trial < 50; ++trial) {
    const Scene base = random_scene(rng);
    std::vector<double> dts(40);
    for (auto& d : dts) d = dt(rng);
    Scene a = base, b = base;
    for (double d : dts) a = sf::tick(a, d);
    for (double d : dts) b = sf::tick(b, d);
    EXPECT_EQ(sf::serialize_hierarchy(a, sf::NumberFormat::Exact), sf::serialize_hierarchy(b, sf::NumberFormat::Exact));
    EXPECT_EQ(sf::scene_hash(a), sf::scene_hash(b));
  }
}

TEST(SceneProperties, SpinTickLinearity) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> dt(0.001, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Scene base = random_scene(rng, {.spin_only = true});
    const double a = dt(rng), b = dt(rng);
    const Scene split = sf::tick(sf::tick(base, a), b);
    const Scene joined = sf::tick(base, a + b);
    for (const auto& [id, e] : split.entities()) {
      const auto& r1 = e.transform.rotation;
      const auto& r2 = joined.at(id).transform.rotation;
      EXPECT_NEAR(r1.x, r2.x, 1e-9);
      EXPECT_NEAR(r1.y, r2.y, 1e-9);
      EXPECT_NEAR(r1.z, r2.z, 1e-9);
    }
  }
}

TEST(SceneProperties, NamesStayUniqueAndParentsAcyclic) {
  std::mt19937_64 rng(3);
  Scene s;
  int failures = 0;
  for (int step = 0; step < 3000; ++step) {
    const std::string a = "n" + std::to_string(rng() % 20);
    const std::string b = "n" + std::to_string(rng() % 20);
    sf::Command cmd;
    switch (rng() % 4) {
      case 0: cmd = create(a, sf::Shape::Cube, rng() % 2 ? std::optional<std::string>(b) : std::nullopt); break;
      case 1: cmd = set(a, sf::Property::Parent, b); break;
      case 2: cmd = set(a, sf::Property::Parent, std::string("none")); break;
      default: cmd = sf::DeleteCommand{a};
    }
    try {
      s.apply(cmd);
    } catch (const sf::SceneError&) {
      ++failures;
    }
    s.validate();
    std::set<std::string> names;
    for (const auto& [id, e] : s.entities()) EXPECT_TRUE(names.insert(e.name).second);
    for (const auto& [id, e] : s.entities()) {
      std::size_t hops = 0;
      for (auto p = e.parent; p; p = s.at(*p).parent) ASSERT_LE(++hops, s.size());
    }
  }
  EXPECT_GT(failures, 0);
}
