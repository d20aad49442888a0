#include "sceneforge/persist/generation_store.hpp"
#include "sceneforge/persist/scene_io.hpp"
#include "sceneforge/scene/hierarchy.hpp"
#include "support/scene_gen.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <filesystem>
#include <random>

namespace ps = sceneforge::persist;
namespace sc = sceneforge::script;
namespace sf = sceneforge::scene;
namespace fs = std::filesystem;

namespace {

const char* kCarScript =
    "create car_body shape=cube\n"
    "set car_body scale=(2, 0.6, 1) color=#C0392B\n"
    "repeat w 1..4 {\n"
    "  create car_wheel$w shape=cylinder parent=car_body\n"
    "  set car_wheel$w scale=(0.3, 0.1, 0.3) rotation=(90, 0, 0)\n"
    "}\n"
    "set car_wheel1 position=(0.7, -0.5, 0.5)\n"
    "set car_wheel2 position=(-0.7, -0.5, 0.5)\n"
    "set car_wheel3 position=(0.7, -0.5, -0.5)\n"
    "set car_wheel4 position=(-0.7, -0.5, -0.5)\n";

class TempDir {
 public:
  explicit TempDir(const std::string& name) : path_(fs::temp_directory_path() / name) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  [[nodiscard]] std::string str() const { return path_.string(); }

 private:
  fs::path path_;
};

sc::ScriptSource source(const std::string& text) { return {"", text, sc::Origin::Builder}; }

}  // namespace

TEST(GenerationStore, SaveAndListWithSummary) {
  TempDir dir("sceneforge_store_list");
  ps::GenerationStore store(dir.str(), [] { return std::string("2024-01-01T00:00:00Z"); });
  const auto id = store.save(source(kCarScript), "A red car with four wheels.", "demo");
  EXPECT_EQ(id, "demo-0001");
  const auto all = store.list();
  ASSERT_EQ(all.size(), 1u);
  EXPECT_EQ(all[0].summary, "A red car with four wheels.");
  EXPECT_EQ(all[0].origin_session, "demo");
  EXPECT_EQ(all[0].created_at, "2024-01-01T00:00:00Z");
  EXPECT_EQ(all[0].source.text, kCarScript);
  EXPECT_EQ(all[0].source.origin, sc::Origin::Saved);
  EXPECT_TRUE(fs::exists(fs::path(dir.str()) / "demo" / "demo-0001.scenescript"));
  EXPECT_EQ(store.save(source("create x shape=cube"), "x", "demo"), "demo-0002");
}

TEST(GenerationStore, RejectsNonCompilingSource) {
  TempDir dir("sceneforge_store_reject");
  ps::GenerationStore store(dir.str());
  try {
    store.save(source("set car scale=(2,2,2"), "broken", "demo");
    FAIL() << "expected rejection";
  } catch (const ps::GenerationRejected& e) {
    ASSERT_FALSE(e.errors().empty());
    EXPECT_EQ(e.errors()[0].phase, sc::Phase::Parse);
  }
  EXPECT_TRUE(store.list().empty());
  EXPECT_THROW(store.save(source("create a shape=cube"), "bad session", "../evil"), std::invalid_argument);
}

TEST(GenerationStore, SurvivesRestart) {
  TempDir dir("sceneforge_store_restart");
  std::string id;
  {
    ps::GenerationStore store(dir.str());
    id = store.save(source(kCarScript), "A car.", "s1");
  }
  ps::GenerationStore reopened(dir.str());
  const auto all = reopened.list();
  ASSERT_EQ(all.size(), 1u);
  EXPECT_EQ(all[0].id, id);
  EXPECT_EQ(reopened.get(id).summary, "A car.");
}

TEST(GenerationStore, ReloadIntoEmptyAndCollidingScenes) {
  TempDir dir("sceneforge_store_reload");
  ps::GenerationStore store(dir.str());
  const auto id = store.save(source(kCarScript), "A car.", "s1");

  const auto start = std::chrono::steady_clock::now();
  auto fresh = store.reload(id, sf::Scene{});
  EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(10));
  ASSERT_EQ(fresh.status, sc::Status::Success);
  EXPECT_NE(fresh.scene_after.find("car_body"), nullptr);
  EXPECT_EQ(fresh.scene_after.size(), 5u);

  auto occupied = sc::compile_and_run("create car_body shape=sphere", sf::Scene{}).scene_after;
  auto collide = store.reload(id, occupied);
  ASSERT_EQ(collide.status, sc::Status::RuntimeFailed);
  EXPECT_EQ(std::get<sc::RuntimeError>(collide.errors[0]).kind, sf::ErrorKind::DuplicateName);
  EXPECT_EQ(sf::serialize_hierarchy(collide.scene_after), sf::serialize_hierarchy(occupied));

  EXPECT_THROW(store.reload("s1-0099", sf::Scene{}), ps::UnknownId);
  EXPECT_THROW(store.get("nonsense"), ps::UnknownId);
}

TEST(SceneIo, EmptyRoundTrip) {
  const auto s = ps::import_scene_text(ps::export_scene_text(sf::Scene{}));
  EXPECT_TRUE(s.empty());
  EXPECT_EQ(s.next_id(), 1u);
}

TEST(SceneIo, RandomFiftyEntityRoundTrip) {
  std::mt19937_64 rng(50);
  for (int trial = 0; trial < 20; ++trial) {
    auto s = sceneforge::testing::random_scene(rng, {.min_entities = 50, .max_entities = 50});
    s = sf::tick(s, 0.37);
    const auto back = ps::import_scene_text(ps::export_scene_text(s));
    EXPECT_EQ(sf::serialize_hierarchy(back, sf::NumberFormat::Exact), sf::serialize_hierarchy(s, sf::NumberFormat::Exact));
    EXPECT_EQ(sf::scene_hash(back), sf::scene_hash(s));
    EXPECT_EQ(back.clock(), s.clock());
    back.validate();
  }
}

TEST(SceneIo, HandlersSurviveRoundTripAndStillRun) {
  auto s = sc::compile_and_run("create lamp shape=sphere\non_interact lamp { set self color=#FFFF00; create glow shape=sphere parent=self }",
                               sf::Scene{})
               .scene_after;
  const auto back = ps::import_scene_text(ps::export_scene_text(s));
  auto out = sf::interact(back, "lamp");
  ASSERT_TRUE(out.ok());
  EXPECT_NE(out.scene.find("glow"), nullptr);
}

TEST(SceneIo, VersionMismatch) {
  EXPECT_THROW(ps::import_scene_text(R"({"scene_format": 2, "entities": []})"), ps::VersionMismatch);
}

TEST(SceneIo, MalformedFilesReportLines) {
  try {
    ps::import_scene_text("{\n  \"scene_format\": 1,\n  \"entities\": [\n    {oops}\n  ]\n}\n");
    FAIL();
  } catch (const ps::SceneFileError& e) {
    EXPECT_EQ(e.line(), 4);
  }
  auto s = sc::compile_and_run("create a shape=cube\ncreate b shape=cube parent=a", sf::Scene{}).scene_after;
  std::string text = ps::export_scene_text(s);
  text.replace(text.rfind("\"cube\""), 6, "\"blob\"");  // b is serialized after a
  try {
    ps::import_scene_text(text);
    FAIL();
  } catch (const ps::SceneFileError& e) {
    EXPECT_GT(e.line(), 1);
    EXPECT_NE(std::string(e.what()).find("entity 'b'"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("unknown shape"), std::string::npos);
  }
}

TEST(SceneIo, CompactHierarchyParsesWithinRoundingTolerance) {
  std::mt19937_64 rng(8);
  auto s = sceneforge::testing::random_scene(rng, {.min_entities = 10, .max_entities = 10});
  const auto back = ps::scene_from_hierarchy(sf::hierarchy_json(s));
  ASSERT_EQ(back.size(), s.size());
  for (const auto& [id, e] : s.entities()) {
    const auto& b = back.require(e.name);
    EXPECT_NEAR(b.transform.position.x, e.transform.position.x, 5e-7);
    EXPECT_NEAR(b.transform.rotation.y, e.transform.rotation.y, 5e-7);
    EXPECT_NEAR(b.transform.scale.z, e.transform.scale.z, 5e-7);
  }
}
