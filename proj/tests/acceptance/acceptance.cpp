// One PASS/FAIL line per primary acceptance criterion. Exit status is the
// number of failures; a skipped optional run prints SKIP and does not fail.

#include "sceneforge/eval/eval.hpp"
#include "sceneforge/persist/scene_io.hpp"
#include "sceneforge/pipeline/config.hpp"
#include "sceneforge/pipeline/orchestrator.hpp"
#include "sceneforge/retrieval/retrieval.hpp"
#include "sceneforge/scene/hierarchy.hpp"
#include "sceneforge/script/script.hpp"
#include "sceneforge/util/text.hpp"
#include "support/scene_gen.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

namespace sf = sceneforge;
namespace ev = sceneforge::eval;
namespace pl = sceneforge::pipeline;
namespace llm = sceneforge::llm;
namespace rt = sceneforge::retrieval;
namespace sc = sceneforge::script;
namespace fs = std::filesystem;

namespace {

// Final scene of the kitchen replay; re-pin only when the fixture is re-recorded.
constexpr std::string_view kKitchenHash = "13577a6837d686a1e65aab171694b376ab7581e82cb54b0d691bf23ff10d67e4";

enum class Verdict { Pass, Fail, Skip };

struct Result {
  Verdict verdict = Verdict::Fail;
  std::string detail;
};

Result pass(std::string detail) { return {Verdict::Pass, std::move(detail)}; }
Result fail(std::string detail) { return {Verdict::Fail, std::move(detail)}; }

/// Collects the first few problems of a check.
class Problems {
 public:
  void add(std::string p) {
    if (count_++ < 5) list_ << (count_ > 1 ? "; " : "") << p;
  }
  [[nodiscard]] bool empty() const { return count_ == 0; }
  [[nodiscard]] Result result(std::string ok) const {
    if (empty()) return pass(std::move(ok));
    return fail(std::to_string(count_) + " problem(s): " + list_.str());
  }

 private:
  std::size_t count_ = 0;
  std::ostringstream list_;
};

std::string data(const std::string& rel) { return pl::data_dir() + "/" + rel; }
std::string test_data(const std::string& rel) { return std::string(SCENEFORGE_TEST_DATA_DIR) + "/" + rel; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt_double(double v) {
  std::ostringstream o;
  o.precision(12);
  o << v;
  return o.str();
}

// Numeric leaves within tol, everything else equal.
bool json_near(const nlohmann::json& a, const nlohmann::json& b, double tol) {
  if (a.is_number() && b.is_number()) return std::abs(a.get<double>() - b.get<double>()) <= tol;
  if (a.type() != b.type()) return false;
  if (a.is_array()) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (!json_near(a[i], b[i], tol)) return false;
    }
    return true;
  }
  if (a.is_object()) {
    if (a.size() != b.size()) return false;
    for (auto it = a.begin(); it != a.end(); ++it) {
      if (!b.contains(it.key()) || !json_near(it.value(), b.at(it.key()), tol)) return false;
    }
    return true;
  }
  return a == b;
}

nlohmann::json plain(const nlohmann::ordered_json& j) { return nlohmann::json::parse(j.dump()); }

// -- criteria --------------------------------------------------------------------

Result inspection_loop() {
  Problems problems;
  {
    const auto config = pl::load_config(data("configs/box_retry.json"));
    const auto dataset = ev::load_dataset(data("fixtures/datasets/box_retry.txt"));
    const auto scene = ev::load_initial_scene(dataset.initial_scene);
    auto replay = llm::make_provider(config.provider);
    llm::SpyProvider spy(*replay);
    pl::Orchestrator orch(spy, config);
    const pl::Instruction instruction{dataset.prompts[0][0], 1, 1};
    const auto summary = orch.analyze_scene(instruction.text, scene);
    const auto hint = orch.retrieve_skills(instruction);
    spy.clear();
    const auto g = orch.generate_code_with_inspection(instruction, summary, hint, scene);
    if (g.attempts.size() != 2) problems.add("box_retry: " + std::to_string(g.attempts.size()) + " attempts, want 2");
    if (!g.verified) problems.add("box_retry: not verified");
    if (!g.code || g.attempts.size() != 2 || !g.attempts[1].code || g.code->text != g.attempts[1].code->text) {
      problems.add("box_retry: returned code is not attempt 2");
    }
    if (spy.call_count("builder") != 2 || spy.call_count("inspector") != 2) {
      problems.add("box_retry: builder/inspector calls " + std::to_string(spy.call_count("builder")) + "/" +
                   std::to_string(spy.call_count("inspector")) + ", want 2/2");
    }
  }
  {
    const auto config = pl::load_config(data("configs/always_fail.json"));
    const auto dataset = ev::load_dataset(data("fixtures/datasets/always_fail.txt"));
    if (config.max_inspections != 3) problems.add("always_fail: T is not 3");
    auto replay = llm::make_provider(config.provider);
    llm::SpyProvider spy(*replay);
    pl::Orchestrator orch(spy, config);
    const sf::scene::Scene scene;
    const pl::Instruction instruction{dataset.prompts[0][0], 1, 1};
    const auto summary = orch.analyze_scene(instruction.text, scene);
    const auto hint = orch.retrieve_skills(instruction);
    spy.clear();
    const auto g = orch.generate_code_with_inspection(instruction, summary, hint, scene);
    if (g.verified) problems.add("always_fail: flagged verified");
    if (g.attempts.size() != 3) problems.add("always_fail: " + std::to_string(g.attempts.size()) + " attempts");
    if (spy.call_count("builder") != 3 || spy.call_count("inspector") != 3) {
      problems.add("always_fail: builder/inspector calls " + std::to_string(spy.call_count("builder")) + "/" +
                   std::to_string(spy.call_count("inspector")) + ", want 3/3");
    }
  }
  return problems.result("box_retry replay: attempt 2 returned after 2+2 calls; always-FAIL: 3+3 calls, unverified");
}

Result memory_protocol() {
  const auto config = pl::load_config(data("configs/memory5.json"));
  const auto dataset = ev::load_dataset(data("fixtures/datasets/memory5.txt"));
  auto replay = llm::make_provider(config.provider);
  llm::SpyProvider spy(*replay);
  pl::Orchestrator orch(spy, config);
  Problems problems;
  sf::scene::Scene scene;
  const auto& steps = dataset.prompts.at(0);
  if (steps.size() != 5) problems.add("memory5 has " + std::to_string(steps.size()) + " prompts");
  for (const auto& prompt : steps) {
    const auto r = orch.run_request({prompt, "memory5"}, scene);
    if (!r.all_succeeded()) problems.add("step failed: " + prompt);
    scene = r.scene;
  }
  std::size_t k = 0;
  std::size_t checked = 0;
  for (const auto& call : spy.calls()) {
    const auto n = pl::count_episodes(call.context.messages);
    ++checked;
    if (call.context.tag == "builder") {
      ++k;
      const std::size_t want = std::min<std::size_t>(1, k - 1);
      if (n != want) problems.add("builder call " + std::to_string(k) + " sees " + std::to_string(n) + " episodes");
    } else if (n != 0) {
      problems.add(call.context.tag + " call sees " + std::to_string(n) + " episodes");
    }
  }
  if (k != 5) problems.add(std::to_string(k) + " builder calls, want 5");
  return problems.result(std::to_string(checked) + " calls checked, 0 violations");
}

Result error_taxonomy() {
  const auto base = sc::compile_and_run(sf::util::read_file(test_data("golden/base.ss")), sf::scene::Scene{});
  if (!base.ok()) return fail("golden base scene does not build");
  const auto base_hash = sf::scene::scene_hash(base.scene_after);
  Problems problems;
  std::map<std::string, int> counts;
  int correct = 0;
  int total = 0;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(test_data("golden"))) {
    if (e.path().filename() != "base.ss" && e.path().extension() == ".ss") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    const auto text = sf::util::read_file(path.string());
    const auto first = text.substr(0, text.find('\n'));
    const std::string tag = "// expect: ";
    if (first.rfind(tag, 0) != 0) {
      problems.add(path.filename().string() + " has no expectation");
      continue;
    }
    const auto want = first.substr(tag.size());
    const auto out = sc::compile_and_run(text, base.scene_after);
    ++total;
    ++counts[want];
    if (std::string(sc::status_name(out.status)) == want) {
      ++correct;
    } else {
      problems.add(path.filename().string() + ": " + std::string(sc::status_name(out.status)) + ", want " + want);
    }
    if (!out.ok() && sf::scene::scene_hash(out.scene_after) != base_hash) {
      problems.add(path.filename().string() + ": failed run changed the scene");
    }
  }
  if (total != 30 || counts["Success"] != 10 || counts["CompileFailed"] != 10 || counts["RuntimeFailed"] != 10) {
    problems.add("corpus is not 10/10/10");
  }
  return problems.result(std::to_string(correct) + "/" + std::to_string(total) +
                         " classified; failed runs leave the scene hash unchanged");
}

Result retrieval_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto bundle = nlohmann::json::parse(sf::util::read_file(test_data("retrieval_oracle.json")));
  const auto dir = fs::temp_directory_path() / ("sceneforge-acceptance-" + std::to_string(::getpid()));
  fs::create_directories(dir);
  Problems problems;
  int matched = 0;
  for (const auto& c : bundle.at("cases")) {
    const auto catalog_path = dir / "catalog.json";
    const auto targets_path = dir / "targets.json";
    std::ofstream(catalog_path) << c.at("catalog").dump();
    std::ofstream(targets_path) << c.at("targets").dump();
    const auto catalog = rt::load_fixture_catalog(catalog_path.string());
    rt::FixtureProviders providers(catalog, rt::load_targets(targets_path.string()));
    rt::RetrievalOptions options;
    options.k = c.at("k").get<std::size_t>();
    const auto got = rt::retrieve(c.at("label").get<std::string>(), catalog.catalog, providers.providers(), options);
    const auto& want = c.at("expected");
    if (got.chosen.id == want.at("chosen") && got.language_top_k == want.at("top_k").get<std::vector<std::string>>()) {
      ++matched;
    } else {
      problems.add(c.at("name").get<std::string>() + ": chose " + got.chosen.id + ", oracle " +
                   want.at("chosen").get<std::string>());
    }
  }
  fs::remove_all(dir);

  // Frozen from tests/oracles/retrieval_oracle.py on the shipped clock catalog.
  const auto clocks = rt::load_fixture_catalog(data("catalogs/clocks/catalog.json"));
  rt::FixtureProviders clock_providers(clocks, rt::load_targets(data("catalogs/clocks/targets.json")));
  const auto clock = rt::retrieve("clock", clocks.catalog, clock_providers.providers());
  if (clock.chosen.id != "clock_01") problems.add("clock fixture chose " + clock.chosen.id + ", oracle clock_01");

  const double elapsed = seconds_since(t0);
  if (elapsed >= 5.0) problems.add("took " + fmt_double(elapsed) + " s");
  if (matched != 100) problems.add(std::to_string(matched) + "/100 random catalogs matched");
  return problems.result(std::to_string(matched) + "/100 random catalogs match the oracle; clock -> clock_01; " +
                         fmt_double(elapsed) + " s");
}

Result metrics() {
  Problems problems;
  ev::SuiteOptions options;
  options.stopwatch = [] { return 0.0; };
  options.wall_clock = [] { return std::string("2000-01-01T00:00:00Z"); };

  const auto seq = ev::run_suite(ev::load_dataset(data("fixtures/datasets/sequential3.txt")),
                                 pl::load_config(data("configs/sequential3.json")), options);
  const auto& m = seq.runs.at(0);
  if (std::abs(m.error_rate - 2.0 / 6.0) > 1e-12) problems.add("sequential error " + fmt_double(m.error_rate));
  if (!m.avg_completion || std::abs(*m.avg_completion - 5.0 / 9.0) > 1e-12) problems.add("avg_completion off");
  if (!m.pct_fulfilled || std::abs(*m.pct_fulfilled - 1.0 / 3.0) > 1e-12) problems.add("pct_fulfilled off");

  const auto single_data = ev::load_dataset(data("fixtures/datasets/single10.txt"));
  const auto single_config = pl::load_config(data("configs/single10.json"));
  const auto single = ev::run_suite(single_data, single_config, options);
  if (single.runs.at(0).error_rate != 0.30) problems.add("single error " + fmt_double(single.runs.at(0).error_rate));

  options.runs = 5;
  const auto five = ev::run_suite(single_data, single_config, options);
  if (five.run_count() != 5 || five.error_rate->sd != 0.0) problems.add("5-run sd " + fmt_double(five.error_rate->sd));
  return problems.result("sequential 2/6, 5/9, 1/3 within 1e-12; single 0.30 exactly; 5 runs sd 0");
}

Result round_trips() {
  namespace sn = sf::scene;
  Problems problems;
  std::mt19937_64 rng(1000);
  std::uniform_real_distribution<double> dt(0.0, 0.5);
  for (int i = 0; i < 1000; ++i) {
    auto s = sf::testing::random_scene(rng, {.min_entities = 1, .max_entities = 25});
    s = sn::tick(s, dt(rng));
    const auto doc = plain(sn::scene_document(s));
    const auto imported = sf::persist::import_scene_text(sf::persist::export_scene_text(s));
    if (!json_near(plain(sn::scene_document(imported)), doc, 1e-9)) problems.add("export/import differs, scene " + std::to_string(i));
    const auto tree = plain(sn::hierarchy_json(s, sn::NumberFormat::Exact));
    const auto parsed = sf::persist::scene_from_hierarchy(nlohmann::json::parse(sn::serialize_hierarchy(s, sn::NumberFormat::Exact)));
    if (!json_near(plain(sn::hierarchy_json(parsed, sn::NumberFormat::Exact)), tree, 1e-9)) {
      problems.add("serialize/parse differs, scene " + std::to_string(i));
    }
  }
  for (int i = 0; i < 10000; ++i) {
    const auto s = sf::testing::random_scene(rng, {.min_entities = 1, .max_entities = 6});
    const double d = dt(rng);
    if (sn::scene_hash(sn::tick(s, d)) != sn::scene_hash(sn::tick(s, d))) problems.add("tick fold " + std::to_string(i));
  }
  return problems.result("1000 scenes round-trip within 1e-9; 10000 tick folds hash-identical");
}

Result kitchen_replay() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto config = pl::load_config(data("configs/kitchen.json"));
  const auto dataset = ev::load_dataset(data("fixtures/datasets/kitchen.txt"));
  auto replay = llm::make_provider(config.provider);
  pl::Orchestrator orch(*replay, config);
  const auto r = orch.run_request({dataset.prompts.at(0).at(0), "kitchen"}, sf::scene::Scene{});
  const double elapsed = seconds_since(t0);
  const auto hash = sf::scene::scene_hash(r.scene);
  Problems problems;
  if (r.plan.size() < 2) problems.add("planner produced " + std::to_string(r.plan.size()) + " steps");
  if (!r.all_succeeded()) problems.add("a step failed");
  if (hash != kKitchenHash) problems.add("final hash " + hash);
  if (elapsed >= 30.0) problems.add("took " + fmt_double(elapsed) + " s");
  return problems.result(std::to_string(r.plan.size()) + " planned steps, " + std::to_string(r.scene.size()) +
                         " entities, hash " + hash.substr(0, 16) + ", " + fmt_double(elapsed) + " s");
}

Result reference_disclosure() {
  Problems problems;
  const auto ref = ev::load_reference_metrics();
  if (ref.value("label", "") != ev::kReferenceLabel) problems.add("reference label missing");
  auto find = [&](const char* table, const char* config) -> nlohmann::json {
    for (const auto& row : ref.at(table)) {
      if (row.at("config") == config) return row;
    }
    problems.add(std::string("no ") + table + " row for " + config);
    return nlohmann::json::object();
  };
  auto expect = [&](const nlohmann::json& row, const char* key, double want) {
    if (!row.contains(key) || std::abs(row.at(key).get<double>() - want) > 1e-9) {
      problems.add(std::string(key) + " is not " + fmt_double(want));
    }
  };
  const auto seq = find("sequential", "full LLMR");
  expect(seq, "error_rate", 0.245);
  expect(seq, "avg_completion", 0.824);
  expect(seq, "pct_fulfilled", 0.775);
  expect(find("single_empty", "full LLMR"), "time_mean", 90.98);
  expect(find("single_scene", "full LLMR"), "time_mean", 49.16);
  expect(find("sequential_time", "full LLMR"), "time_mean", 170.90);
  expect(find("single_empty", "full LLMR"), "error_mean", 0.141);

  const auto dataset = ev::parse_dataset("make a cube\n", "disclosure");
  const auto empty = ev::make_report(pl::preset("full LLMR"), dataset, {});
  const auto table = ev::render_report({empty}, ev::ReportFormat::HumanTable);
  if (table.find(ev::kReferenceLabel) == std::string::npos) problems.add("human report lacks the reference label");
  const auto machine = nlohmann::json::parse(ev::render_report({empty}, ev::ReportFormat::Machine));
  if (machine.at("reference").value("label", "") != ev::kReferenceLabel) problems.add("machine report lacks the label");
  return problems.result("reference values carried under \"" + std::string(ev::kReferenceLabel) + "\"");
}

Result live_smoke() {
  const char* endpoint = std::getenv("SCENEFORGE_LLM_ENDPOINT");
  if (endpoint == nullptr || *endpoint == '\0') {
    return {Verdict::Skip, "set SCENEFORGE_LLM_ENDPOINT (and the key variable named in data/configs/live.json) to run"};
  }
  auto config = pl::load_config(data("configs/live.json"));
  config.provider["endpoint"] = endpoint;
  if (const char* m = std::getenv("SCENEFORGE_LLM_MODEL"); m != nullptr && *m != '\0') config.params.model_id = m;
  auto dataset = ev::load_dataset(data("datasets/single_empty.txt"));
  dataset.prompts.resize(std::min<std::size_t>(10, dataset.size()));
  dataset.difficulty.resize(dataset.prompts.size());
  const auto report = ev::run_suite(dataset, config, {});
  const auto machine = nlohmann::json::parse(ev::render_report({report}, ev::ReportFormat::Machine));
  Problems problems;
  if (report.prompt_count != 10) problems.add("ran " + std::to_string(report.prompt_count) + " prompts");
  if (!(report.runs.at(0).error_rate < 1.0)) problems.add("error rate 1.0");
  if (!machine.at("reports").contains(report.fingerprint)) problems.add("malformed report");
  return problems.result("10 live prompts, error rate " + fmt_double(report.runs.at(0).error_rate));
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Result()>>> criteria = {
      {"inspection-loop", inspection_loop},
      {"memory-protocol", memory_protocol},
      {"error-taxonomy", error_taxonomy},
      {"retrieval-oracle", retrieval_oracle},
      {"metrics", metrics},
      {"round-trips", round_trips},
      {"kitchen-replay", kitchen_replay},
      {"reference-number-disclosure", reference_disclosure},
      {"reference-number-disclosure/live-smoke", live_smoke},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Result r;
    try {
      r = check();
    } catch (const std::exception& e) {
      r = fail(std::string("exception: ") + e.what());
    }
    const char* word = r.verdict == Verdict::Pass ? "PASS" : r.verdict == Verdict::Skip ? "SKIP" : "FAIL";
    failures += r.verdict == Verdict::Fail;
    std::cout << word << " " << name << ": " << r.detail << std::endl;
  }
  return failures;
}
