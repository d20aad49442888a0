#include "sceneforge/eval/eval.hpp"
#include "sceneforge/eval/fixtures.hpp"
#include "sceneforge/pipeline/config.hpp"
#include "sceneforge/util/text.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

namespace ev = sceneforge::eval;
namespace pl = sceneforge::pipeline;
namespace llm = sceneforge::llm;
namespace sc = sceneforge::script;

namespace {

std::string data(const std::string& rel) { return pl::data_dir() + "/" + rel; }

ev::SuiteOptions deterministic(std::size_t runs = 1) {
  ev::SuiteOptions o;
  o.runs = runs;
  o.stopwatch = [] { return 0.0; };
  o.wall_clock = [] { return std::string("2000-01-01T00:00:00Z"); };
  return o;
}

ev::StepRecord step(bool ok, double seconds = 1.0) {
  ev::StepRecord s;
  s.prompt = "p";
  s.seconds = seconds;
  s.attempts = 1;
  if (!ok) {
    s.status = sc::Status::CompileFailed;
    s.failure_tag = "compile_failed";
  }
  return s;
}

ev::RunRecord record(std::initializer_list<bool> outcomes, std::optional<int> difficulty = std::nullopt) {
  ev::RunRecord r;
  r.prompt = "p";
  r.config = "cfg";
  r.difficulty = difficulty;
  for (bool ok : outcomes) r.steps.push_back(step(ok));
  return r;
}

}  // namespace

// -- datasets ------------------------------------------------------------------

TEST(Dataset, SingleLineIsOnePrompt) {
  const auto d = ev::parse_dataset("create a sphere on top of the bathtub\n", "t");
  EXPECT_EQ(d.kind, ev::DatasetKind::Single);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d.prompts[0], std::vector<std::string>{"create a sphere on top of the bathtub"});
}

TEST(Dataset, SemicolonLineIsASequence) {
  const auto d = ev::parse_dataset(
      "create an empty room with walls; add a bed with a lamp next to it; add a window on the wall\n", "t");
  EXPECT_EQ(d.kind, ev::DatasetKind::Sequential);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d.prompts[0], (std::vector<std::string>{"create an empty room with walls",
                                                    "add a bed with a lamp next to it", "add a window on the wall"}));
}

TEST(Dataset, EmptyFileThrows) {
  EXPECT_THROW(ev::parse_dataset("", "t"), ev::EmptyDataset);
  EXPECT_THROW(ev::parse_dataset("# only a comment\n\n   \n", "t"), ev::EmptyDataset);
}

TEST(Dataset, DirectivesAndDifficulty) {
  const auto d = ev::parse_dataset("@kind single\n@scene scenes/x.ss\n\nmake a cube [difficulty: 4]\n  make a ball  \n", "t");
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d.prompts[0][0], "make a cube");
  EXPECT_EQ(d.difficulty[0], 4);
  EXPECT_EQ(d.prompts[1][0], "make a ball");
  EXPECT_FALSE(d.difficulty[1].has_value());
  EXPECT_EQ(d.initial_scene, "scenes/x.ss");
}

TEST(Dataset, MalformedLinesReportTheirLine) {
  try {
    ev::parse_dataset("@kind sequential\na; ; b\n", "t");
    FAIL();
  } catch (const ev::DatasetError& e) {
    EXPECT_EQ(e.line(), 2);
  }
  EXPECT_THROW(ev::parse_dataset("@kind neither\nx\n", "t"), ev::DatasetError);
  EXPECT_THROW(ev::parse_dataset("x [difficulty: 11]\n", "t"), ev::DatasetError);
}

TEST(Dataset, ShippedDatasetsLoad) {
  const auto empty = ev::load_dataset(data("datasets/single_empty.txt"));
  EXPECT_EQ(empty.kind, ev::DatasetKind::Single);
  EXPECT_EQ(empty.size(), 30u);
  const auto bath = ev::load_dataset(data("datasets/single_bathroom.txt"));
  const auto scene = ev::load_initial_scene(bath.initial_scene);
  EXPECT_GE(scene.size(), 30u);
  const auto seq = ev::load_dataset(data("datasets/sequential.txt"));
  EXPECT_EQ(seq.kind, ev::DatasetKind::Sequential);
  for (const auto& s : seq.prompts) EXPECT_GE(s.size(), 1u);
}

// -- buckets and statistics ------------------------------------------------------

TEST(Buckets, LevelsMapToFiveBands) {
  EXPECT_EQ(ev::bucket_of(1), ev::Bucket::Easy);
  EXPECT_EQ(ev::bucket_of(2), ev::Bucket::Easy);
  EXPECT_EQ(ev::bucket_of(3), ev::Bucket::SomewhatEasy);
  EXPECT_EQ(ev::bucket_of(6), ev::Bucket::Medium);
  EXPECT_EQ(ev::bucket_of(7), ev::Bucket::SomewhatHard);
  EXPECT_EQ(ev::bucket_of(10), ev::Bucket::Hard);
  EXPECT_EQ(ev::bucket_of(2.5), ev::Bucket::SomewhatEasy);  // half-up
  EXPECT_EQ(ev::bucket_of(0.2), ev::Bucket::Easy);
  EXPECT_EQ(ev::bucket_name(ev::Bucket::SomewhatHard), "Somewhat Hard");
}

TEST(Stats, SampleStandardDeviation) {
  const auto s = ev::summarize({7, 7, 8, 6, 9});
  EXPECT_DOUBLE_EQ(s.mean, 7.4);
  EXPECT_NEAR(s.sd, std::sqrt(1.3), 1e-12);
  EXPECT_EQ(ev::summarize({0.3, 0.3, 0.3}).sd, 0.0);
  EXPECT_EQ(ev::summarize({5}).sd, 0.0);
}

// -- metrics -------------------------------------------------------------------

TEST(Metrics, SequentialHandExample) {
  const auto m = ev::compute_metrics({record({true, true}), record({true, false, true}), record({false})},
                                     ev::DatasetKind::Sequential);
  EXPECT_NEAR(m.error_rate, 2.0 / 6.0, 1e-12);
  EXPECT_NEAR(*m.avg_completion, (1.0 + 2.0 / 3.0 + 0.0) / 3.0, 1e-12);
  EXPECT_NEAR(*m.pct_fulfilled, 1.0 / 3.0, 1e-12);
  EXPECT_EQ(m.failures, 2u);
  EXPECT_EQ(m.total, 6u);
}

TEST(Metrics, SequentialEdgeCases) {
  const auto all = ev::compute_metrics({record({true}), record({true, true})}, ev::DatasetKind::Sequential);
  EXPECT_EQ(all.error_rate, 0.0);
  EXPECT_EQ(*all.avg_completion, 1.0);
  EXPECT_EQ(*all.pct_fulfilled, 1.0);
  const auto none = ev::compute_metrics({record({false})}, ev::DatasetKind::Sequential);
  EXPECT_EQ(none.error_rate, 1.0);
  EXPECT_EQ(*none.avg_completion, 0.0);
  EXPECT_EQ(*none.pct_fulfilled, 0.0);
}

TEST(Metrics, SingleHasNoCompletion) {
  const auto m = ev::compute_metrics({record({true}), record({false}), record({true}), record({true})},
                                     ev::DatasetKind::Single);
  EXPECT_EQ(m.error_rate, 0.25);
  EXPECT_FALSE(m.avg_completion.has_value());
  EXPECT_FALSE(m.pct_fulfilled.has_value());
}

TEST(MetricsProperty, IdentitiesHoldOnRandomRecords) {
  std::mt19937 rng(20261014);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<ev::RunRecord> records;
    const int n = std::uniform_int_distribution<int>(1, 12)(rng);
    std::size_t full = 0;
    std::size_t steps = 0;
    std::size_t failed = 0;
    for (int i = 0; i < n; ++i) {
      ev::RunRecord r;
      const int len = std::uniform_int_distribution<int>(1, 6)(rng);
      bool all_ok = true;
      for (int k = 0; k < len; ++k) {
        const bool ok = std::bernoulli_distribution(0.6)(rng);
        all_ok = all_ok && ok;
        failed += ok ? 0 : 1;
        r.steps.push_back(step(ok, std::uniform_real_distribution<double>(0, 5)(rng)));
      }
      steps += static_cast<std::size_t>(len);
      full += all_ok ? 1 : 0;
      records.push_back(std::move(r));
    }
    const auto m = ev::compute_metrics(records, ev::DatasetKind::Sequential);
    ASSERT_EQ(m.total, steps);
    ASSERT_EQ(m.failures, failed);
    ASSERT_NEAR(m.error_rate * static_cast<double>(m.total), static_cast<double>(failed), 1e-9);
    ASSERT_NEAR(*m.pct_fulfilled, static_cast<double>(full) / n, 1e-12);
    for (double v : {m.error_rate, *m.avg_completion, *m.pct_fulfilled}) {
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 1.0);
    }
    ASSERT_GE(m.mean_time, 0.0);

    // Aggregation does not depend on record order.
    std::shuffle(records.begin(), records.end(), rng);
    const auto again = ev::compute_metrics(records, ev::DatasetKind::Sequential);
    ASSERT_NEAR(again.error_rate, m.error_rate, 1e-12);
    ASSERT_NEAR(*again.avg_completion, *m.avg_completion, 1e-12);
  }
}

// -- suites over recorded replays ------------------------------------------------

TEST(Suite, SingleFixtureErrorRateIsExact) {
  const auto config = pl::load_config(data("configs/single10.json"));
  const auto dataset = ev::load_dataset(data("fixtures/datasets/single10.txt"));
  const auto report = ev::run_suite(dataset, config, deterministic());
  ASSERT_EQ(report.run_count(), 1u);
  EXPECT_EQ(report.runs[0].error_rate, 0.30);
  EXPECT_EQ(report.runs[0].failures, 3u);
  EXPECT_EQ(report.failure_tags.at("compile_failed"), 2u);
  EXPECT_EQ(report.failure_tags.at("runtime_failed"), 1u);
}

TEST(Suite, SequentialFixtureMatchesHandCount) {
  const auto config = pl::load_config(data("configs/sequential3.json"));
  const auto dataset = ev::load_dataset(data("fixtures/datasets/sequential3.txt"));
  const auto report = ev::run_suite(dataset, config, deterministic());
  const auto& m = report.runs.at(0);
  EXPECT_NEAR(m.error_rate, 2.0 / 6.0, 1e-12);
  EXPECT_NEAR(*m.avg_completion, 5.0 / 9.0, 1e-12);
  EXPECT_NEAR(*m.pct_fulfilled, 1.0 / 3.0, 1e-12);
}

TEST(Suite, FiveReplayRunsHaveZeroDeviation) {
  const auto config = pl::load_config(data("configs/single10.json"));
  const auto dataset = ev::load_dataset(data("fixtures/datasets/single10.txt"));
  const auto report = ev::run_suite(dataset, config, deterministic(5));
  ASSERT_EQ(report.run_count(), 5u);
  EXPECT_EQ(report.error_rate->mean, 0.30);
  EXPECT_EQ(report.error_rate->sd, 0.0);
}

TEST(Suite, ReplayReportsAreBitIdentical) {
  const auto config = pl::load_config(data("configs/sequential3.json"));
  const auto dataset = ev::load_dataset(data("fixtures/datasets/sequential3.txt"));
  const ev::ReportContext ctx{"2000-01-01T00:00:00Z", std::nullopt};
  const auto a = ev::render_report({ev::run_suite(dataset, config, deterministic(2))}, ev::ReportFormat::Machine, ctx);
  const auto b = ev::render_report({ev::run_suite(dataset, config, deterministic(2))}, ev::ReportFormat::Machine, ctx);
  EXPECT_EQ(a, b);
}

TEST(Suite, ProviderFailureIsTagged) {
  const auto dataset = ev::parse_dataset("make a cube\n", "t");
  auto options = deterministic();
  options.provider_factory = [] { return std::make_unique<llm::ScriptedProvider>(); };
  const auto report = ev::run_suite(dataset, pl::preset("zero-shot"), options);
  EXPECT_EQ(report.runs[0].error_rate, 1.0);
  EXPECT_EQ(report.failure_tags.at("provider_failure"), 1u);
}

// -- reports -------------------------------------------------------------------

TEST(Report, EmptyRunSetHasNullMetrics) {
  const auto dataset = ev::parse_dataset("make a cube\n", "t");
  const auto report = ev::make_report(pl::preset("few-shot"), dataset, {});
  EXPECT_EQ(report.run_count(), 0u);
  EXPECT_FALSE(report.error_rate.has_value());
  const auto j = ev::to_json(report);
  EXPECT_TRUE(j["metrics"]["error_rate"].is_null());
  EXPECT_EQ(j["run_count"], 0);
  EXPECT_NO_THROW(ev::render_report({report}, ev::ReportFormat::HumanTable));
}

TEST(Report, HumanTableHeaderAndRowOrder) {
  const auto dataset = ev::parse_dataset("make a cube\n", "t");
  auto b = ev::make_report(pl::preset("zero-shot"), dataset, {{record({false})}});
  auto a = ev::make_report(pl::preset("few-shot"), dataset, {{record({true})}});
  const auto table = ev::render_report({b, a}, ev::ReportFormat::HumanTable);
  EXPECT_NE(table.find("| Model | Error rate (↓) | Avg. prompt completion (↑) | % fulfilled (↑) |"), std::string::npos);
  const auto few = table.find("| few-shot |");
  const auto zero = table.find("| zero-shot |");
  ASSERT_NE(few, std::string::npos);
  ASSERT_NE(zero, std::string::npos);
  EXPECT_LT(few, zero);
  EXPECT_NE(table.find(ev::kReferenceLabel), std::string::npos);
}

TEST(Report, MachineSchemaIsKeyedByFingerprint) {
  const auto dataset = ev::parse_dataset("make a cube\n", "t");
  const auto config = pl::preset("few-shot");
  const auto report = ev::make_report(config, dataset, {{record({true})}});
  const auto j = nlohmann::json::parse(ev::render_report({report}, ev::ReportFormat::Machine));
  EXPECT_EQ(j["schema"], "sceneforge-eval-report");
  EXPECT_EQ(j["version"], ev::kReportSchemaVersion);
  ASSERT_TRUE(j["reports"].contains(pl::fingerprint(config)));
  EXPECT_EQ(j["reports"][pl::fingerprint(config)]["config"], "few-shot");
}

TEST(Report, ReferenceValuesCarryTheirLabel) {
  const auto ref = ev::load_reference_metrics();
  EXPECT_EQ(ref["label"], std::string(ev::kReferenceLabel));
  const auto& seq = ref["sequential"];
  const auto full = std::find_if(seq.begin(), seq.end(), [](const auto& row) { return row["config"] == "full LLMR"; });
  ASSERT_NE(full, seq.end());
  EXPECT_NEAR((*full)["error_rate"].get<double>(), 0.245, 1e-12);
}

TEST(Report, EmitCreatesParentDirectories) {
  const auto dir = std::filesystem::temp_directory_path() / "sceneforge-eval-test" / "nested";
  std::filesystem::remove_all(dir.parent_path());
  const auto dataset = ev::parse_dataset("make a cube\n", "t");
  const auto report = ev::make_report(pl::preset("few-shot"), dataset, {{record({true})}});
  ev::emit_report({report}, ev::ReportFormat::Machine, (dir / "r.json").string());
  EXPECT_TRUE(std::filesystem::exists(dir / "r.json"));
  std::filesystem::remove_all(dir.parent_path());
}

// -- difficulty rating -----------------------------------------------------------

TEST(Rating, ParsesNumberedAndBareReplies) {
  EXPECT_EQ(ev::parse_rating("1: 7", 1), 7.0);
  EXPECT_EQ(ev::parse_rating("Ratings:\n1. 3\n2) 8/10\n", 2), 8.0);
  EXPECT_EQ(ev::parse_rating("6 out of 10", 1), 6.0);
  EXPECT_EQ(ev::parse_rating("3", 1), 3.0);
  EXPECT_FALSE(ev::parse_rating("3", 2).has_value());
  EXPECT_FALSE(ev::parse_rating("pretty hard", 1).has_value());
  EXPECT_FALSE(ev::parse_rating("1: 12", 1).has_value());
}

TEST(Rating, MeanAndSampleDeviation) {
  llm::ScriptedProvider p({"7", "7", "8", "6", "9"});
  const auto r = ev::rate_difficulty("build a castle", p, 5);
  EXPECT_DOUBLE_EQ(r.mean, 7.4);
  EXPECT_NEAR(r.sd, std::sqrt(1.3), 1e-12);
  EXPECT_EQ(r.replies_used, 5u);
  EXPECT_EQ(r.bucket, ev::Bucket::SomewhatHard);
}

TEST(Rating, SingleRepeat) {
  llm::ScriptedProvider p({"3"});
  const auto r = ev::rate_difficulty("make a cube", p, 1);
  EXPECT_EQ(r.mean, 3.0);
  EXPECT_EQ(r.sd, 0.0);
}

TEST(Rating, UnparseableRepliesAreSkipped) {
  llm::ScriptedProvider p({"4", "pretty hard", "6"});
  const auto r = ev::rate_difficulty("make a cube", p, 3);
  EXPECT_EQ(r.mean, 5.0);
  EXPECT_EQ(r.replies_used, 2u);
  EXPECT_EQ(r.warnings.size(), 1u);
}

TEST(Rating, AllUnparseableThrows) {
  llm::ScriptedProvider p({"hard", "very hard"});
  EXPECT_THROW(ev::rate_difficulty("make a cube", p, 2), ev::AllRepliesUnparseable);
}

TEST(Rating, ContextIsUncontextualized) {
  llm::ScriptedProvider inner({"1: 2\n2: 9\n"});
  llm::SpyProvider spy(inner);
  const auto r = ev::rate_difficulty_batch({"make a cube", "build a city"}, spy, 1);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0].mean, 2.0);
  EXPECT_EQ(r[1].mean, 9.0);
  const auto calls = spy.calls();
  ASSERT_EQ(calls.size(), 1u);
  EXPECT_EQ(calls[0].context.tag, ev::kRaterTag);
  ASSERT_EQ(calls[0].context.messages.size(), 1u);
  EXPECT_EQ(calls[0].context.messages[0].role, llm::Role::User);
  EXPECT_NE(calls[0].context.messages[0].content.find("build a city"), std::string::npos);
}

// -- fixtures --------------------------------------------------------------------

TEST(Fixtures, ShippedReplaysMatchTheirSpecs) {
  for (const auto& path : ev::list_fixture_specs(data("fixtures/specs"))) {
    const auto spec = ev::load_fixture_spec(path);
    const auto fresh = ev::record_fixture(spec);
    const auto shipped = nlohmann::json::parse(sceneforge::util::read_file(spec.output));
    const auto& records = shipped.is_array() ? shipped : shipped.at("records");
    ASSERT_EQ(records.size(), fresh.size()) << spec.name;
    for (std::size_t i = 0; i < fresh.size(); ++i) {
      EXPECT_EQ(records[i]["request_hash"], fresh[i].request_hash) << spec.name << " #" << i;
      EXPECT_EQ(records[i]["response_text"], fresh[i].response_text) << spec.name << " #" << i;
    }
  }
}
