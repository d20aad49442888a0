#pragma once

#include "sceneforge/llm/provider.hpp"
#include "sceneforge/pipeline/orchestrator.hpp"
#include "sceneforge/scene/scene.hpp"

#include <nlohmann/json.hpp>

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sceneforge::eval {

enum class DatasetKind { Single, Sequential };

std::string_view kind_name(DatasetKind kind);

/// Single datasets hold one-element entries.
struct PromptDataset {
  std::string name;
  DatasetKind kind = DatasetKind::Single;
  std::vector<std::vector<std::string>> prompts;
  std::vector<std::optional<int>> difficulty;  // parallel to prompts, levels 1..10
  std::string initial_scene;                   // path, empty for an empty scene

  [[nodiscard]] std::size_t size() const { return prompts.size(); }
};

class EmptyDataset : public std::runtime_error {
 public:
  explicit EmptyDataset(const std::string& path) : std::runtime_error("dataset '" + path + "' has no prompts") {}
};

class DatasetError : public std::runtime_error {
 public:
  DatasetError(std::string path, int line, const std::string& message);
  [[nodiscard]] int line() const { return line_; }

 private:
  int line_;
};

/// One prompt per line; '#' starts a comment line. Directives:
///   @kind single|sequential   @scene <path>
/// A trailing "[difficulty: N]" labels the prompt. Without @kind, a file with
/// any ';' is sequential unless `kind` is given.
PromptDataset parse_dataset(std::string_view text, std::string name = "dataset",
                            std::optional<DatasetKind> kind = std::nullopt);
PromptDataset load_dataset(const std::string& path, std::optional<DatasetKind> kind = std::nullopt);

/// A DSL script, or an exported scene document when the path ends in .json.
/// Relative paths resolve against `base_dir`.
scene::Scene load_initial_scene(const std::string& path, const std::string& base_dir = "");

/// Difficulty buckets over levels 1..10.
enum class Bucket { Easy, SomewhatEasy, Medium, SomewhatHard, Hard };

std::string_view bucket_name(Bucket bucket);
/// The level is rounded half-up and clamped to [1, 10] before bucketing.
Bucket bucket_of(double level);

/// Failure tags: compile_failed, runtime_failed, provider_failure,
/// clarify_unanswered. Empty on success.
struct StepRecord {
  std::string prompt;
  script::Status status = script::Status::Success;
  std::string failure_tag;
  std::size_t attempts = 0;
  double seconds = 0;

  [[nodiscard]] bool ok() const { return failure_tag.empty(); }
};

struct RunRecord {
  std::string prompt;  // sequential entries joined with "; "
  std::string config;
  std::optional<int> difficulty;
  std::vector<StepRecord> steps;

  [[nodiscard]] bool ok() const;
  [[nodiscard]] script::Status status() const;  // first failing step's status
  [[nodiscard]] std::size_t attempts() const;
  [[nodiscard]] double seconds() const;
  /// Successful steps over steps.
  [[nodiscard]] double completion() const;
};

struct RunMetrics {
  double error_rate = 0;
  std::optional<double> avg_completion;  // sequential only
  std::optional<double> pct_fulfilled;   // sequential only
  double mean_time = 0;
  std::size_t failures = 0;
  std::size_t total = 0;  // outcomes counted by error_rate
};

/// Computes one run's metrics. Sequential error rates are over individual steps.
RunMetrics compute_metrics(const std::vector<RunRecord>& records, DatasetKind kind);

struct Stat {
  double mean = 0;
  double sd = 0;  // sample standard deviation, 0 for fewer than two values
};

Stat summarize(const std::vector<double>& values);

struct MetricsReport {
  std::string config;
  std::string fingerprint;
  nlohmann::ordered_json config_json;
  std::string dataset;
  DatasetKind kind = DatasetKind::Single;
  std::size_t prompt_count = 0;
  std::vector<RunMetrics> runs;
  std::vector<std::vector<RunRecord>> records;  // per run
  // Null when there are no runs.
  std::optional<Stat> error_rate;
  std::optional<Stat> avg_completion;
  std::optional<Stat> pct_fulfilled;
  std::optional<Stat> mean_time;
  std::map<std::string, double> difficulty_error_rates;  // bucket name -> rate over all runs
  std::map<std::string, std::size_t> failure_tags;       // tag -> count over all runs

  [[nodiscard]] std::size_t run_count() const { return runs.size(); }
};

/// Aggregates finished runs, one record list per run.
MetricsReport make_report(const pipeline::PipelineConfig& config, const PromptDataset& dataset,
                          std::vector<std::vector<RunRecord>> records);

using ProviderFactory = std::function<std::unique_ptr<llm::Provider>()>;

struct SuiteOptions {
  std::size_t runs = 1;
  /// Called once per run. Defaults to make_provider(config.provider).
  ProviderFactory provider_factory;
  /// Overrides the dataset's @scene reference.
  std::optional<scene::Scene> initial_scene;
  std::shared_ptr<pipeline::AssetSource> assets;
  /// Answers Planner questions; without one a question fails the prompt.
  pipeline::ClarifyHandler clarify;
  /// Injected into every orchestrator; a constant stopwatch makes reports
  /// bit-identical across replays.
  pipeline::Orchestrator::Stopwatch stopwatch;
  pipeline::Orchestrator::WallClock wall_clock;
  /// Called after each record, for progress output.
  std::function<void(std::size_t run, const RunRecord&)> on_record;
};

/// Every prompt runs on a fresh orchestrator and a fresh copy of the initial scene.
MetricsReport run_single_suite(const PromptDataset& dataset, const pipeline::PipelineConfig& config,
                               const SuiteOptions& options);
/// One orchestrator per sequence; each step runs on the scene the previous
/// steps left behind, and a failed step does not stop the sequence.
MetricsReport run_sequential_suite(const PromptDataset& dataset, const pipeline::PipelineConfig& config,
                                   const SuiteOptions& options);
/// Dispatches on dataset.kind.
MetricsReport run_suite(const PromptDataset& dataset, const pipeline::PipelineConfig& config,
                        const SuiteOptions& options);

// -- difficulty rating ---------------------------------------------------------

class AllRepliesUnparseable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DifficultyRating {
  std::string prompt;
  double mean = 0;
  double sd = 0;
  std::size_t replies_used = 0;
  Bucket bucket = Bucket::Medium;
  std::vector<std::string> warnings;
};

/// Template with a {{prompts}} placeholder; loaded from data/eval.
std::string default_rating_template();

inline constexpr std::string_view kRaterTag = "difficulty_rater";

/// Extracts the level for 1-based `index` from a rater reply: a line
/// "index: N" (or "index." / "index)") wins, and for index 1 a reply holding a
/// single bare number also counts. Levels outside [1, 10] are rejected.
std::optional<double> parse_rating(std::string_view reply, std::size_t index);

/// Per-prompt rating: `repeats` uncontextualized calls with only this prompt listed.
DifficultyRating rate_difficulty(const std::string& prompt, llm::Provider& provider, std::size_t repeats = 10,
                                 const std::string& rating_template = default_rating_template());
/// Batch rating: every call lists all prompts and the reply rates each.
std::vector<DifficultyRating> rate_difficulty_batch(const std::vector<std::string>& prompts, llm::Provider& provider,
                                                    std::size_t repeats = 10,
                                                    const std::string& rating_template = default_rating_template());

// -- reports -------------------------------------------------------------------

enum class ReportFormat { Machine, HumanTable };

inline constexpr int kReportSchemaVersion = 1;
inline constexpr std::string_view kReferenceLabel = "paper-reported, GPT-4 + Unity, not reproducible offline";

struct ReportContext {
  std::string generated_at;                 // empty: omitted
  std::optional<nlohmann::json> reference;  // defaults to data/eval/reference_metrics.json
};

nlohmann::json load_reference_metrics();

nlohmann::ordered_json to_json(const RunRecord& record);
nlohmann::ordered_json to_json(const MetricsReport& report);

/// Machine reports group suites under their config fingerprint.
std::string render_report(const std::vector<MetricsReport>& reports, ReportFormat format,
                          const ReportContext& context = {});
void emit_report(const std::vector<MetricsReport>& reports, ReportFormat format, const std::string& path,
                 const ReportContext& context = {});

}  // namespace sceneforge::eval
