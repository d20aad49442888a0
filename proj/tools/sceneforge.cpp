// sceneforge: command-line front end for the scene pipeline.

#include "sceneforge/eval/eval.hpp"
#include "sceneforge/eval/fixtures.hpp"
#include "sceneforge/persist/scene_io.hpp"
#include "sceneforge/pipeline/config.hpp"
#include "sceneforge/pipeline/orchestrator.hpp"
#include "sceneforge/retrieval/retrieval.hpp"
#include "sceneforge/scene/hierarchy.hpp"
#include "sceneforge/script/script.hpp"
#include "sceneforge/service/server.hpp"
#include "sceneforge/util/text.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdlib>
#include <filesystem>
#include <iostream>

namespace sf = sceneforge;
namespace fs = std::filesystem;

namespace {

constexpr int kUsageError = 2;

sf::scene::Scene scene_or_empty(const std::string& path) {
  return path.empty() ? sf::scene::Scene{} : sf::eval::load_initial_scene(path);
}

/// Without --live a config may not reach the network; with it the provider is
/// replaced by the live adapter, endpoint and key taken from the environment
/// when set.
sf::pipeline::PipelineConfig resolve_config(const std::string& name, bool live) {
  auto config = sf::pipeline::load_config(name);
  const auto kind = config.provider.is_object() ? config.provider.value("kind", std::string{}) : std::string{};
  if (live) {
    nlohmann::json p = kind == "live" ? config.provider : nlohmann::json{{"kind", "live"}};
    p["kind"] = "live";
    if (const char* e = std::getenv("SCENEFORGE_LLM_ENDPOINT"); e != nullptr && *e != '\0') p["endpoint"] = e;
    if (const char* m = std::getenv("SCENEFORGE_LLM_MODEL"); m != nullptr && *m != '\0') config.params.model_id = m;
    config.provider = p;
  } else if (kind == "live") {
    throw std::invalid_argument("config '" + name + "' uses a live provider; pass --live to allow network calls");
  } else if (kind.empty()) {
    throw std::invalid_argument("config '" + name + "' has no provider; use a config file with a replay fixture or --live");
  }
  return config;
}

int cmd_compile(const std::string& path, bool run, const std::string& scene_path) {
  const auto text = sf::util::read_file(path);
  if (!run) {
    const auto result = sf::script::compile(text);
    if (!result.ok()) {
      std::cout << sf::script::format_diagnostics(result.errors);
      return 1;
    }
    std::cout << "ok: " << result.program->size() << " statements\n";
    return 0;
  }
  const auto out = sf::script::compile_and_run(text, scene_or_empty(scene_path));
  std::cout << "status: " << sf::script::status_name(out.status) << "\n";
  if (!out.ok()) {
    std::cout << sf::script::diagnostics_json(out.errors).dump(2) << "\n";
    return 1;
  }
  std::cout << sf::scene::serialize_hierarchy(out.scene_after) << "\n";
  return 0;
}

class PrintObserver : public sf::pipeline::Observer {
 public:
  void on_event(sf::pipeline::Stage stage, const nlohmann::ordered_json& payload) override {
    std::cerr << "[" << sf::pipeline::stage_name(stage) << "] " << payload.dump() << "\n";
  }
};

int cmd_run(const std::string& config_name, bool live, const std::string& prompt, const std::string& scene_path,
            const std::string& out_path, bool trace) {
  const auto config = resolve_config(config_name, live);
  auto provider = sf::llm::make_provider(config.provider);
  sf::pipeline::Orchestrator orch(*provider, config);
  PrintObserver observer;
  if (trace) orch.set_observer(&observer);
  orch.set_clarify_handler([](const sf::pipeline::ClarifyingQuestion& q) -> std::optional<std::string> {
    std::cout << "Planner asks: " << q.text << "\n> " << std::flush;
    std::string answer;
    if (!std::getline(std::cin, answer)) return std::nullopt;
    return answer;
  });
  const auto result = orch.run_request({prompt, "cli"}, scene_or_empty(scene_path));
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
  if (result.pending_question) {
    std::cout << "unanswered question: " << result.pending_question->text << "\n";
    return 1;
  }
  for (const auto& e : result.episodes) {
    std::cout << fmt::format("step {}/{} [{}] {}\n", e.instruction.index, e.instruction.plan_size,
                             sf::script::status_name(e.outcome.status), e.instruction.text);
    if (e.outcome.status != sf::script::Status::Success) {
      std::cout << sf::script::diagnostics_json(e.outcome.errors).dump(2) << "\n";
      if (!e.outcome.pipeline_error.empty()) std::cout << "pipeline error: " << e.outcome.pipeline_error << "\n";
    }
  }
  if (!out_path.empty()) {
    sf::persist::export_scene(result.scene, out_path);
  } else {
    std::cout << sf::scene::serialize_hierarchy(result.scene) << "\n";
  }
  return result.all_succeeded() ? 0 : 1;
}

std::string table_path(const std::string& out) {
  fs::path p(out);
  p.replace_extension(".md");
  return p.string();
}

int cmd_eval(const std::string& dataset_path, const std::vector<std::string>& configs, std::size_t runs,
             const std::string& out, bool live, bool deterministic) {
  const auto dataset = sf::eval::load_dataset(dataset_path);
  std::vector<sf::eval::MetricsReport> reports;
  for (const auto& name : configs) {
    const auto config = resolve_config(name, live);
    sf::eval::SuiteOptions options;
    options.runs = runs;
    if (deterministic) {
      options.stopwatch = [] { return 0.0; };
      options.wall_clock = [] { return std::string("1970-01-01T00:00:00Z"); };
    }
    options.on_record = [&](std::size_t run, const sf::eval::RunRecord& r) {
      std::cerr << fmt::format("[{} run {}] {} {}\n", config.name, run + 1, r.ok() ? "ok  " : "FAIL", r.prompt);
    };
    reports.push_back(sf::eval::run_suite(dataset, config, options));
  }
  sf::eval::ReportContext context;
  context.generated_at = deterministic ? "" : sf::util::utc_timestamp();
  sf::eval::emit_report(reports, sf::eval::ReportFormat::Machine, out, context);
  sf::eval::emit_report(reports, sf::eval::ReportFormat::HumanTable, table_path(out), context);
  std::cout << sf::eval::render_report(reports, sf::eval::ReportFormat::HumanTable, context);
  return 0;
}

int cmd_rate(const std::string& dataset_path, const std::string& config_name, bool live, std::size_t repeats,
             bool per_prompt) {
  const auto config = resolve_config(config_name, live);
  auto provider = sf::llm::make_provider(config.provider);
  const auto dataset = sf::eval::load_dataset(dataset_path);
  std::vector<std::string> prompts;
  for (const auto& p : dataset.prompts) prompts.push_back(sf::util::join(p, "; "));
  std::vector<sf::eval::DifficultyRating> ratings;
  if (per_prompt) {
    for (const auto& p : prompts) ratings.push_back(sf::eval::rate_difficulty(p, *provider, repeats));
  } else {
    ratings = sf::eval::rate_difficulty_batch(prompts, *provider, repeats);
  }
  for (const auto& r : ratings) {
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << fmt::format("{:5.2f} ± {:4.2f}  {:<13}  {}\n", r.mean, r.sd, sf::eval::bucket_name(r.bucket), r.prompt);
  }
  return 0;
}

int cmd_retrieve(const std::string& dir, const std::string& label, std::size_t k, bool visual_first) {
  const auto catalog = sf::retrieval::load_fixture_catalog((fs::path(dir) / "catalog.json").string());
  sf::retrieval::FixtureProviders providers(catalog, sf::retrieval::load_targets((fs::path(dir) / "targets.json").string()));
  sf::retrieval::RetrievalOptions options;
  options.k = k;
  if (visual_first) options.order = sf::retrieval::StageOrder::VisualFirst;
  const auto r = sf::retrieval::retrieve(label, catalog.catalog, providers.providers(), options);
  std::cout << sf::retrieval::to_json(r).dump(2) << "\n";
  return 0;
}

int cmd_fixtures(const std::string& dir, bool check) {
  int stale = 0;
  for (const auto& path : sf::eval::list_fixture_specs(dir)) {
    const auto spec = sf::eval::load_fixture_spec(path);
    const auto records = sf::eval::record_fixture(spec);
    if (!check) {
      sf::llm::save_replay_file(spec.output, records);
      std::cout << fmt::format("recorded {} ({} calls) -> {}\n", spec.name, records.size(), spec.output);
      continue;
    }
    const bool same = fs::exists(spec.output) && [&] {
      const auto shipped = sf::llm::load_replay_file(spec.output);
      if (shipped.size() != records.size()) return false;
      for (std::size_t i = 0; i < records.size(); ++i) {
        if (shipped[i].request_hash != records[i].request_hash ||
            shipped[i].response_text != records[i].response_text) {
          return false;
        }
      }
      return true;
    }();
    std::cout << fmt::format("{} {}\n", same ? "current" : "STALE  ", spec.name);
    if (!same) ++stale;
  }
  return stale == 0 ? 0 : 1;
}

int cmd_serve(int port, const std::string& host, const std::string& config_name, bool live, double tick_rate,
              const std::string& store_dir) {
  sf::service::ServiceOptions options;
  options.default_config = resolve_config(config_name, live);
  options.tick_rate = tick_rate;
  if (!store_dir.empty()) options.store_dir = store_dir;
  sf::service::Server server(std::move(options));
  std::cout << fmt::format("listening on http://{}:{}\n", host, port) << std::flush;
  return server.listen(host, port) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sceneforge: build and edit scenes from natural-language requests"};
  app.require_subcommand(1);

  std::string config = "full LLMR";
  bool live = false;

  auto* compile = app.add_subcommand("compile", "Check (and optionally run) a Scene Script file");
  std::string script_path;
  std::string scene_path;
  bool run_script = false;
  compile->add_option("file", script_path, "Scene Script file")->required()->check(CLI::ExistingFile);
  compile->add_flag("--run", run_script, "Execute against --scene and print the hierarchy");
  compile->add_option("--scene", scene_path, "Initial scene (.ss script or exported .json)");

  auto* run = app.add_subcommand("run", "Run one request through the pipeline");
  std::string prompt;
  std::string out_scene;
  bool trace = false;
  run->add_option("prompt", prompt, "The request")->required();
  run->add_option("--config", config, "Preset name or config file");
  run->add_option("--scene", scene_path, "Initial scene (.ss script or exported .json)");
  run->add_option("--out", out_scene, "Write the resulting scene file here");
  run->add_flag("--trace", trace, "Print pipeline events to stderr");
  run->add_flag("--live", live, "Allow a live provider");

  auto* eval = app.add_subcommand("eval", "Run a prompt dataset and write a metrics report");
  std::string dataset;
  std::vector<std::string> configs;
  std::size_t runs = 1;
  std::string out_report = "report.json";
  bool deterministic = false;
  eval->add_option("--dataset", dataset, "Dataset file")->required()->check(CLI::ExistingFile);
  eval->add_option("--config", configs, "Preset name or config file (repeatable)")->required();
  eval->add_option("--runs", runs, "Independent runs per config")->check(CLI::NonNegativeNumber);
  eval->add_option("--out", out_report, "Machine-readable report path; the table goes next to it as .md");
  eval->add_flag("--live", live, "Allow a live provider");
  eval->add_flag("--deterministic", deterministic, "Zero all timings and timestamps");

  auto* rate = app.add_subcommand("rate", "Rate the difficulty of a dataset's prompts");
  std::size_t repeats = 10;
  bool per_prompt = false;
  rate->add_option("--dataset", dataset, "Dataset file")->required()->check(CLI::ExistingFile);
  rate->add_option("--config", config, "Config whose provider does the rating")->required();
  rate->add_option("--repeats", repeats, "Ratings per prompt")->check(CLI::PositiveNumber);
  rate->add_flag("--per-prompt", per_prompt, "One request per prompt instead of one for all");
  rate->add_flag("--live", live, "Allow a live provider");

  auto* retrieve = app.add_subcommand("retrieve", "Retrieve an asset from a fixture catalog directory");
  std::string catalog_dir;
  std::string label;
  std::size_t k = 5;
  bool visual_first = false;
  retrieve->add_option("--catalog", catalog_dir, "Directory with catalog.json and targets.json")
      ->required()
      ->check(CLI::ExistingDirectory);
  retrieve->add_option("--label", label, "Object label")->required();
  retrieve->add_option("--k", k, "Shortlist size")->check(CLI::PositiveNumber);
  retrieve->add_flag("--visual-first", visual_first, "Shortlist by visual similarity first");

  auto* fixtures = app.add_subcommand("fixtures", "Record replay fixtures from their specs");
  std::string specs_dir = (fs::path(sf::pipeline::data_dir()) / "fixtures" / "specs").string();
  bool check = false;
  fixtures->add_option("--specs", specs_dir, "Directory of fixture specs")->check(CLI::ExistingDirectory);
  fixtures->add_flag("--check", check, "Compare against the shipped replay files instead of writing");

  auto* serve = app.add_subcommand("serve", "Serve the session API over HTTP");
  int port = 8080;
  std::string host = "127.0.0.1";
  double tick_rate = 20.0;
  std::string store_dir;
  serve->add_option("--port", port, "TCP port")->check(CLI::Range(1, 65535));
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--config", config, "Default preset name or config file for new sessions");
  serve->add_option("--tick-rate", tick_rate, "Scene ticks per second while clients are subscribed");
  serve->add_option("--store", store_dir, "Generation store directory");
  serve->add_flag("--live", live, "Allow a live provider");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*compile) return cmd_compile(script_path, run_script, scene_path);
    if (*run) return cmd_run(config, live, prompt, scene_path, out_scene, trace);
    if (*eval) return cmd_eval(dataset, configs, runs, out_report, live, deterministic);
    if (*rate) return cmd_rate(dataset, config, live, repeats, per_prompt);
    if (*retrieve) return cmd_retrieve(catalog_dir, label, k, visual_first);
    if (*fixtures) return cmd_fixtures(specs_dir, check);
    if (*serve) return cmd_serve(port, host, config, live, tick_rate, store_dir);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kUsageError;
}
