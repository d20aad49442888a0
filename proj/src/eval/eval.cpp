#include "sceneforge/eval/eval.hpp"

#include "sceneforge/persist/scene_io.hpp"
#include "sceneforge/pipeline/config.hpp"
#include "sceneforge/util/text.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <regex>
#include <set>
#include <sstream>
#include <tuple>

#include <fmt/format.h>

namespace sceneforge::eval {

namespace {

namespace fs = std::filesystem;

const std::regex kDifficultyRe(R"(\[\s*difficulty\s*:\s*([0-9]+)\s*\]\s*$)", std::regex::icase);

std::string_view tag_for(script::Status status, bool pipeline_error) {
  if (pipeline_error) return "provider_failure";
  return status == script::Status::RuntimeFailed ? "runtime_failed" : "compile_failed";
}

StepRecord step_record(const std::string& prompt, const pipeline::RunResult& r) {
  StepRecord s;
  s.prompt = prompt;
  for (const auto& e : r.episodes) {
    s.attempts += e.attempts.size();
    s.seconds += e.timings.total;
  }
  if (r.pending_question) {
    s.status = script::Status::CompileFailed;
    s.failure_tag = "clarify_unanswered";
    s.seconds = r.seconds;
    return s;
  }
  if (r.episodes.empty()) {
    s.status = script::Status::CompileFailed;
    s.failure_tag = "compile_failed";
    return s;
  }
  for (const auto& e : r.episodes) {
    if (e.outcome.status == script::Status::Success) continue;
    s.status = e.outcome.status;
    s.failure_tag = std::string(tag_for(e.outcome.status, !e.outcome.pipeline_error.empty()));
    break;
  }
  return s;
}

struct SuiteSetup {
  pipeline::Metaprompts prompts;
  pipeline::SkillLibrary skills;
  scene::Scene initial;
};

SuiteSetup prepare(const PromptDataset& dataset, const pipeline::PipelineConfig& config, const SuiteOptions& options) {
  SuiteSetup s{pipeline::Metaprompts::load(config), {}, {}};
  s.skills = pipeline::SkillLibrary::load(config.skills_path.empty()
                                              ? (fs::path(pipeline::data_dir()) / "skills" / "skills.json").string()
                                              : config.skills_path);
  if (options.initial_scene) {
    s.initial = *options.initial_scene;
  } else if (!dataset.initial_scene.empty()) {
    s.initial = load_initial_scene(dataset.initial_scene);
  }
  return s;
}

std::unique_ptr<llm::Provider> provider_for(const pipeline::PipelineConfig& config, const SuiteOptions& options) {
  if (options.provider_factory) return options.provider_factory();
  return llm::make_provider(config.provider);
}

std::unique_ptr<pipeline::Orchestrator> orchestrator_for(llm::Provider& provider, const pipeline::PipelineConfig& config,
                                                         const SuiteSetup& setup, const SuiteOptions& options,
                                                         std::string session) {
  auto o = std::make_unique<pipeline::Orchestrator>(provider, config, setup.prompts, setup.skills);
  o->set_session(std::move(session));
  if (options.stopwatch) o->set_stopwatch(options.stopwatch);
  if (options.wall_clock) o->set_wall_clock(options.wall_clock);
  if (options.assets) o->set_asset_source(options.assets);
  if (options.clarify) o->set_clarify_handler(options.clarify);
  return o;
}

std::optional<double> to_level(const std::string& digits) {
  try {
    const double v = std::stod(digits);
    if (v < 1.0 || v > 10.0) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

std::string fmt_stat(const std::optional<Stat>& s) {
  return s ? fmt::format("{:.3f} ± {:.3f}", s->mean, s->sd) : "n/a";
}

nlohmann::ordered_json stat_json(const std::optional<Stat>& s) {
  if (!s) return nullptr;
  return {{"mean", s->mean}, {"sd", s->sd}};
}

nlohmann::ordered_json opt_json(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

std::string fmt_ref(const nlohmann::json& row, const char* key) {
  if (!row.contains(key) || row.at(key).is_null()) return "n/a";
  return fmt::format("{:.3f}", row.at(key).get<double>());
}

}  // namespace

std::string_view kind_name(DatasetKind kind) { return kind == DatasetKind::Single ? "single" : "sequential"; }

DatasetError::DatasetError(std::string path, int line, const std::string& message)
    : std::runtime_error(path + ":" + std::to_string(line) + ": " + message), line_(line) {}

PromptDataset parse_dataset(std::string_view text, std::string name, std::optional<DatasetKind> kind) {
  PromptDataset out;
  out.name = std::move(name);
  struct Raw {
    std::string text;
    int line;
  };
  std::vector<Raw> raw;
  std::optional<DatasetKind> directive;
  bool saw_semicolon = false;
  int line_no = 0;
  for (const auto& full : util::split_lines(text)) {
    ++line_no;
    std::string line(util::trim(full));
    if (line.empty() || line.front() == '#') continue;
    if (line.front() == '@') {
      const auto space = line.find_first_of(" \t");
      const auto key = line.substr(1, space == std::string::npos ? std::string::npos : space - 1);
      const auto value = space == std::string::npos ? std::string() : std::string(util::trim(line.substr(space)));
      if (key == "kind" && (value == "single" || value == "sequential")) {
        directive = value == "single" ? DatasetKind::Single : DatasetKind::Sequential;
      } else if (key == "scene" && !value.empty()) {
        out.initial_scene = value;
      } else {
        throw DatasetError(out.name, line_no, "unrecognized directive '" + line + "'");
      }
      continue;
    }
    std::optional<int> level;
    std::smatch m;
    if (std::regex_search(line, m, kDifficultyRe)) {
      const int v = std::stoi(m[1].str());
      if (v < 1 || v > 10) throw DatasetError(out.name, line_no, "difficulty must be within 1..10");
      level = v;
      line = std::string(util::trim(line.substr(0, static_cast<std::size_t>(m.position(0)))));
      if (line.empty()) throw DatasetError(out.name, line_no, "difficulty label without a prompt");
    }
    saw_semicolon = saw_semicolon || line.find(';') != std::string::npos;
    raw.push_back({line, line_no});
    out.difficulty.push_back(level);
  }
  out.kind = directive.value_or(kind.value_or(saw_semicolon ? DatasetKind::Sequential : DatasetKind::Single));
  for (const auto& r : raw) {
    if (out.kind == DatasetKind::Single) {
      out.prompts.push_back({r.text});
      continue;
    }
    auto parts = util::split(r.text, ';');
    if (!parts.empty() && util::trim(parts.back()).empty()) parts.pop_back();
    std::vector<std::string> steps;
    for (const auto& p : parts) {
      const auto step = util::trim(p);
      if (step.empty()) throw DatasetError(out.name, r.line, "empty step in sequence");
      steps.emplace_back(step);
    }
    out.prompts.push_back(std::move(steps));
  }
  if (out.prompts.empty()) throw EmptyDataset(out.name);
  return out;
}

PromptDataset load_dataset(const std::string& path, std::optional<DatasetKind> kind) {
  if (!fs::exists(path)) throw std::invalid_argument("dataset file not found: " + path);
  auto d = parse_dataset(util::read_file(path), path, kind);
  d.name = fs::path(path).stem().string();
  if (!d.initial_scene.empty() && fs::path(d.initial_scene).is_relative()) {
    d.initial_scene = (fs::path(path).parent_path() / d.initial_scene).string();
  }
  return d;
}

scene::Scene load_initial_scene(const std::string& path, const std::string& base_dir) {
  fs::path p(path);
  if (p.is_relative() && !base_dir.empty()) p = fs::path(base_dir) / p;
  if (p.extension() == ".json") return persist::import_scene(p.string());
  auto out = script::compile_and_run(util::read_file(p.string()), scene::Scene{});
  if (!out.ok()) {
    throw std::runtime_error("initial scene " + p.string() + " failed:\n" + script::diagnostics_json(out.errors).dump(2));
  }
  return out.scene_after;
}

std::string_view bucket_name(Bucket bucket) {
  switch (bucket) {
    case Bucket::Easy: return "Easy";
    case Bucket::SomewhatEasy: return "Somewhat Easy";
    case Bucket::Medium: return "Medium";
    case Bucket::SomewhatHard: return "Somewhat Hard";
    case Bucket::Hard: return "Hard";
  }
  return "Medium";
}

Bucket bucket_of(double level) {
  const int l = std::clamp(static_cast<int>(std::floor(level + 0.5)), 1, 10);
  return static_cast<Bucket>((l - 1) / 2);
}

bool RunRecord::ok() const {
  return !steps.empty() && std::all_of(steps.begin(), steps.end(), [](const StepRecord& s) { return s.ok(); });
}

script::Status RunRecord::status() const {
  if (steps.empty()) return script::Status::CompileFailed;
  for (const auto& s : steps) {
    if (!s.ok()) return s.status;
  }
  return script::Status::Success;
}

std::size_t RunRecord::attempts() const {
  std::size_t n = 0;
  for (const auto& s : steps) n += s.attempts;
  return n;
}

double RunRecord::seconds() const {
  double t = 0;
  for (const auto& s : steps) t += s.seconds;
  return t;
}

double RunRecord::completion() const {
  if (steps.empty()) return 0;
  const auto good = std::count_if(steps.begin(), steps.end(), [](const StepRecord& s) { return s.ok(); });
  return static_cast<double>(good) / static_cast<double>(steps.size());
}

Stat summarize(const std::vector<double>& values) {
  // Welford: identical inputs give an exact mean and a zero deviation.
  double mean = 0;
  double m2 = 0;
  std::size_t k = 0;
  for (double x : values) {
    ++k;
    const double delta = x - mean;
    mean += delta / static_cast<double>(k);
    m2 += delta * (x - mean);
  }
  return {mean, k < 2 ? 0.0 : std::sqrt(m2 / static_cast<double>(k - 1))};
}

RunMetrics compute_metrics(const std::vector<RunRecord>& records, DatasetKind kind) {
  RunMetrics m;
  std::vector<double> times;
  for (const auto& r : records) {
    times.push_back(r.seconds());
    if (kind == DatasetKind::Single) {
      ++m.total;
      if (!r.ok()) ++m.failures;
    } else {
      for (const auto& s : r.steps) {
        ++m.total;
        if (!s.ok()) ++m.failures;
      }
    }
  }
  m.error_rate = m.total == 0 ? 0.0 : static_cast<double>(m.failures) / static_cast<double>(m.total);
  m.mean_time = summarize(times).mean;
  if (kind == DatasetKind::Sequential) {
    std::vector<double> completions;
    std::size_t fulfilled = 0;
    for (const auto& r : records) {
      completions.push_back(r.completion());
      if (r.completion() == 1.0) ++fulfilled;
    }
    m.avg_completion = summarize(completions).mean;
    m.pct_fulfilled = records.empty() ? 0.0 : static_cast<double>(fulfilled) / static_cast<double>(records.size());
  }
  return m;
}

MetricsReport make_report(const pipeline::PipelineConfig& config, const PromptDataset& dataset,
                          std::vector<std::vector<RunRecord>> records) {
  MetricsReport r;
  r.config = config.name;
  r.fingerprint = pipeline::fingerprint(config);
  r.config_json = pipeline::to_json(config);
  r.dataset = dataset.name;
  r.kind = dataset.kind;
  r.prompt_count = dataset.size();
  r.records = std::move(records);
  for (const auto& run : r.records) r.runs.push_back(compute_metrics(run, dataset.kind));
  if (r.runs.empty()) return r;

  std::vector<double> errors;
  std::vector<double> completions;
  std::vector<double> fulfilled;
  std::vector<double> times;
  for (const auto& m : r.runs) {
    errors.push_back(m.error_rate);
    times.push_back(m.mean_time);
    if (m.avg_completion) completions.push_back(*m.avg_completion);
    if (m.pct_fulfilled) fulfilled.push_back(*m.pct_fulfilled);
  }
  r.error_rate = summarize(errors);
  r.mean_time = summarize(times);
  if (dataset.kind == DatasetKind::Sequential) {
    r.avg_completion = summarize(completions);
    r.pct_fulfilled = summarize(fulfilled);
  }

  std::map<std::string, std::pair<std::size_t, std::size_t>> by_bucket;  // failures, total
  for (const auto& run : r.records) {
    for (const auto& rec : run) {
      for (const auto& s : rec.steps) {
        if (!s.ok()) ++r.failure_tags[s.failure_tag];
      }
      if (!rec.difficulty) continue;
      auto& [fails, total] = by_bucket[std::string(bucket_name(bucket_of(*rec.difficulty)))];
      if (dataset.kind == DatasetKind::Single) {
        ++total;
        if (!rec.ok()) ++fails;
      } else {
        for (const auto& s : rec.steps) {
          ++total;
          if (!s.ok()) ++fails;
        }
      }
    }
  }
  for (const auto& [bucket, counts] : by_bucket) {
    r.difficulty_error_rates[bucket] = static_cast<double>(counts.first) / static_cast<double>(counts.second);
  }
  return r;
}

MetricsReport run_single_suite(const PromptDataset& dataset, const pipeline::PipelineConfig& config,
                               const SuiteOptions& options) {
  if (dataset.kind != DatasetKind::Single) throw std::invalid_argument("run_single_suite needs a single dataset");
  const auto setup = prepare(dataset, config, options);
  std::vector<std::vector<RunRecord>> all;
  for (std::size_t run = 0; run < options.runs; ++run) {
    auto provider = provider_for(config, options);
    std::vector<RunRecord> records;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      const auto& prompt = dataset.prompts[i].front();
      const auto session = fmt::format("{}/run{}/prompt{}", dataset.name, run + 1, i + 1);
      auto orch = orchestrator_for(*provider, config, setup, options, session);
      const auto result = orch->run_request({prompt, session}, setup.initial);
      RunRecord rec{prompt, config.name, dataset.difficulty[i], {step_record(prompt, result)}};
      if (options.on_record) options.on_record(run, rec);
      records.push_back(std::move(rec));
    }
    all.push_back(std::move(records));
  }
  return make_report(config, dataset, std::move(all));
}

MetricsReport run_sequential_suite(const PromptDataset& dataset, const pipeline::PipelineConfig& config,
                                   const SuiteOptions& options) {
  if (dataset.kind != DatasetKind::Sequential) {
    throw std::invalid_argument("run_sequential_suite needs a sequential dataset");
  }
  const auto setup = prepare(dataset, config, options);
  std::vector<std::vector<RunRecord>> all;
  for (std::size_t run = 0; run < options.runs; ++run) {
    auto provider = provider_for(config, options);
    std::vector<RunRecord> records;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      const auto& steps = dataset.prompts[i];
      const auto session = fmt::format("{}/run{}/sequence{}", dataset.name, run + 1, i + 1);
      auto orch = orchestrator_for(*provider, config, setup, options, session);
      RunRecord rec{util::join(steps, "; "), config.name, dataset.difficulty[i], {}};
      scene::Scene current = setup.initial;
      for (const auto& step : steps) {
        auto result = orch->run_request({step, session}, current);
        rec.steps.push_back(step_record(step, result));
        current = std::move(result.scene);
      }
      if (options.on_record) options.on_record(run, rec);
      records.push_back(std::move(rec));
    }
    all.push_back(std::move(records));
  }
  return make_report(config, dataset, std::move(all));
}

MetricsReport run_suite(const PromptDataset& dataset, const pipeline::PipelineConfig& config,
                        const SuiteOptions& options) {
  return dataset.kind == DatasetKind::Single ? run_single_suite(dataset, config, options)
                                             : run_sequential_suite(dataset, config, options);
}

// -- difficulty rating ---------------------------------------------------------

std::string default_rating_template() {
  return util::read_file((fs::path(pipeline::data_dir()) / "eval" / "difficulty_rating.txt").string());
}

std::optional<double> parse_rating(std::string_view reply, std::size_t index) {
  static const std::regex kLine(R"(^\s*(?:[-*]\s*)?(?:prompt\s*#?\s*)?([0-9]+)\s*[:.)\-]\s*(?:level\s*)?([0-9]+(?:\.[0-9]+)?))",
                                std::regex::icase);
  static const std::regex kOutOfTen(R"(\s*(?:/\s*10|out of 10)\b)", std::regex::icase);
  static const std::regex kNumber(R"((?:^|[^\w.])([0-9]+(?:\.[0-9]+)?)(?![\w.]))");
  const auto cleaned = std::regex_replace(std::string(reply), kOutOfTen, "");
  for (const auto& line : util::split_lines(cleaned)) {
    std::smatch m;
    if (std::regex_search(line, m, kLine) && std::stoul(m[1].str()) == index) return to_level(m[2].str());
  }
  if (index != 1) return std::nullopt;
  std::vector<std::string> numbers;
  for (auto it = std::sregex_iterator(cleaned.begin(), cleaned.end(), kNumber); it != std::sregex_iterator(); ++it) {
    numbers.push_back((*it)[1].str());
  }
  if (numbers.size() != 1) return std::nullopt;
  return to_level(numbers.front());
}

std::vector<DifficultyRating> rate_difficulty_batch(const std::vector<std::string>& prompts, llm::Provider& provider,
                                                    std::size_t repeats, const std::string& rating_template) {
  if (repeats < 1) throw std::invalid_argument("repeats must be at least 1");
  if (prompts.empty()) return {};
  std::string listing;
  for (std::size_t i = 0; i < prompts.size(); ++i) listing += fmt::format("{}. {}\n", i + 1, prompts[i]);
  std::string request = rating_template;
  if (const auto at = request.find("{{prompts}}"); at != std::string::npos) {
    request.replace(at, 11, listing);
  } else {
    request = listing + "\n" + request;
  }

  std::vector<std::vector<double>> levels(prompts.size());
  std::vector<DifficultyRating> out(prompts.size());
  for (std::size_t rep = 0; rep < repeats; ++rep) {
    std::string reply;
    try {
      reply = provider.complete({{{llm::Role::User, request}}, std::string(kRaterTag)}, {});
    } catch (const llm::ProviderError& e) {
      for (auto& r : out) r.warnings.push_back(fmt::format("repeat {}: provider error: {}", rep + 1, e.what()));
      continue;
    }
    for (std::size_t i = 0; i < prompts.size(); ++i) {
      if (const auto level = parse_rating(reply, i + 1)) {
        levels[i].push_back(*level);
      } else {
        out[i].warnings.push_back(fmt::format("repeat {}: no rating for prompt {} in reply '{}'", rep + 1, i + 1,
                                              std::string(util::trim(reply)).substr(0, 80)));
      }
    }
  }
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    if (levels[i].empty()) {
      throw AllRepliesUnparseable("no parseable difficulty rating for prompt " + std::to_string(i + 1) + ": " +
                                  prompts[i]);
    }
    const auto s = summarize(levels[i]);
    out[i].prompt = prompts[i];
    out[i].mean = s.mean;
    out[i].sd = s.sd;
    out[i].replies_used = levels[i].size();
    out[i].bucket = bucket_of(s.mean);
  }
  return out;
}

DifficultyRating rate_difficulty(const std::string& prompt, llm::Provider& provider, std::size_t repeats,
                                 const std::string& rating_template) {
  return rate_difficulty_batch({prompt}, provider, repeats, rating_template).front();
}

// -- reports -------------------------------------------------------------------

nlohmann::json load_reference_metrics() {
  return nlohmann::json::parse(
      util::read_file((fs::path(pipeline::data_dir()) / "eval" / "reference_metrics.json").string()));
}

nlohmann::ordered_json to_json(const RunRecord& record) {
  nlohmann::ordered_json steps = nlohmann::ordered_json::array();
  for (const auto& s : record.steps) {
    steps.push_back({{"prompt", s.prompt},
                     {"status", script::status_name(s.status)},
                     {"failure_tag", s.failure_tag.empty() ? nlohmann::ordered_json(nullptr)
                                                           : nlohmann::ordered_json(s.failure_tag)},
                     {"attempts", s.attempts},
                     {"seconds", s.seconds}});
  }
  return {{"prompt", record.prompt},
          {"config", record.config},
          {"difficulty", record.difficulty ? nlohmann::ordered_json(*record.difficulty) : nlohmann::ordered_json(nullptr)},
          {"status", script::status_name(record.status())},
          {"attempts", record.attempts()},
          {"seconds", record.seconds()},
          {"steps", steps}};
}

nlohmann::ordered_json to_json(const MetricsReport& report) {
  nlohmann::ordered_json runs = nlohmann::ordered_json::array();
  for (const auto& m : report.runs) {
    runs.push_back({{"error_rate", m.error_rate},
                    {"avg_completion", opt_json(m.avg_completion)},
                    {"pct_fulfilled", opt_json(m.pct_fulfilled)},
                    {"mean_time_seconds", m.mean_time},
                    {"failures", m.failures},
                    {"total", m.total}});
  }
  nlohmann::ordered_json records = nlohmann::ordered_json::array();
  for (const auto& run : report.records) {
    nlohmann::ordered_json one = nlohmann::ordered_json::array();
    for (const auto& r : run) one.push_back(to_json(r));
    records.push_back(std::move(one));
  }
  nlohmann::ordered_json buckets = nlohmann::ordered_json::object();
  for (const auto& [k, v] : report.difficulty_error_rates) buckets[k] = v;
  nlohmann::ordered_json tags = nlohmann::ordered_json::object();
  for (const auto& [k, v] : report.failure_tags) tags[k] = v;
  return {{"dataset", report.dataset},
          {"kind", kind_name(report.kind)},
          {"run_count", report.run_count()},
          {"prompt_count", report.prompt_count},
          {"metrics",
           {{"error_rate", stat_json(report.error_rate)},
            {"avg_completion", stat_json(report.avg_completion)},
            {"pct_fulfilled", stat_json(report.pct_fulfilled)},
            {"mean_time_seconds", stat_json(report.mean_time)}}},
          {"per_difficulty_error_rate", buckets},
          {"failure_tags", tags},
          {"runs", runs},
          {"records", records}};
}

std::string render_report(const std::vector<MetricsReport>& reports, ReportFormat format,
                          const ReportContext& context) {
  std::vector<const MetricsReport*> sorted;
  for (const auto& r : reports) sorted.push_back(&r);
  std::stable_sort(sorted.begin(), sorted.end(), [](const MetricsReport* a, const MetricsReport* b) {
    return std::tie(a->config, a->dataset) < std::tie(b->config, b->dataset);
  });
  const auto reference = context.reference ? *context.reference : load_reference_metrics();

  if (format == ReportFormat::Machine) {
    nlohmann::ordered_json j;
    j["schema"] = "sceneforge-eval-report";
    j["version"] = kReportSchemaVersion;
    if (!context.generated_at.empty()) j["generated_at"] = context.generated_at;
    nlohmann::ordered_json by_fp = nlohmann::ordered_json::object();
    for (const auto* r : sorted) {
      auto& slot = by_fp[r->fingerprint];
      if (slot.is_null()) slot = {{"config", r->config}, {"settings", r->config_json}, {"suites", nlohmann::ordered_json::array()}};
      slot["suites"].push_back(to_json(*r));
    }
    j["reports"] = std::move(by_fp);
    j["reference"] = nlohmann::ordered_json::parse(reference.dump());
    return j.dump(2) + "\n";
  }

  std::set<std::string> datasets;
  for (const auto* r : sorted) datasets.insert(r->dataset);
  auto label = [&](const MetricsReport& r) { return datasets.size() > 1 ? r.config + " [" + r.dataset + "]" : r.config; };

  std::ostringstream out;
  out << "# Evaluation report\n\n";
  if (!context.generated_at.empty()) out << "Generated " << context.generated_at << ".\n\n";
  out << "| Model | Error rate (↓) | Avg. prompt completion (↑) | % fulfilled (↑) |\n"
      << "|---|---|---|---|\n";
  for (const auto* r : sorted) {
    out << "| " << label(*r) << " | " << fmt_stat(r->error_rate) << " | " << fmt_stat(r->avg_completion) << " | "
        << fmt_stat(r->pct_fulfilled) << " |\n";
  }
  out << "\nValues are mean ± sample standard deviation across runs.\n\n";

  out << "| Model | Dataset | Kind | Runs | Prompts | Mean time per prompt, s (↓) |\n|---|---|---|---|---|---|\n";
  for (const auto* r : sorted) {
    out << "| " << r->config << " | " << r->dataset << " | " << kind_name(r->kind) << " | " << r->run_count()
        << " | " << r->prompt_count << " | " << fmt_stat(r->mean_time) << " |\n";
  }

  const bool any_buckets = std::any_of(sorted.begin(), sorted.end(),
                                       [](const MetricsReport* r) { return !r->difficulty_error_rates.empty(); });
  if (any_buckets) {
    out << "\n| Model | Easy | Somewhat Easy | Medium | Somewhat Hard | Hard |\n|---|---|---|---|---|---|\n";
    for (const auto* r : sorted) {
      out << "| " << label(*r);
      for (int b = 0; b < 5; ++b) {
        const auto it = r->difficulty_error_rates.find(std::string(bucket_name(static_cast<Bucket>(b))));
        out << " | " << (it == r->difficulty_error_rates.end() ? "n/a" : fmt::format("{:.3f}", it->second));
      }
      out << " |\n";
    }
  }

  bool any_failures = false;
  for (const auto* r : sorted) any_failures = any_failures || !r->failure_tags.empty();
  if (any_failures) {
    out << "\nFailures by tag:\n\n";
    for (const auto* r : sorted) {
      for (const auto& [tag, n] : r->failure_tags) out << "- " << label(*r) << ": " << tag << " × " << n << "\n";
    }
  }

  out << "\n## Reference values (" << reference.value("label", std::string(kReferenceLabel)) << ")\n";
  if (reference.contains("sequential")) {
    out << "\nSequential prompts:\n\n| Model | Error rate (↓) | Avg. prompt completion (↑) | % fulfilled (↑) |\n"
        << "|---|---|---|---|\n";
    for (const auto& row : reference.at("sequential")) {
      out << "| " << row.at("config").get<std::string>() << " | " << fmt_ref(row, "error_rate") << " | "
          << fmt_ref(row, "avg_completion") << " | " << fmt_ref(row, "pct_fulfilled") << " |\n";
    }
  }
  for (const char* key : {"single_empty", "single_scene"}) {
    if (!reference.contains(key)) continue;
    out << "\nSingle prompts, " << (std::string(key) == "single_empty" ? "empty scene" : "furnished scene")
        << ":\n\n| Model | Error mean (↓) | Error sd | Time mean, s (↓) | Time sd |\n|---|---|---|---|---|\n";
    for (const auto& row : reference.at(key)) {
      out << "| " << row.at("config").get<std::string>() << " | " << fmt_ref(row, "error_mean") << " | "
          << fmt_ref(row, "error_sd") << " | " << fmt_ref(row, "time_mean") << " | " << fmt_ref(row, "time_sd")
          << " |\n";
    }
  }
  if (reference.contains("sequential_time")) {
    out << "\nSequential prompts, mean time per prompt:\n\n| Model | Time, s (↓) |\n|---|---|\n";
    for (const auto& row : reference.at("sequential_time")) {
      out << "| " << row.at("config").get<std::string>() << " | " << fmt_ref(row, "time_mean") << " |\n";
    }
  }
  return out.str();
}

void emit_report(const std::vector<MetricsReport>& reports, ReportFormat format, const std::string& path,
                 const ReportContext& context) {
  const auto parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  util::write_file(path, render_report(reports, format, context));
}

}  // namespace sceneforge::eval
