#include "sceneforge/eval/fixtures.hpp"

#include "sceneforge/eval/eval.hpp"
#include "sceneforge/pipeline/config.hpp"
#include "sceneforge/util/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>

namespace sceneforge::eval {

namespace fs = std::filesystem;

namespace {

/// Scripted replies behind a recorder, created fresh per run.
class RecordingScript : public llm::Provider {
 public:
  explicit RecordingScript(const FixtureSpec& spec) : recorder_(scripted_) {
    for (const auto& [tag, replies] : spec.replies) {
      for (const auto& r : replies) scripted_.push(tag, r);
    }
  }

  [[nodiscard]] std::vector<llm::ReplayRecord> records() const { return recorder_.records(); }
  [[nodiscard]] std::size_t remaining() const { return scripted_.remaining(); }
  [[nodiscard]] const std::vector<std::string>& misses() const { return misses_; }

 protected:
  std::string do_complete(const llm::ChatContext& context, const llm::CompletionParams& params) override {
    try {
      return recorder_.complete(context, params);
    } catch (const llm::ScriptExhausted&) {
      misses_.push_back(context.tag);
      throw;
    }
  }

 private:
  llm::ScriptedProvider scripted_;
  llm::RecordingProvider recorder_;
  std::vector<std::string> misses_;
};

class Forward : public llm::Provider {
 public:
  explicit Forward(llm::Provider& inner) : llm::Provider(inner.window()), inner_(inner) {}

 protected:
  std::string do_complete(const llm::ChatContext& context, const llm::CompletionParams& params) override {
    return inner_.complete(context, params);
  }

 private:
  llm::Provider& inner_;
};

}  // namespace

FixtureSpec load_fixture_spec(const std::string& path) {
  const auto j = nlohmann::json::parse(util::read_file(path));
  const auto base = fs::path(path).parent_path();
  auto resolve = [&](const std::string& p) { return fs::path(p).is_relative() ? (base / p).string() : p; };
  FixtureSpec s;
  s.name = j.value("name", fs::path(path).stem().string());
  s.config = j.at("config").get<std::string>();
  if (s.config.find('/') != std::string::npos || s.config.ends_with(".json")) s.config = resolve(s.config);
  s.dataset = resolve(j.at("dataset").get<std::string>());
  s.output = resolve(j.at("output").get<std::string>());
  s.answers = j.value("answers", std::vector<std::string>{});
  s.allow_failures = j.value("allow_failures", true);
  for (const auto& [tag, replies] : j.at("replies").items()) {
    for (const auto& r : replies) {
      // A reply may be a string or an array of lines.
      s.replies[tag].push_back(r.is_string() ? r.get<std::string>()
                                             : util::join(r.get<std::vector<std::string>>(), "\n") + "\n");
    }
  }
  return s;
}

std::vector<llm::ReplayRecord> record_fixture(const FixtureSpec& spec) {
  auto config = pipeline::load_config(spec.config);
  const auto dataset = load_dataset(spec.dataset);

  // The suite destroys its provider after the run; the script outlives it.
  std::unique_ptr<RecordingScript> script;
  SuiteOptions options;
  options.runs = 1;
  options.provider_factory = [&]() -> std::unique_ptr<llm::Provider> {
    script = std::make_unique<RecordingScript>(spec);
    return std::make_unique<Forward>(*script);
  };
  std::size_t next_answer = 0;
  options.clarify = [&](const pipeline::ClarifyingQuestion&) -> std::optional<std::string> {
    if (next_answer >= spec.answers.size()) return std::nullopt;
    return spec.answers[next_answer++];
  };
  std::vector<std::string> failures;
  options.on_record = [&](std::size_t, const RunRecord& r) {
    for (const auto& s : r.steps) {
      if (!s.ok()) failures.push_back(s.prompt + " (" + s.failure_tag + ")");
    }
  };
  run_suite(dataset, config, options);

  if (!script->misses().empty()) {
    throw std::runtime_error("fixture " + spec.name + ": replies ran out for '" + script->misses().front() + "'");
  }
  if (script->remaining() != 0) {
    throw std::runtime_error("fixture " + spec.name + ": " + std::to_string(script->remaining()) +
                             " scripted replies were never requested");
  }
  if (next_answer != spec.answers.size()) {
    throw std::runtime_error("fixture " + spec.name + ": not every clarifying answer was used");
  }
  if (!spec.allow_failures && !failures.empty()) {
    throw std::runtime_error("fixture " + spec.name + ": step failed: " + failures.front());
  }
  return script->records();
}

std::vector<std::string> list_fixture_specs(const std::string& dir) {
  std::vector<std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") out.push_back(e.path().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace sceneforge::eval
