#pragma once

#include "sceneforge/script/script.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sceneforge::pipeline {

enum class Module { Planner, SceneAnalyzer, SkillLibrary, Builder, Inspector };

inline constexpr std::array kModules{Module::Planner, Module::SceneAnalyzer, Module::SkillLibrary, Module::Builder,
                                     Module::Inspector};

/// Also the ChatContext tag of every call the module makes.
std::string_view module_name(Module module);
std::optional<Module> parse_module(std::string_view name);

struct Request {
  std::string text;
  std::string session;
};

struct Instruction {
  std::string text;
  std::size_t index = 1;  // 1-based
  std::size_t plan_size = 1;
};

using Plan = std::vector<Instruction>;

struct ClarifyingQuestion {
  std::string text;
};

struct SceneSummary {
  std::string text;
  std::vector<std::string> relevant_entities;  // all present in the summarized scene
  bool truncated = false;
};

enum class VerdictSource { StaticCheck, ModelCritique };

std::string_view verdict_source_name(VerdictSource source);

/// The suggestion is empty exactly when the verdict passes.
class Verdict {
 public:
  static Verdict pass(VerdictSource source);
  static Verdict fail(std::string suggestion, VerdictSource source);

  [[nodiscard]] bool passed() const { return passed_; }
  [[nodiscard]] const std::string& suggestion() const { return suggestion_; }
  [[nodiscard]] VerdictSource source() const { return source_; }

 private:
  Verdict(bool passed, std::string suggestion, VerdictSource source)
      : passed_(passed), suggestion_(std::move(suggestion)), source_(source) {}

  bool passed_;
  std::string suggestion_;
  VerdictSource source_;
};

struct SkillHint {
  std::vector<std::string> skill_ids;
  std::string text;  // concatenated details, plus any retrieved asset snippets

  [[nodiscard]] bool empty() const { return text.empty(); }
};

/// One Builder call and, when code came back, its inspection.
struct Attempt {
  std::size_t index = 1;
  std::string reply;
  std::optional<script::ScriptSource> code;  // nullopt: the reply had no code block
  std::optional<Verdict> verdict;            // nullopt: not inspected
  double build_seconds = 0;
  double inspect_seconds = 0;
};

struct Generation {
  std::optional<script::ScriptSource> code;  // most recent extracted code
  std::vector<Attempt> attempts;
  bool verified = false;  // the final attempt passed inspection
};

struct StepTimings {
  double analysis = 0;
  double skills = 0;
  double generation = 0;  // all build and inspect calls
  double execution = 0;
  double total = 0;
};

struct Outcome {
  script::Status status = script::Status::Success;
  std::vector<script::Diagnostic> errors;
  std::vector<std::string> log;
  std::string scene_hash_before;
  std::string scene_hash_after;
  // Set when the step aborted before execution (provider failure, context
  // overflow); status is then CompileFailed.
  std::string pipeline_error;
};

struct Episode {
  std::string session;
  Instruction instruction;
  SceneSummary summary;
  SkillHint hint;
  script::ScriptSource code;
  Outcome outcome;
  std::vector<Attempt> attempts;
  bool verified = false;
  std::vector<std::string> warnings;
  std::string started_at;
  std::string closed_at;
  StepTimings timings;
};

class NoCodeBlock : public std::runtime_error {
 public:
  NoCodeBlock() : std::runtime_error("builder reply contains no fenced code block") {}
};

class MalformedPlan : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DuplicateSkillId : public std::runtime_error {
 public:
  explicit DuplicateSkillId(const std::string& id) : std::runtime_error("skill id '" + id + "' is already registered") {}
};

class RunInFlight : public std::runtime_error {
 public:
  RunInFlight() : std::runtime_error("a request is already running for this session") {}
};

nlohmann::ordered_json to_json(const Verdict& verdict);
nlohmann::ordered_json to_json(const Attempt& attempt);
nlohmann::ordered_json to_json(const SceneSummary& summary);
nlohmann::ordered_json to_json(const Outcome& outcome);
/// The append-only episode-log record.
nlohmann::ordered_json to_json(const Episode& episode);

}  // namespace sceneforge::pipeline
