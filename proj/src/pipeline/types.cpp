#include "sceneforge/pipeline/types.hpp"

#include "sceneforge/util/hash.hpp"

namespace sceneforge::pipeline {

std::string_view module_name(Module module) {
  switch (module) {
    case Module::Planner: return "planner";
    case Module::SceneAnalyzer: return "scene_analyzer";
    case Module::SkillLibrary: return "skill_library";
    case Module::Builder: return "builder";
    case Module::Inspector: return "inspector";
  }
  return "unknown";
}

std::optional<Module> parse_module(std::string_view name) {
  for (Module m : kModules) {
    if (module_name(m) == name) return m;
  }
  return std::nullopt;
}

std::string_view verdict_source_name(VerdictSource source) {
  return source == VerdictSource::StaticCheck ? "static_check" : "model_critique";
}

Verdict Verdict::pass(VerdictSource source) { return {true, "", source}; }

Verdict Verdict::fail(std::string suggestion, VerdictSource source) {
  if (suggestion.empty()) suggestion = "The inspector rejected the code without giving a reason.";
  return {false, std::move(suggestion), source};
}

nlohmann::ordered_json to_json(const Verdict& verdict) {
  return {{"verdict", verdict.passed() ? "pass" : "fail"},
          {"suggestion", verdict.suggestion()},
          {"source", verdict_source_name(verdict.source())}};
}

nlohmann::ordered_json to_json(const Attempt& attempt) {
  nlohmann::ordered_json j{{"index", attempt.index}};
  j["code"] = attempt.code ? nlohmann::ordered_json(attempt.code->text) : nlohmann::ordered_json(nullptr);
  j["verdict"] = attempt.verdict ? to_json(*attempt.verdict) : nlohmann::ordered_json(nullptr);
  j["build_seconds"] = attempt.build_seconds;
  j["inspect_seconds"] = attempt.inspect_seconds;
  return j;
}

nlohmann::ordered_json to_json(const SceneSummary& summary) {
  return {{"text", summary.text}, {"relevant_entities", summary.relevant_entities}, {"truncated", summary.truncated}};
}

nlohmann::ordered_json to_json(const Outcome& outcome) {
  return {{"status", script::status_name(outcome.status)},
          {"errors", script::diagnostics_json(outcome.errors)},
          {"log", outcome.log},
          {"scene_hash_before", outcome.scene_hash_before},
          {"scene_hash_after", outcome.scene_hash_after},
          {"pipeline_error", outcome.pipeline_error}};
}

nlohmann::ordered_json to_json(const Episode& episode) {
  nlohmann::ordered_json attempts = nlohmann::ordered_json::array();
  for (const auto& a : episode.attempts) attempts.push_back(to_json(a));
  return {{"session", episode.session},
          {"step", episode.instruction.index},
          {"plan_size", episode.instruction.plan_size},
          {"instruction", episode.instruction.text},
          {"summary_digest", util::sha256_hex(episode.summary.text)},
          {"skills", episode.hint.skill_ids},
          {"code", episode.code.text},
          {"verified", episode.verified},
          {"outcome", to_json(episode.outcome)},
          {"attempts", attempts},
          {"warnings", episode.warnings},
          {"started_at", episode.started_at},
          {"closed_at", episode.closed_at},
          {"durations",
           {{"analysis", episode.timings.analysis},
            {"skills", episode.timings.skills},
            {"generation", episode.timings.generation},
            {"execution", episode.timings.execution},
            {"total", episode.timings.total}}}};
}

}  // namespace sceneforge::pipeline
