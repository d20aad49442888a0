#pragma once

#include "sceneforge/llm/provider.hpp"
#include "sceneforge/pipeline/memory.hpp"
#include "sceneforge/pipeline/types.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sceneforge::pipeline {

struct PipelineConfig {
  std::string name = "full LLMR";
  bool enable_planner = false;
  bool enable_scene_analyzer = true;
  bool enable_skill_library = true;
  bool enable_inspector = true;
  bool builder_few_shot = true;
  std::size_t max_inspections = 3;  // T
  std::map<Module, MemoryMode> memory = default_memory_modes();
  // Module -> metaprompt file; missing modules use <data>/metaprompts.
  std::map<Module, std::string> metaprompt_paths;
  std::string builder_examples_path;
  std::string skills_path;  // empty: <data>/skills/skills.json
  nlohmann::json provider;  // make_provider() input; null when supplied by the caller
  std::size_t window = llm::kDefaultContextWindow;
  // Serialized-hierarchy budget for the Scene Analyzer; 0 derives it from the
  // window.
  std::size_t scene_token_budget = 0;
  bool halt_on_failure = false;
  std::size_t max_clarify_rounds = 3;
  llm::CompletionParams params;

  /// Throws invalid_argument when T < 1.
  void validate() const;
};

class UnknownPreset : public std::invalid_argument {
 public:
  explicit UnknownPreset(const std::string& name) : std::invalid_argument("unknown pipeline preset '" + name + "'") {}
};

/// The ablation conditions: "zero-shot", "few-shot", "+SA", "+SA+SL", "+SA+I",
/// "full LLMR". "full" is accepted for "full LLMR"; "interactive" is full LLMR
/// with the Planner on.
PipelineConfig preset(std::string_view name);
std::vector<std::string> preset_names();

nlohmann::ordered_json to_json(const PipelineConfig& config);
/// {"preset": name} seeds the config, then any listed field overrides it.
PipelineConfig config_from_json(const nlohmann::json& j);
/// A preset name, or a path to a JSON config file.
PipelineConfig load_config(const std::string& preset_or_path);

/// Short stable digest of every behavior-relevant field.
std::string fingerprint(const PipelineConfig& config);

/// Root of the shipped data files; SCENEFORGE_DATA overrides the build-time path.
std::string data_dir();

struct Metaprompts {
  std::map<Module, std::string> text;
  std::string builder_examples;

  [[nodiscard]] const std::string& of(Module module) const;
  /// The Builder system message: metaprompt, plus few-shot examples when enabled.
  [[nodiscard]] std::string builder_system(bool few_shot) const;

  static Metaprompts load(const PipelineConfig& config);
};

}  // namespace sceneforge::pipeline
