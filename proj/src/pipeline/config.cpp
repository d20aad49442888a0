#include "sceneforge/pipeline/config.hpp"

#include "sceneforge/util/hash.hpp"
#include "sceneforge/util/text.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>

namespace sceneforge::pipeline {

void PipelineConfig::validate() const {
  if (max_inspections < 1) throw std::invalid_argument("max_inspections (T) must be at least 1");
  if (max_clarify_rounds < 1) throw std::invalid_argument("max_clarify_rounds must be at least 1");
}

PipelineConfig preset(std::string_view name) {
  PipelineConfig c;
  c.enable_planner = false;
  c.enable_scene_analyzer = false;
  c.enable_skill_library = false;
  c.enable_inspector = false;
  c.builder_few_shot = true;
  if (name == "zero-shot") {
    c.builder_few_shot = false;
  } else if (name == "few-shot") {
  } else if (name == "+SA") {
    c.enable_scene_analyzer = true;
  } else if (name == "+SA+SL") {
    c.enable_scene_analyzer = c.enable_skill_library = true;
  } else if (name == "+SA+I") {
    c.enable_scene_analyzer = c.enable_inspector = true;
  } else if (name == "full LLMR" || name == "full") {
    c.enable_scene_analyzer = c.enable_skill_library = c.enable_inspector = true;
    name = "full LLMR";
  } else if (name == "interactive") {
    c.enable_scene_analyzer = c.enable_skill_library = c.enable_inspector = c.enable_planner = true;
  } else {
    throw UnknownPreset(std::string(name));
  }
  c.name = std::string(name);
  return c;
}

std::vector<std::string> preset_names() {
  return {"zero-shot", "few-shot", "+SA", "+SA+SL", "+SA+I", "full LLMR", "interactive"};
}

nlohmann::ordered_json to_json(const PipelineConfig& c) {
  nlohmann::ordered_json memory;
  for (const auto& [m, mode] : c.memory) memory[std::string(module_name(m))] = mode.to_string();
  nlohmann::ordered_json paths = nlohmann::ordered_json::object();
  for (const auto& [m, p] : c.metaprompt_paths) paths[std::string(module_name(m))] = p;
  return {{"name", c.name},
          {"enable_planner", c.enable_planner},
          {"enable_scene_analyzer", c.enable_scene_analyzer},
          {"enable_skill_library", c.enable_skill_library},
          {"enable_inspector", c.enable_inspector},
          {"builder_few_shot", c.builder_few_shot},
          {"max_inspections", c.max_inspections},
          {"memory", memory},
          {"metaprompt_paths", paths},
          {"builder_examples_path", c.builder_examples_path},
          {"skills_path", c.skills_path},
          {"provider", nlohmann::ordered_json::parse(c.provider.dump())},
          {"window", c.window},
          {"scene_token_budget", c.scene_token_budget},
          {"halt_on_failure", c.halt_on_failure},
          {"max_clarify_rounds", c.max_clarify_rounds},
          {"params",
           {{"model_id", c.params.model_id},
            {"temperature", c.params.temperature},
            {"max_output_tokens", c.params.max_output_tokens},
            {"timeout_seconds", c.params.timeout.count()}}}};
}

PipelineConfig config_from_json(const nlohmann::json& j) {
  PipelineConfig c = preset(j.value("preset", std::string("full LLMR")));
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("name", c.name);
  get("enable_planner", c.enable_planner);
  get("enable_scene_analyzer", c.enable_scene_analyzer);
  get("enable_skill_library", c.enable_skill_library);
  get("enable_inspector", c.enable_inspector);
  get("builder_few_shot", c.builder_few_shot);
  get("max_inspections", c.max_inspections);
  get("builder_examples_path", c.builder_examples_path);
  get("skills_path", c.skills_path);
  get("window", c.window);
  get("scene_token_budget", c.scene_token_budget);
  get("halt_on_failure", c.halt_on_failure);
  get("max_clarify_rounds", c.max_clarify_rounds);
  if (j.contains("provider")) c.provider = j.at("provider");
  auto module_of = [](const std::string& key) {
    const auto m = parse_module(key);
    if (!m) throw std::invalid_argument("unknown module '" + key + "'");
    return *m;
  };
  if (j.contains("memory")) {
    for (const auto& [key, value] : j.at("memory").items()) {
      c.memory.insert_or_assign(module_of(key), MemoryMode::parse(value.get<std::string>()));
    }
  }
  if (j.contains("metaprompt_paths")) {
    for (const auto& [key, value] : j.at("metaprompt_paths").items()) {
      c.metaprompt_paths[module_of(key)] = value.get<std::string>();
    }
  }
  if (j.contains("params")) {
    const auto& p = j.at("params");
    c.params.model_id = p.value("model_id", c.params.model_id);
    c.params.temperature = p.value("temperature", c.params.temperature);
    c.params.max_output_tokens = p.value("max_output_tokens", c.params.max_output_tokens);
    c.params.timeout = std::chrono::seconds(p.value("timeout_seconds", c.params.timeout.count()));
  }
  c.validate();
  return c;
}

PipelineConfig load_config(const std::string& preset_or_path) {
  const auto names = preset_names();
  if (preset_or_path == "full" || std::find(names.begin(), names.end(), preset_or_path) != names.end()) {
    return preset(preset_or_path);
  }
  if (!std::filesystem::exists(preset_or_path)) throw UnknownPreset(preset_or_path);
  auto c = config_from_json(nlohmann::json::parse(util::read_file(preset_or_path)));
  // Relative paths inside a config file resolve against the file.
  const auto base = std::filesystem::path(preset_or_path).parent_path();
  auto resolve = [&](std::string& p) {
    if (!p.empty() && std::filesystem::path(p).is_relative()) p = (base / p).string();
  };
  resolve(c.builder_examples_path);
  resolve(c.skills_path);
  for (auto& [m, p] : c.metaprompt_paths) resolve(p);
  if (c.provider.is_object() && c.provider.contains("fixture")) {
    auto fixture = c.provider["fixture"].get<std::string>();
    resolve(fixture);
    c.provider["fixture"] = fixture;
  }
  return c;
}

std::string fingerprint(const PipelineConfig& config) {
  auto j = to_json(config);
  j.erase("name");
  return util::sha256_hex(j.dump()).substr(0, 16);
}

std::string data_dir() {
  if (const char* env = std::getenv("SCENEFORGE_DATA"); env != nullptr && *env != '\0') return env;
  return SCENEFORGE_DATA_DIR;
}

const std::string& Metaprompts::of(Module module) const {
  static const std::string kEmpty;
  const auto it = text.find(module);
  return it == text.end() ? kEmpty : it->second;
}

std::string Metaprompts::builder_system(bool few_shot) const {
  std::string out = of(Module::Builder);
  if (few_shot && !builder_examples.empty()) out += "\n\n" + builder_examples;
  return out;
}

Metaprompts Metaprompts::load(const PipelineConfig& config) {
  const std::filesystem::path dir = std::filesystem::path(data_dir()) / "metaprompts";
  Metaprompts m;
  for (Module module : kModules) {
    const auto it = config.metaprompt_paths.find(module);
    const auto path = it != config.metaprompt_paths.end() ? it->second
                                                          : (dir / (std::string(module_name(module)) + ".txt")).string();
    m.text[module] = util::read_file(path);
  }
  m.builder_examples = util::read_file(
      config.builder_examples_path.empty() ? (dir / "builder_examples.txt").string() : config.builder_examples_path);
  return m;
}

}  // namespace sceneforge::pipeline
