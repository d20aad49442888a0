#pragma once

#include "sceneforge/llm/provider.hpp"
#include "sceneforge/pipeline/config.hpp"
#include "sceneforge/pipeline/memory.hpp"
#include "sceneforge/pipeline/replies.hpp"
#include "sceneforge/pipeline/skills.hpp"
#include "sceneforge/pipeline/types.hpp"
#include "sceneforge/retrieval/retrieval.hpp"
#include "sceneforge/scene/scene.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace sceneforge::pipeline {

enum class Stage { Analysis, Plan, Clarify, Skills, BuildAttempt, InspectVerdict, Execute, EpisodeClosed, Error };

std::string_view stage_name(Stage stage);

class Observer {
 public:
  virtual ~Observer() = default;
  virtual void on_event(Stage stage, const nlohmann::ordered_json& payload) = 0;
};

/// Returns the user's answer, or nullopt to leave the question pending.
using ClarifyHandler = std::function<std::optional<std::string>(const ClarifyingQuestion&)>;

/// Catalog and providers behind the object-retriever skill.
struct AssetSource {
  retrieval::Catalog catalog;
  retrieval::Providers providers;
  retrieval::RetrievalOptions options;
  std::shared_ptr<retrieval::RetrievalCache> cache;
};

inline constexpr std::string_view kObjectRetrieverSkill = "object-retriever";

using Dialogue = std::vector<std::pair<std::string, std::string>>;  // (question, answer)

struct RunResult {
  scene::Scene scene;
  Plan plan;
  std::vector<Episode> episodes;
  std::optional<ClarifyingQuestion> pending_question;  // set: nothing was generated
  std::vector<std::string> warnings;
  double seconds = 0;

  [[nodiscard]] bool all_succeeded() const;
};

/// One session's pipeline. Owns the module memories and the episode log; the
/// scene is passed in and returned by value.
class Orchestrator {
 public:
  using WallClock = std::function<std::string()>;
  using Stopwatch = std::function<double()>;  // monotonic seconds

  Orchestrator(llm::Provider& provider, PipelineConfig config, Metaprompts prompts, SkillLibrary skills);
  /// Loads metaprompts and skills from the paths in `config`.
  Orchestrator(llm::Provider& provider, PipelineConfig config);

  void set_observer(Observer* observer) { observer_ = observer; }
  void set_clarify_handler(ClarifyHandler handler) { clarify_ = std::move(handler); }
  void set_asset_source(std::shared_ptr<AssetSource> assets) { assets_ = std::move(assets); }
  void set_wall_clock(WallClock clock) { wall_clock_ = std::move(clock); }
  void set_stopwatch(Stopwatch stopwatch) { stopwatch_ = std::move(stopwatch); }
  void set_session(std::string session) { session_ = std::move(session); }
  /// Called with the scene after every step of run_request.
  void set_scene_listener(std::function<void(const scene::Scene&)> listener) { scene_listener_ = std::move(listener); }
  /// Appends one JSON line per closed episode.
  void set_episode_log(std::string path) { episode_log_ = std::move(path); }

  SceneSummary analyze_scene(std::string_view request, const scene::Scene& scene);
  std::variant<Plan, ClarifyingQuestion> plan(const Request& request, const SceneSummary& summary,
                                              const Dialogue& dialogue = {});
  SkillHint retrieve_skills(const Instruction& instruction);
  /// Throws NoCodeBlock; the raw reply is stored in *reply when given.
  script::ScriptSource build(const Instruction& instruction, const SceneSummary& summary, const SkillHint& hint,
                             const std::optional<std::string>& suggestion, std::string* reply = nullptr);
  Verdict inspect(const Instruction& instruction, const SceneSummary& summary, const script::ScriptSource& code,
                  const scene::Scene& scene);
  Generation generate_code_with_inspection(const Instruction& instruction, const SceneSummary& summary,
                                           const SkillHint& hint, const scene::Scene& scene);
  /// Total: per-step failures are recorded in the episodes. Throws RunInFlight
  /// when called concurrently on one orchestrator.
  RunResult run_request(const Request& request, const scene::Scene& scene);

  /// Applies every module's memory mode to its stored episodes.
  void trim_memory() { memory_.trim_all(); }

  [[nodiscard]] const ModuleMemory& memory() const { return memory_; }
  [[nodiscard]] const std::vector<Episode>& episodes() const { return episodes_; }
  [[nodiscard]] const PipelineConfig& config() const { return config_; }
  [[nodiscard]] SkillLibrary& skills() { return skills_; }
  [[nodiscard]] const Metaprompts& metaprompts() const { return prompts_; }

  /// Warnings raised since the last call.
  std::vector<std::string> take_warnings();

 private:
  std::string complete(Module module, std::vector<llm::Message> messages);
  std::vector<llm::Message> start_context(Module module, std::string system) const;
  std::string scene_text(std::string_view request, std::string_view system, const scene::Scene& scene,
                         bool& truncated) const;
  std::string asset_hint(const SkillChoice& choice);
  void warn(std::string message);
  void emit(Stage stage, nlohmann::ordered_json payload);
  [[nodiscard]] double now() const { return stopwatch_(); }
  Episode run_step(const Instruction& instruction, scene::Scene& scene);

  llm::Provider& provider_;
  PipelineConfig config_;
  Metaprompts prompts_;
  SkillLibrary skills_;
  ModuleMemory memory_;
  std::vector<Episode> episodes_;
  std::vector<std::string> warnings_;
  std::string session_;
  std::string episode_log_;
  Observer* observer_ = nullptr;
  ClarifyHandler clarify_;
  std::shared_ptr<AssetSource> assets_;
  WallClock wall_clock_;
  Stopwatch stopwatch_;
  std::function<void(const scene::Scene&)> scene_listener_;
  std::atomic<bool> running_{false};
};

}  // namespace sceneforge::pipeline
