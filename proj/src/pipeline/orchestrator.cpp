#include "sceneforge/pipeline/orchestrator.hpp"

#include "sceneforge/scene/hierarchy.hpp"
#include "sceneforge/util/text.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>

namespace sceneforge::pipeline {

namespace {

double steady_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

std::string fenced(std::string_view code) {
  std::string out = "```scenescript\n";
  out += code;
  if (out.back() != '\n') out += '\n';
  out += "```";
  return out;
}

std::string summary_block(const SceneSummary& summary) {
  std::string out = "Scene summary:\n" + summary.text;
  if (!summary.relevant_entities.empty()) out += "\nRelevant entities: " + util::join(summary.relevant_entities, ", ");
  return out;
}

std::string dry_run_report(const script::Program& program, const script::ExecutionOutcome& run) {
  std::string out;
  for (const auto& d : run.errors) {
    const auto* e = std::get_if<script::RuntimeError>(&d);
    if (e == nullptr) continue;
    const auto& at = program.statements.at(e->statement_index);
    out += "line " + std::to_string(at.line) + ": " + e->message + "\n";
  }
  return out;
}

struct FlagReset {
  std::atomic<bool>& flag;
  ~FlagReset() { flag = false; }
};

SkillLibrary load_skills(const PipelineConfig& config) {
  const auto path = config.skills_path.empty() ? (std::filesystem::path(data_dir()) / "skills" / "skills.json").string()
                                               : config.skills_path;
  return SkillLibrary::load(path);
}

}  // namespace

std::string_view stage_name(Stage stage) {
  switch (stage) {
    case Stage::Analysis: return "analysis";
    case Stage::Plan: return "plan";
    case Stage::Clarify: return "clarify";
    case Stage::Skills: return "skills";
    case Stage::BuildAttempt: return "build_attempt";
    case Stage::InspectVerdict: return "inspect_verdict";
    case Stage::Execute: return "execute";
    case Stage::EpisodeClosed: return "episode_closed";
    case Stage::Error: return "error";
  }
  return "error";
}

bool RunResult::all_succeeded() const {
  if (pending_question || episodes.empty()) return false;
  for (const auto& e : episodes) {
    if (e.outcome.status != script::Status::Success) return false;
  }
  return true;
}

Orchestrator::Orchestrator(llm::Provider& provider, PipelineConfig config, Metaprompts prompts, SkillLibrary skills)
    : provider_(provider),
      config_(std::move(config)),
      prompts_(std::move(prompts)),
      skills_(std::move(skills)),
      memory_(config_.memory),
      wall_clock_(util::utc_timestamp),
      stopwatch_(steady_seconds) {
  config_.validate();
}

Orchestrator::Orchestrator(llm::Provider& provider, PipelineConfig config)
    : Orchestrator(provider, config, Metaprompts::load(config), load_skills(config)) {}

std::vector<std::string> Orchestrator::take_warnings() { return std::exchange(warnings_, {}); }

void Orchestrator::warn(std::string message) { warnings_.push_back(std::move(message)); }

void Orchestrator::emit(Stage stage, nlohmann::ordered_json payload) {
  if (observer_ != nullptr) observer_->on_event(stage, payload);
}

std::string Orchestrator::complete(Module module, std::vector<llm::Message> messages) {
  llm::ChatContext context{std::move(messages), std::string(module_name(module))};
  return provider_.complete(context, config_.params);
}

std::vector<llm::Message> Orchestrator::start_context(Module module, std::string system) const {
  std::vector<llm::Message> messages{{llm::Role::System, std::move(system)}};
  auto episodes = memory_.messages(module);
  messages.insert(messages.end(), std::make_move_iterator(episodes.begin()), std::make_move_iterator(episodes.end()));
  return messages;
}

std::string Orchestrator::scene_text(std::string_view request, std::string_view system, const scene::Scene& scene,
                                     bool& truncated) const {
  auto full = scene::serialize_hierarchy(scene);
  std::size_t budget = config_.scene_token_budget;
  if (budget == 0) {
    // Room left in the window after the fixed parts of the context and the
    // reply, with headroom for the framing text.
    const std::size_t fixed = llm::estimate_tokens(system) + llm::estimate_tokens(request) +
                              config_.params.max_output_tokens + 64;
    budget = provider_.window() > fixed ? provider_.window() - fixed : 0;
  }
  truncated = llm::estimate_tokens(full) > budget;
  return truncated ? scene::serialize_top_level_names(scene) : full;
}

SceneSummary Orchestrator::analyze_scene(std::string_view request, const scene::Scene& scene) {
  SceneSummary summary;
  if (!config_.enable_scene_analyzer) {
    summary.text = scene_text(request, prompts_.builder_system(config_.builder_few_shot), scene, summary.truncated);
    return summary;
  }
  const auto& system = prompts_.of(Module::SceneAnalyzer);
  auto messages = start_context(Module::SceneAnalyzer, system);
  const auto hierarchy = scene_text(request, system, scene, summary.truncated);
  std::string user = summary.truncated
                         ? "Scene hierarchy (top-level entity names only; the full hierarchy is over budget):\n"
                         : "Scene hierarchy:\n";
  user += hierarchy;
  user += "\n\nRequest: ";
  user += request;
  messages.push_back({llm::Role::User, std::move(user)});

  const auto reply = complete(Module::SceneAnalyzer, std::move(messages));
  memory_.record(Module::SceneAnalyzer, {std::string(request), reply});

  auto parsed = parse_analyzer_reply(reply);
  if (!parsed.relevant) {
    warn("scene analyzer reply has no 'Relevant:' line; using it as free text");
    summary.text = std::string(util::trim(reply));
  } else {
    summary.text = std::move(parsed.summary);
    for (auto& name : *parsed.relevant) {
      if (scene.find(name) == nullptr) {
        warn("scene analyzer named '" + name + "', which is not in the scene");
      } else if (std::find(summary.relevant_entities.begin(), summary.relevant_entities.end(), name) ==
                 summary.relevant_entities.end()) {
        summary.relevant_entities.push_back(std::move(name));
      }
    }
  }
  emit(Stage::Analysis, {{"request", request}, {"summary", to_json(summary)}});
  return summary;
}

std::variant<Plan, ClarifyingQuestion> Orchestrator::plan(const Request& request, const SceneSummary& summary,
                                                          const Dialogue& dialogue) {
  auto messages = start_context(Module::Planner, prompts_.of(Module::Planner));
  messages.push_back({llm::Role::User, summary_block(summary) + "\n\nRequest: " + request.text});
  for (const auto& [question, answer] : dialogue) {
    messages.push_back({llm::Role::Assistant, "QUESTION: " + question});
    messages.push_back({llm::Role::User, answer});
  }
  const auto reply = complete(Module::Planner, std::move(messages));

  std::variant<Plan, ClarifyingQuestion> result;
  try {
    result = parse_plan_reply(reply);
  } catch (const MalformedPlan& e) {
    warn(std::string(e.what()) + "; running the request as a single step");
    result = Plan{{request.text, 1, 1}};
  }
  if (const auto* q = std::get_if<ClarifyingQuestion>(&result)) {
    emit(Stage::Clarify, {{"question", q->text}});
  } else {
    memory_.record(Module::Planner, {request.text, reply});
    nlohmann::ordered_json steps = nlohmann::ordered_json::array();
    for (const auto& i : std::get<Plan>(result)) steps.push_back(i.text);
    emit(Stage::Plan, {{"steps", steps}});
  }
  return result;
}

std::string Orchestrator::asset_hint(const SkillChoice& choice) {
  std::string out;
  for (const auto& label : choice.arguments) {
    if (!assets_) {
      warn("no asset catalog is configured; ignoring object-retriever label '" + label + "'");
      continue;
    }
    try {
      const auto found = retrieval::retrieve(label, assets_->catalog, assets_->providers, assets_->options,
                                             assets_->cache.get());
      const auto payload = retrieval::instantiate_payload(retrieval::load_payload(found.chosen, assets_->catalog),
                                                          retrieval::asset_name(label));
      out += "Retrieved asset for '" + label + "' (catalog entry " + found.chosen.id +
             "). Place it with exactly these statements:\n" + fenced(payload) + "\n";
    } catch (const std::exception& e) {
      warn("asset retrieval for '" + label + "' failed: " + e.what());
    }
  }
  return out;
}

SkillHint Orchestrator::retrieve_skills(const Instruction& instruction) {
  auto messages = start_context(Module::SkillLibrary,
                                prompts_.of(Module::SkillLibrary) + "\n\nAvailable skills:\n" + skills_.summaries());
  messages.push_back({llm::Role::User, "Request: " + instruction.text});
  const auto reply = complete(Module::SkillLibrary, std::move(messages));
  memory_.record(Module::SkillLibrary, {instruction.text, reply});

  SkillHint hint;
  for (const auto& choice : parse_skill_reply(reply)) {
    const Skill* skill = skills_.find(choice.id);
    if (skill == nullptr) {
      warn("skill library selected unknown skill '" + choice.id + "'");
      continue;
    }
    if (std::find(hint.skill_ids.begin(), hint.skill_ids.end(), skill->id) != hint.skill_ids.end()) continue;
    hint.skill_ids.push_back(skill->id);
    if (!hint.text.empty()) hint.text += "\n";
    hint.text += "## Skill: " + skill->id + "\n" + skill->details;
    if (!hint.text.empty() && hint.text.back() != '\n') hint.text += '\n';
    if (skill->id == kObjectRetrieverSkill) hint.text += asset_hint(choice);
  }
  emit(Stage::Skills, {{"step", instruction.index}, {"skills", hint.skill_ids}});
  return hint;
}

script::ScriptSource Orchestrator::build(const Instruction& instruction, const SceneSummary& summary,
                                         const SkillHint& hint, const std::optional<std::string>& suggestion,
                                         std::string* reply) {
  auto messages = start_context(Module::Builder, prompts_.builder_system(config_.builder_few_shot));
  std::string user = summary_block(summary);
  if (!hint.empty()) user += "\n\nSkills:\n" + hint.text;
  user += "\n\nInstruction: " + instruction.text;
  if (suggestion) user += "\n\nInspector feedback on your previous attempt:\n" + *suggestion;
  messages.push_back({llm::Role::User, std::move(user)});

  auto text = complete(Module::Builder, std::move(messages));
  auto code = extract_code_block(text);
  if (reply != nullptr) *reply = std::move(text);
  return {"", std::move(code), script::Origin::Builder};
}

Verdict Orchestrator::inspect(const Instruction& instruction, const SceneSummary& summary,
                              const script::ScriptSource& code, const scene::Scene& scene) {
  const auto compiled = script::compile(code);
  if (!compiled.ok()) return Verdict::fail(script::format_diagnostics(compiled.errors), VerdictSource::StaticCheck);

  const auto run = script::execute(*compiled.program, scene);
  const std::string dry = run.ok() ? "" : dry_run_report(*compiled.program, run);
  auto static_verdict = [&] {
    return dry.empty() ? Verdict::pass(VerdictSource::StaticCheck)
                       : Verdict::fail("The script compiles but fails against the current scene:\n" + dry,
                                       VerdictSource::StaticCheck);
  };

  auto messages = start_context(Module::Inspector, prompts_.of(Module::Inspector));
  std::string user = summary_block(summary) + "\n\nCode:\n" + fenced(code.text) + "\n\nInstruction: " + instruction.text;
  if (!dry.empty()) user += "\n\nDry run against the current scene:\n" + dry;
  messages.push_back({llm::Role::User, std::move(user)});

  std::string reply;
  try {
    reply = complete(Module::Inspector, std::move(messages));
  } catch (const llm::ProviderError& e) {
    warn(std::string("inspector model unavailable (") + e.what() + "); using the static verdict");
    return static_verdict();
  }
  memory_.record(Module::Inspector, {instruction.text, reply});

  auto verdict = parse_verdict_reply(reply);
  if (!verdict) {
    warn("inspector reply has no PASS/FAIL line; using the static verdict");
    return static_verdict();
  }
  if (dry.empty()) return *verdict;
  if (verdict->passed()) return static_verdict();
  return Verdict::fail(verdict->suggestion() + "\n\nDry run against the current scene:\n" + dry,
                       VerdictSource::ModelCritique);
}

Generation Orchestrator::generate_code_with_inspection(const Instruction& instruction, const SceneSummary& summary,
                                                       const SkillHint& hint, const scene::Scene& scene) {
  const std::size_t limit = config_.enable_inspector ? config_.max_inspections : 1;
  Generation g;
  std::optional<std::string> suggestion;
  bool verdict = false;
  for (std::size_t t = 0; t < limit && !verdict; ++t) {
    Attempt a;
    a.index = t + 1;
    double start = now();
    try {
      auto code = build(instruction, summary, hint, suggestion, &a.reply);
      code.id = session_ + "/step" + std::to_string(instruction.index) + "/attempt" + std::to_string(a.index);
      a.code = code;
      g.code = std::move(code);
    } catch (const NoCodeBlock& e) {
      warn(std::string(e.what()) + " (attempt " + std::to_string(a.index) + ")");
      suggestion = "Your reply contained no code. Reply with the complete script inside a ``` fenced block.";
    }
    a.build_seconds = now() - start;
    emit(Stage::BuildAttempt, {{"step", instruction.index},
                               {"attempt", a.index},
                               {"code", a.code ? nlohmann::ordered_json(a.code->text) : nlohmann::ordered_json()}});
    if (a.code && config_.enable_inspector) {
      start = now();
      auto v = inspect(instruction, summary, *a.code, scene);
      a.inspect_seconds = now() - start;
      verdict = v.passed();
      if (!verdict) suggestion = v.suggestion();
      auto payload = to_json(v);
      payload["step"] = instruction.index;
      payload["attempt"] = a.index;
      emit(Stage::InspectVerdict, payload);
      a.verdict = std::move(v);
    }
    g.attempts.push_back(std::move(a));
  }
  g.verified = verdict;
  return g;
}

Episode Orchestrator::run_step(const Instruction& instruction, scene::Scene& scene) {
  Episode ep;
  ep.session = session_;
  ep.instruction = instruction;
  ep.started_at = wall_clock_();
  const auto first_warning = warnings_.size();
  const double t0 = now();
  ep.outcome.scene_hash_before = scene::scene_hash(scene);
  try {
    double t = now();
    ep.summary = analyze_scene(instruction.text, scene);
    ep.timings.analysis = now() - t;
    if (config_.enable_skill_library) {
      t = now();
      ep.hint = retrieve_skills(instruction);
      ep.timings.skills = now() - t;
    }
    t = now();
    auto generation = generate_code_with_inspection(instruction, ep.summary, ep.hint, scene);
    ep.timings.generation = now() - t;
    ep.attempts = std::move(generation.attempts);
    ep.verified = generation.verified;

    t = now();
    if (generation.code) {
      ep.code = std::move(*generation.code);
      memory_.record(Module::Builder, {instruction.text, fenced(ep.code.text)});
      auto run = script::compile_and_run(ep.code.text, scene);
      ep.outcome.status = run.status;
      ep.outcome.errors = std::move(run.errors);
      ep.outcome.log = std::move(run.log);
      if (run.ok()) scene = std::move(run.scene_after);
    } else {
      ep.outcome.status = script::Status::CompileFailed;
      ep.outcome.errors.emplace_back(
          script::CompileError{script::Phase::Parse, 1, 1, "the builder produced no code block"});
    }
    ep.timings.execution = now() - t;
  } catch (const std::exception& e) {
    ep.outcome.status = script::Status::CompileFailed;
    ep.outcome.pipeline_error = e.what();
    warn(std::string("step ") + std::to_string(instruction.index) + " aborted: " + e.what());
    emit(Stage::Error, {{"step", instruction.index}, {"message", e.what()}});
  }
  ep.outcome.scene_hash_after = scene::scene_hash(scene);
  emit(Stage::Execute, {{"step", instruction.index},
                        {"status", script::status_name(ep.outcome.status)},
                        {"errors", script::diagnostics_json(ep.outcome.errors)},
                        {"scene_hash", ep.outcome.scene_hash_after}});
  memory_.trim_all();
  ep.timings.total = now() - t0;
  ep.closed_at = wall_clock_();
  ep.warnings.assign(warnings_.begin() + static_cast<std::ptrdiff_t>(first_warning), warnings_.end());

  const auto record = to_json(ep);
  if (!episode_log_.empty()) {
    std::ofstream log(episode_log_, std::ios::app | std::ios::binary);
    log << record.dump() << '\n';
  }
  emit(Stage::EpisodeClosed, record);
  return ep;
}

RunResult Orchestrator::run_request(const Request& request, const scene::Scene& scene) {
  if (util::trim(request.text).empty()) throw std::invalid_argument("request text is empty");
  if (running_.exchange(true)) throw RunInFlight();
  FlagReset reset{running_};
  if (!request.session.empty()) session_ = request.session;

  RunResult result;
  result.scene = scene;
  const double t0 = now();

  Plan steps{{request.text, 1, 1}};
  if (config_.enable_planner) {
    try {
      const auto summary = analyze_scene(request.text, scene);
      Dialogue dialogue;
      auto reply = plan(request, summary, dialogue);
      while (const auto* question = std::get_if<ClarifyingQuestion>(&reply)) {
        std::optional<std::string> answer;
        if (clarify_ && dialogue.size() < config_.max_clarify_rounds) answer = clarify_(*question);
        if (!answer || util::trim(*answer).empty()) {
          result.pending_question = *question;
          break;
        }
        dialogue.emplace_back(question->text, *answer);
        reply = plan(request, summary, dialogue);
      }
      if (result.pending_question) {
        memory_.trim_all();
        result.warnings = take_warnings();
        result.seconds = now() - t0;
        return result;
      }
      steps = std::get<Plan>(std::move(reply));
    } catch (const llm::ProviderError& e) {
      warn(std::string("planning failed (") + e.what() + "); running the request as a single step");
      emit(Stage::Error, {{"step", 0}, {"message", e.what()}});
      steps = {{request.text, 1, 1}};
    }
  }
  result.plan = steps;

  for (const auto& instruction : steps) {
    auto ep = run_step(instruction, result.scene);
    const bool failed = ep.outcome.status != script::Status::Success;
    episodes_.push_back(ep);
    result.episodes.push_back(std::move(ep));
    if (scene_listener_) scene_listener_(result.scene);
    if (failed && config_.halt_on_failure) break;
  }
  memory_.trim_all();
  result.warnings = take_warnings();
  result.seconds = now() - t0;
  return result;
}

}  // namespace sceneforge::pipeline
