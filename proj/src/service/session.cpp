#include "sceneforge/service/session.hpp"

#include "sceneforge/persist/scene_io.hpp"
#include "sceneforge/pipeline/config.hpp"
#include "sceneforge/scene/hierarchy.hpp"
#include "sceneforge/util/text.hpp"

#include <algorithm>
#include <random>

#include <fmt/format.h>

namespace sceneforge::service {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownSession: return "UnknownSession";
    case ErrorCode::RunInFlight: return "RunInFlight";
    case ErrorCode::NotAwaitingAnswer: return "NotAwaitingAnswer";
    case ErrorCode::Validation: return "ValidationError";
    case ErrorCode::EntityNotFound: return "EntityNotFound";
    case ErrorCode::UnknownGeneration: return "UnknownGeneration";
    case ErrorCode::InvalidScene: return "InvalidScene";
  }
  return "Error";
}

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownSession:
    case ErrorCode::EntityNotFound:
    case ErrorCode::UnknownGeneration: return 404;
    case ErrorCode::RunInFlight:
    case ErrorCode::NotAwaitingAnswer: return 409;
    case ErrorCode::Validation:
    case ErrorCode::InvalidScene: return 400;
  }
  return 500;
}

nlohmann::ordered_json to_json(const PipelineEvent& event) {
  return {{"session", event.session},
          {"sequence", event.sequence},
          {"run", event.run},
          {"stage", event.stage},
          {"timestamp", event.timestamp},
          {"payload", event.payload}};
}

// -- event log -----------------------------------------------------------------

EventLog::EventLog(std::string session, Clock clock) : session_(std::move(session)), clock_(std::move(clock)) {}

std::uint64_t EventLog::append(std::uint64_t run, std::string stage, nlohmann::ordered_json payload) {
  std::uint64_t seq = 0;
  {
    std::lock_guard lock(mutex_);
    seq = events_.size();
    events_.push_back({session_, seq, run, std::move(stage), std::move(payload), clock_()});
  }
  cv_.notify_all();
  return seq;
}

std::vector<PipelineEvent> EventLog::since(std::uint64_t from) const {
  std::lock_guard lock(mutex_);
  if (from >= events_.size()) return {};
  return {events_.begin() + static_cast<std::ptrdiff_t>(from), events_.end()};
}

std::vector<PipelineEvent> EventLog::wait(std::uint64_t from, std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mutex_);
  cv_.wait_for(lock, timeout, [&] { return closed_ || events_.size() > from; });
  if (from >= events_.size()) return {};
  return {events_.begin() + static_cast<std::ptrdiff_t>(from), events_.end()};
}

std::uint64_t EventLog::head() const {
  std::lock_guard lock(mutex_);
  return events_.size();
}

void EventLog::close() {
  {
    std::lock_guard lock(mutex_);
    closed_ = true;
  }
  cv_.notify_all();
}

std::string_view state_name(SessionState state) {
  switch (state) {
    case SessionState::Idle: return "idle";
    case SessionState::Running: return "running";
    case SessionState::AwaitingAnswer: return "awaiting_answer";
  }
  return "idle";
}

// -- session -------------------------------------------------------------------

Session::Session(std::string id, SessionOptions options, scene::Scene initial)
    : id_(std::move(id)),
      options_(std::move(options)),
      events_(id_, options_.wall_clock ? options_.wall_clock : EventLog::Clock(util::utc_timestamp)),
      scene_(std::move(initial)) {
  provider_ = options_.provider_factory ? options_.provider_factory(options_.config)
                                        : llm::make_provider(options_.config.provider);
  orchestrator_ = std::make_unique<pipeline::Orchestrator>(*provider_, options_.config);
  orchestrator_->set_session(id_);
  orchestrator_->set_observer(&forwarder_);
  if (options_.assets) orchestrator_->set_asset_source(options_.assets);
  if (options_.wall_clock) orchestrator_->set_wall_clock(options_.wall_clock);
  orchestrator_->set_clarify_handler([this](const pipeline::ClarifyingQuestion& q) { return await_answer(q); });
  orchestrator_->set_scene_listener([this](const scene::Scene& s) {
    std::lock_guard lock(mutex_);
    scene_ = s;
  });
}

Session::~Session() {
  {
    std::lock_guard lock(mutex_);
    closing_ = true;
  }
  cv_.notify_all();
  if (worker_.joinable()) worker_.join();
  events_.close();
}

void Session::Forwarder::on_event(pipeline::Stage stage, const nlohmann::ordered_json& payload) {
  if (stage == pipeline::Stage::Clarify) {
    // The state flips before the event is visible, so an answer sent in
    // reaction to the event is always accepted.
    std::lock_guard lock(s_.mutex_);
    s_.state_ = SessionState::AwaitingAnswer;
    s_.pending_question_ = payload.value("question", std::string{});
  }
  s_.events_.append(s_.current_run_, std::string(pipeline::stage_name(stage)), payload);
}

std::optional<std::string> Session::await_answer(const pipeline::ClarifyingQuestion& question) {
  std::unique_lock lock(mutex_);
  state_ = SessionState::AwaitingAnswer;
  pending_question_ = question.text;
  cv_.wait(lock, [&] { return closing_ || answer_.has_value(); });
  pending_question_.reset();
  if (closing_) return std::nullopt;
  auto out = std::move(answer_);
  answer_.reset();
  state_ = SessionState::Running;
  return out;
}

std::uint64_t Session::submit(const std::string& text) {
  if (util::trim(text).empty()) throw ServiceError(ErrorCode::Validation, "prompt text is empty");
  std::unique_lock lock(mutex_);
  if (state_ != SessionState::Idle) throw ServiceError(ErrorCode::RunInFlight, "a request is already running");
  state_ = SessionState::Running;
  const auto run = ++runs_;
  current_run_ = run;
  auto start = scene_;
  lock.unlock();
  if (worker_.joinable()) worker_.join();  // the previous worker has finished: state was Idle
  worker_ = std::thread(&Session::run_worker, this, run, text, std::move(start));
  return run;
}

void Session::run_worker(std::uint64_t run, std::string text, scene::Scene start) {
  std::optional<pipeline::RunResult> result;
  std::string failure;
  try {
    result = orchestrator_->run_request({text, id_}, start);
  } catch (const std::exception& e) {
    failure = e.what();
  }
  if (!failure.empty()) {
    events_.append(run, "error", {{"step", 0}, {"message", failure}});
  } else if (result->pending_question) {
    events_.append(run, "error",
                   {{"step", 0}, {"message", "the planner question was left unanswered; nothing was generated"}});
  } else if (result->episodes.size() < result->plan.size()) {
    events_.append(run, "error",
                   {{"step", result->episodes.size()},
                    {"message", fmt::format("run halted after step {} of {}", result->episodes.size(),
                                            result->plan.size())}});
  }
  {
    std::lock_guard lock(mutex_);
    if (result) {
      scene_ = result->scene;
      episodes_.insert(episodes_.end(), result->episodes.begin(), result->episodes.end());
    }
    state_ = SessionState::Idle;
    pending_question_.reset();
    answer_.reset();
  }
  cv_.notify_all();
}

void Session::respond(const std::string& answer) {
  if (util::trim(answer).empty()) throw ServiceError(ErrorCode::Validation, "answer text is empty");
  {
    std::lock_guard lock(mutex_);
    if (state_ != SessionState::AwaitingAnswer || answer_.has_value()) {
      throw ServiceError(ErrorCode::NotAwaitingAnswer, "the session is not waiting for an answer");
    }
    answer_ = answer;
  }
  cv_.notify_all();
}

nlohmann::ordered_json Session::snapshot() const {
  std::lock_guard lock(mutex_);
  return {{"session", id_},
          {"state", state_name(state_)},
          {"clock", scene_.clock()},
          {"scene_hash", scene::scene_hash(scene_)},
          {"sequence", events_.head()},
          {"pending_question", pending_question_ ? nlohmann::ordered_json(*pending_question_) : nlohmann::ordered_json(nullptr)},
          {"hierarchy", scene::serialize_hierarchy(scene_)},
          {"entities", scene::hierarchy_json(scene_)}};
}

void Session::require_idle(std::string_view action) const {
  if (state_ != SessionState::Idle) {
    throw ServiceError(ErrorCode::RunInFlight, fmt::format("cannot {} while a request is running", action));
  }
}

nlohmann::ordered_json Session::interact(const std::string& entity) {
  std::lock_guard lock(mutex_);
  require_idle("interact");
  try {
    auto outcome = scene::interact(scene_, entity);
    scene_ = std::move(outcome.scene);
    nlohmann::ordered_json failures = nlohmann::ordered_json::array();
    for (const auto& f : outcome.failures) {
      failures.push_back({{"handler", f.handler_index},
                          {"statement", f.statement_index},
                          {"cause", scene::error_kind_name(f.cause)},
                          {"message", f.message}});
    }
    return {{"entity", entity},
            {"handlers_run", outcome.handlers_run},
            {"failures", failures},
            {"scene_hash", scene::scene_hash(scene_)}};
  } catch (const scene::SceneError& e) {
    if (e.kind() == scene::ErrorKind::EntityNotFound) throw ServiceError(ErrorCode::EntityNotFound, e.what());
    throw;
  }
}

void Session::tick(double dt) {
  std::lock_guard lock(mutex_);
  if (state_ != SessionState::Idle) return;
  scene_.advance(dt);
}

std::string Session::export_scene() const {
  std::lock_guard lock(mutex_);
  return persist::export_scene_text(scene_);
}

void Session::import_scene(std::string_view text) {
  scene::Scene imported;
  try {
    imported = persist::import_scene_text(text);
  } catch (const std::exception& e) {
    throw ServiceError(ErrorCode::InvalidScene, e.what());
  }
  std::lock_guard lock(mutex_);
  require_idle("import a scene");
  scene_ = std::move(imported);
}

persist::SavedGeneration Session::save_generation(std::optional<std::size_t> index, std::optional<std::string> summary) {
  pipeline::Episode episode;
  {
    std::lock_guard lock(mutex_);
    if (index) {
      if (*index >= episodes_.size()) {
        throw ServiceError(ErrorCode::Validation, fmt::format("no episode {} (have {})", *index, episodes_.size()));
      }
      episode = episodes_[*index];
    } else {
      const auto it = std::find_if(episodes_.rbegin(), episodes_.rend(), [](const pipeline::Episode& e) {
        return e.outcome.status == script::Status::Success;
      });
      if (it == episodes_.rend()) throw ServiceError(ErrorCode::Validation, "no successful episode to save");
      episode = *it;
    }
  }
  if (episode.code.text.empty()) throw ServiceError(ErrorCode::Validation, "that episode produced no code");
  const auto text = summary && !util::trim(*summary).empty() ? *summary : episode.instruction.text;
  try {
    const auto id = options_.store->save(episode.code, text, id_);
    return options_.store->get(id);
  } catch (const persist::GenerationRejected& e) {
    throw ServiceError(ErrorCode::Validation, e.what());
  }
}

std::vector<persist::SavedGeneration> Session::generations() const { return options_.store->list(id_); }

nlohmann::ordered_json Session::reload_generation(const std::string& id, ReloadMode mode) {
  persist::SavedGeneration saved;
  try {
    saved = options_.store->get(id);
  } catch (const persist::UnknownId& e) {
    throw ServiceError(ErrorCode::UnknownGeneration, e.what());
  }
  if (mode == ReloadMode::Summary) return {{"id", id}, {"mode", "summary"}, {"run", submit(saved.summary)}};

  std::lock_guard lock(mutex_);
  require_idle("reload a generation");
  const auto outcome = options_.store->reload(id, scene_);
  if (outcome.ok()) scene_ = outcome.scene_after;
  return {{"id", id},
          {"mode", "script"},
          {"status", script::status_name(outcome.status)},
          {"errors", script::diagnostics_json(outcome.errors)},
          {"scene_hash", scene::scene_hash(scene_)}};
}

SessionState Session::state() const {
  std::lock_guard lock(mutex_);
  return state_;
}

std::vector<pipeline::Episode> Session::episodes() const {
  std::lock_guard lock(mutex_);
  return episodes_;
}

bool Session::wait_idle(std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mutex_);
  return cv_.wait_for(lock, timeout, [&] { return state_ == SessionState::Idle; });
}

// -- manager -------------------------------------------------------------------

namespace {

std::string new_session_id() {
  static std::mutex mutex;
  static std::mt19937_64 rng(std::random_device{}());
  std::lock_guard lock(mutex);
  return fmt::format("{:016x}", rng());
}

}  // namespace

SessionManager::SessionManager(ServiceOptions options)
    : options_(std::move(options)),
      store_(std::make_shared<persist::GenerationStore>(
          options_.store_dir, options_.wall_clock ? options_.wall_clock : EventLog::Clock(util::utc_timestamp))) {
  if (options_.tick_rate > 0) {
    ticker_ = std::thread([this] {
      const double dt = 1.0 / options_.tick_rate;
      const auto period = std::chrono::duration_cast<std::chrono::steady_clock::duration>(std::chrono::duration<double>(dt));
      auto next = std::chrono::steady_clock::now();
      while (!stop_) {
        next += period;
        tick_subscribed(dt);
        std::this_thread::sleep_until(next);
      }
    });
  }
}

SessionManager::~SessionManager() {
  stop_ = true;
  if (ticker_.joinable()) ticker_.join();
}

std::string SessionManager::create(const std::optional<std::string>& preset,
                                   const std::optional<std::string>& scene_text) {
  auto config = options_.default_config;
  if (preset) {
    try {
      auto chosen = pipeline::preset(*preset);
      chosen.provider = config.provider;
      chosen.params = config.params;
      chosen.window = config.window;
      config = std::move(chosen);
    } catch (const pipeline::UnknownPreset& e) {
      throw ServiceError(ErrorCode::Validation, e.what());
    }
  }
  scene::Scene initial;
  if (scene_text) {
    try {
      initial = persist::import_scene_text(*scene_text);
    } catch (const std::exception& e) {
      throw ServiceError(ErrorCode::InvalidScene, e.what());
    }
  }
  SessionOptions so{std::move(config), store_, options_.provider_factory, options_.assets, options_.wall_clock};
  auto id = new_session_id();
  auto session = std::make_shared<Session>(id, std::move(so), std::move(initial));
  std::lock_guard lock(mutex_);
  sessions_.emplace(id, std::move(session));
  return id;
}

std::shared_ptr<Session> SessionManager::get(const std::string& id) const {
  std::lock_guard lock(mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw ServiceError(ErrorCode::UnknownSession, "no session '" + id + "'");
  return it->second;
}

std::vector<std::string> SessionManager::ids() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [id, s] : sessions_) out.push_back(id);
  return out;
}

bool SessionManager::remove(const std::string& id) {
  std::shared_ptr<Session> doomed;
  {
    std::lock_guard lock(mutex_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) return false;
    doomed = std::move(it->second);
    sessions_.erase(it);
  }
  return true;
}

void SessionManager::tick_subscribed(double dt) {
  std::vector<std::shared_ptr<Session>> live;
  {
    std::lock_guard lock(mutex_);
    for (const auto& [id, s] : sessions_) {
      if (s->subscribers() > 0) live.push_back(s);
    }
  }
  for (const auto& s : live) s->tick(dt);
}

}  // namespace sceneforge::service
