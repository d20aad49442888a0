#pragma once

#include "sceneforge/llm/provider.hpp"
#include "sceneforge/persist/generation_store.hpp"
#include "sceneforge/pipeline/orchestrator.hpp"
#include "sceneforge/scene/scene.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace sceneforge::service {

enum class ErrorCode {
  UnknownSession,
  RunInFlight,
  NotAwaitingAnswer,
  Validation,
  EntityNotFound,
  UnknownGeneration,
  InvalidScene,
};

std::string_view error_code_name(ErrorCode code);
int http_status(ErrorCode code);

class ServiceError : public std::runtime_error {
 public:
  ServiceError(ErrorCode code, const std::string& message) : std::runtime_error(message), code_(code) {}
  [[nodiscard]] ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

/// Sequence numbers start at 0 and are gapless per session.
struct PipelineEvent {
  std::string session;
  std::uint64_t sequence = 0;
  std::uint64_t run = 0;
  std::string stage;  // pipeline::stage_name values
  nlohmann::ordered_json payload;
  std::string timestamp;
};

nlohmann::ordered_json to_json(const PipelineEvent& event);

/// Append-only, in-memory event log with blocking reads.
class EventLog {
 public:
  using Clock = std::function<std::string()>;

  EventLog(std::string session, Clock clock);

  std::uint64_t append(std::uint64_t run, std::string stage, nlohmann::ordered_json payload);
  /// Every event with sequence >= from, in order.
  [[nodiscard]] std::vector<PipelineEvent> since(std::uint64_t from) const;
  /// As since(), but blocks up to `timeout` while nothing new exists.
  [[nodiscard]] std::vector<PipelineEvent> wait(std::uint64_t from, std::chrono::milliseconds timeout) const;
  /// The sequence number the next event will get.
  [[nodiscard]] std::uint64_t head() const;
  /// Wakes every waiter; later waits return immediately.
  void close();

 private:
  std::string session_;
  Clock clock_;
  mutable std::mutex mutex_;
  mutable std::condition_variable cv_;
  std::vector<PipelineEvent> events_;
  bool closed_ = false;
};

enum class SessionState { Idle, Running, AwaitingAnswer };

std::string_view state_name(SessionState state);

using ProviderFactory = std::function<std::unique_ptr<llm::Provider>(const pipeline::PipelineConfig&)>;

struct SessionOptions {
  pipeline::PipelineConfig config;
  std::shared_ptr<persist::GenerationStore> store;
  ProviderFactory provider_factory;  // defaults to make_provider(config.provider)
  std::shared_ptr<pipeline::AssetSource> assets;
  EventLog::Clock wall_clock;  // defaults to util::utc_timestamp
};

enum class ReloadMode { Script, Summary };

/// One scene, its pipeline and its event log. All commands are safe to call
/// from any thread; a submitted request runs on the session's worker thread.
class Session {
 public:
  Session(std::string id, SessionOptions options, scene::Scene initial = {});
  ~Session();
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  [[nodiscard]] const std::string& id() const { return id_; }
  [[nodiscard]] const pipeline::PipelineConfig& config() const { return options_.config; }

  /// Starts run_request and returns its run number (1-based) immediately.
  std::uint64_t submit(const std::string& text);
  void respond(const std::string& answer);

  /// {session, state, clock, scene_hash, sequence, pending_question, hierarchy,
  /// entities}; `hierarchy` is the serialized text, "[]" for an empty scene.
  [[nodiscard]] nlohmann::ordered_json snapshot() const;
  nlohmann::ordered_json interact(const std::string& entity);
  /// Advances the scene clock; a no-op while a run owns the scene.
  void tick(double dt);

  [[nodiscard]] std::string export_scene() const;
  void import_scene(std::string_view text);

  /// Saves the code of episode `index` (0-based over this session's episodes),
  /// default the latest successful one. The summary defaults to its instruction.
  persist::SavedGeneration save_generation(std::optional<std::size_t> index, std::optional<std::string> summary);
  [[nodiscard]] std::vector<persist::SavedGeneration> generations() const;
  /// Script: re-executes the stored code now. Summary: submits the stored
  /// summary as a new request and returns its run number.
  nlohmann::ordered_json reload_generation(const std::string& id, ReloadMode mode);

  [[nodiscard]] const EventLog& events() const { return events_; }
  [[nodiscard]] SessionState state() const;
  [[nodiscard]] std::vector<pipeline::Episode> episodes() const;
  /// Blocks until no run is in flight; false on timeout.
  bool wait_idle(std::chrono::milliseconds timeout) const;

  /// Held by every open event stream; ticking runs only while one exists.
  class Subscription {
   public:
    explicit Subscription(Session& s) : s_(s) { ++s_.subscribers_; }
    ~Subscription() { --s_.subscribers_; }
    Subscription(const Subscription&) = delete;
    Subscription& operator=(const Subscription&) = delete;

   private:
    Session& s_;
  };
  [[nodiscard]] int subscribers() const { return subscribers_; }

 private:
  void run_worker(std::uint64_t run, std::string text, scene::Scene start);
  std::optional<std::string> await_answer(const pipeline::ClarifyingQuestion& question);
  void require_idle(std::string_view action) const;

  class Forwarder : public pipeline::Observer {
   public:
    explicit Forwarder(Session& s) : s_(s) {}
    void on_event(pipeline::Stage stage, const nlohmann::ordered_json& payload) override;

   private:
    Session& s_;
  };

  std::string id_;
  SessionOptions options_;
  EventLog events_;
  std::unique_ptr<llm::Provider> provider_;
  std::unique_ptr<pipeline::Orchestrator> orchestrator_;
  Forwarder forwarder_{*this};

  mutable std::mutex mutex_;
  mutable std::condition_variable cv_;
  scene::Scene scene_;
  SessionState state_ = SessionState::Idle;
  std::optional<std::string> pending_question_;
  std::optional<std::string> answer_;
  std::vector<pipeline::Episode> episodes_;
  std::uint64_t runs_ = 0;
  std::atomic<std::uint64_t> current_run_{0};
  bool closing_ = false;
  std::atomic<int> subscribers_{0};
  std::thread worker_;
};

struct ServiceOptions {
  pipeline::PipelineConfig default_config;
  double tick_rate = 20.0;  // ticks per second while subscribed; 0 disables
  std::string store_dir = "sceneforge-store";
  ProviderFactory provider_factory;
  std::shared_ptr<pipeline::AssetSource> assets;
  EventLog::Clock wall_clock;
};

/// Owns every session and the background ticker.
class SessionManager {
 public:
  explicit SessionManager(ServiceOptions options);
  ~SessionManager();
  SessionManager(const SessionManager&) = delete;
  SessionManager& operator=(const SessionManager&) = delete;

  /// `preset` selects a pipeline preset that keeps the default provider;
  /// `scene_text` is an exported scene document.
  std::string create(const std::optional<std::string>& preset = std::nullopt,
                     const std::optional<std::string>& scene_text = std::nullopt);
  [[nodiscard]] std::shared_ptr<Session> get(const std::string& id) const;
  [[nodiscard]] std::vector<std::string> ids() const;
  bool remove(const std::string& id);

  /// One tick of `dt` for every session with a subscriber.
  void tick_subscribed(double dt);

  [[nodiscard]] const ServiceOptions& options() const { return options_; }

 private:
  ServiceOptions options_;
  std::shared_ptr<persist::GenerationStore> store_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::atomic<bool> stop_{false};
  std::thread ticker_;
};

}  // namespace sceneforge::service
