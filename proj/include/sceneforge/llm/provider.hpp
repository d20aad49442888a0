#pragma once

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstddef>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sceneforge::llm {

enum class Role { System, User, Assistant };

std::string_view role_name(Role role);
std::optional<Role> parse_role(std::string_view name);

struct Message {
  Role role = Role::User;
  std::string content;

  friend bool operator==(const Message&, const Message&) = default;
};

/// ceil(bytes / 3) + 1. An overestimate-leaning heuristic, not a tokenizer.
std::size_t estimate_tokens(std::string_view text);
std::size_t estimate_tokens(const std::vector<Message>& messages);

struct ChatContext {
  std::vector<Message> messages;
  // Calling module ("planner", "builder", ...). Never sent on the wire and not
  // part of the request hash; scripted providers use it to route replies.
  std::string tag;

  [[nodiscard]] std::size_t token_estimate() const { return estimate_tokens(messages); }
};

struct CompletionParams {
  std::string model_id = "gpt-4";
  double temperature = 0.0;
  std::size_t max_output_tokens = 1024;
  std::chrono::seconds timeout{120};
};

inline constexpr std::size_t kDefaultContextWindow = 8000;

class ProviderError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// token_estimate + max_output_tokens > W. Raised before any call is issued.
class ContextOverflow : public ProviderError {
 public:
  ContextOverflow(std::size_t needed, std::size_t window);
  [[nodiscard]] std::size_t needed() const { return needed_; }
  [[nodiscard]] std::size_t window() const { return window_; }

 private:
  std::size_t needed_;
  std::size_t window_;
};

class TransportError : public ProviderError {
 public:
  using ProviderError::ProviderError;
};

class ReplayMiss : public ProviderError {
 public:
  ReplayMiss(std::string request_hash, const std::string& message)
      : ProviderError(message), request_hash_(std::move(request_hash)) {}
  [[nodiscard]] const std::string& request_hash() const { return request_hash_; }

 private:
  std::string request_hash_;
};

class ScriptExhausted : public ProviderError {
 public:
  using ProviderError::ProviderError;
};

/// Canonical request text: {"model","temperature","messages":[{"role","content"}]}.
std::string request_digest(const std::vector<Message>& messages, const CompletionParams& params);
/// SHA-256 of request_digest.
std::string request_hash(const std::vector<Message>& messages, const CompletionParams& params);

/// Chat-completion interface. The base class enforces the context window, so
/// adapters only ever see requests that fit.
class Provider {
 public:
  explicit Provider(std::size_t window = kDefaultContextWindow) : window_(window) {}
  virtual ~Provider() = default;
  Provider(const Provider&) = delete;
  Provider& operator=(const Provider&) = delete;

  std::string complete(const ChatContext& context, const CompletionParams& params);

  [[nodiscard]] std::size_t window() const { return window_; }
  void set_window(std::size_t window) { window_ = window; }

 protected:
  virtual std::string do_complete(const ChatContext& context, const CompletionParams& params) = 0;

 private:
  std::size_t window_;
};

/// In-memory FIFO responses, optionally routed by ChatContext::tag.
/// Tagged queues are consulted first, then the shared queue.
class ScriptedProvider : public Provider {
 public:
  ScriptedProvider() = default;
  explicit ScriptedProvider(std::vector<std::string> responses);

  void push(std::string response);
  void push(const std::string& tag, std::string response);
  [[nodiscard]] std::size_t remaining() const;

 protected:
  std::string do_complete(const ChatContext& context, const CompletionParams& params) override;

 private:
  mutable std::mutex mutex_;
  std::deque<std::string> shared_;
  std::map<std::string, std::deque<std::string>> tagged_;
};

struct ReplayRecord {
  std::string request_hash;
  std::string request_digest;
  std::string response_text;
};

nlohmann::ordered_json to_json(const ReplayRecord& record);
ReplayRecord replay_record_from_json(const nlohmann::json& j);

/// Fixture file: a JSON array of records.
std::vector<ReplayRecord> load_replay_file(const std::string& path);
void save_replay_file(const std::string& path, const std::vector<ReplayRecord>& records);

/// Serves recorded responses byte-for-byte by request hash. Several records
/// under one hash are served in recorded order, then cycle. Unknown requests
/// raise ReplayMiss.
class ReplayProvider : public Provider {
 public:
  explicit ReplayProvider(std::vector<ReplayRecord> records);
  static std::unique_ptr<ReplayProvider> from_file(const std::string& path);

  [[nodiscard]] std::size_t record_count() const { return record_count_; }

 protected:
  std::string do_complete(const ChatContext& context, const CompletionParams& params) override;

 private:
  struct Entry {
    std::vector<std::string> responses;
    std::size_t next = 0;
  };
  std::mutex mutex_;
  std::map<std::string, Entry> by_hash_;
  std::size_t record_count_ = 0;
};

/// Forwards to an inner provider and appends one record per call. When a path
/// is given the fixture file is rewritten after every call.
class RecordingProvider : public Provider {
 public:
  RecordingProvider(Provider& inner, std::optional<std::string> path = std::nullopt);

  [[nodiscard]] std::vector<ReplayRecord> records() const;

 protected:
  std::string do_complete(const ChatContext& context, const CompletionParams& params) override;

 private:
  Provider& inner_;
  std::optional<std::string> path_;
  mutable std::mutex mutex_;
  std::vector<ReplayRecord> records_;
};

struct CapturedCall {
  ChatContext context;
  CompletionParams params;
  std::string response;
};

/// Records every request that reaches it, then forwards.
class SpyProvider : public Provider {
 public:
  explicit SpyProvider(Provider& inner) : Provider(inner.window()), inner_(inner) {}

  [[nodiscard]] std::vector<CapturedCall> calls() const;
  [[nodiscard]] std::size_t call_count() const;
  [[nodiscard]] std::size_t call_count(std::string_view tag) const;
  void clear();

 protected:
  std::string do_complete(const ChatContext& context, const CompletionParams& params) override;

 private:
  Provider& inner_;
  mutable std::mutex mutex_;
  std::vector<CapturedCall> calls_;
};

struct LiveConfig {
  std::string endpoint = "https://api.openai.com/v1";  // base URL; /chat/completions is appended
  std::string api_key_env = "OPENAI_API_KEY";
};

/// OpenAI-compatible chat-completions over HTTP(S).
class LiveProvider : public Provider {
 public:
  explicit LiveProvider(LiveConfig config, std::size_t window = kDefaultContextWindow);

  /// The JSON body sent for a request.
  static nlohmann::ordered_json request_body(const ChatContext& context, const CompletionParams& params);
  /// Extracts choices[0].message.content; throws TransportError otherwise.
  static std::string parse_response(std::string_view body);

 protected:
  std::string do_complete(const ChatContext& context, const CompletionParams& params) override;

 private:
  LiveConfig config_;
};

/// {"kind": "replay", "fixture": path} | {"kind": "live", "endpoint", "api_key_env"}
/// | {"kind": "scripted", "responses": [...]}; optional "window" on all kinds.
std::unique_ptr<Provider> make_provider(const nlohmann::json& config);

}  // namespace sceneforge::llm
