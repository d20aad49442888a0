#include "sceneforge/llm/provider.hpp"

#include "sceneforge/util/hash.hpp"
#include "sceneforge/util/text.hpp"

namespace sceneforge::llm {

std::string_view role_name(Role role) {
  switch (role) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
  }
  return "user";
}

std::optional<Role> parse_role(std::string_view name) {
  if (name == "system") return Role::System;
  if (name == "user") return Role::User;
  if (name == "assistant") return Role::Assistant;
  return std::nullopt;
}

std::size_t estimate_tokens(std::string_view text) { return (text.size() + 2) / 3 + 1; }

std::size_t estimate_tokens(const std::vector<Message>& messages) {
  std::size_t total = 0;
  for (const auto& m : messages) total += estimate_tokens(m.content);
  return total;
}

ContextOverflow::ContextOverflow(std::size_t needed, std::size_t window)
    : ProviderError("context overflow: request needs " + std::to_string(needed) + " estimated tokens, window is " +
                    std::to_string(window)),
      needed_(needed),
      window_(window) {}

std::string request_digest(const std::vector<Message>& messages, const CompletionParams& params) {
  nlohmann::ordered_json j;
  j["model"] = params.model_id;
  j["temperature"] = params.temperature;
  auto& arr = j["messages"] = nlohmann::ordered_json::array();
  for (const auto& m : messages) arr.push_back({{"role", role_name(m.role)}, {"content", m.content}});
  return j.dump();
}

std::string request_hash(const std::vector<Message>& messages, const CompletionParams& params) {
  return util::sha256_hex(request_digest(messages, params));
}

std::string Provider::complete(const ChatContext& context, const CompletionParams& params) {
  const std::size_t needed = context.token_estimate() + params.max_output_tokens;
  if (needed > window_) throw ContextOverflow(needed, window_);
  return do_complete(context, params);
}

// -- scripted ----------------------------------------------------------------

ScriptedProvider::ScriptedProvider(std::vector<std::string> responses)
    : shared_(std::make_move_iterator(responses.begin()), std::make_move_iterator(responses.end())) {}

void ScriptedProvider::push(std::string response) {
  std::lock_guard lock(mutex_);
  shared_.push_back(std::move(response));
}

void ScriptedProvider::push(const std::string& tag, std::string response) {
  std::lock_guard lock(mutex_);
  tagged_[tag].push_back(std::move(response));
}

std::size_t ScriptedProvider::remaining() const {
  std::lock_guard lock(mutex_);
  std::size_t n = shared_.size();
  for (const auto& [tag, q] : tagged_) n += q.size();
  return n;
}

std::string ScriptedProvider::do_complete(const ChatContext& context, const CompletionParams&) {
  std::lock_guard lock(mutex_);
  auto pop = [](std::deque<std::string>& q) {
    std::string s = std::move(q.front());
    q.pop_front();
    return s;
  };
  if (auto it = tagged_.find(context.tag); it != tagged_.end() && !it->second.empty()) return pop(it->second);
  if (!shared_.empty()) return pop(shared_);
  throw ScriptExhausted("scripted provider has no response left for '" + context.tag + "'");
}

// -- replay ------------------------------------------------------------------

nlohmann::ordered_json to_json(const ReplayRecord& record) {
  return {{"request_hash", record.request_hash},
          {"request_digest", record.request_digest},
          {"response_text", record.response_text}};
}

ReplayRecord replay_record_from_json(const nlohmann::json& j) {
  return {j.at("request_hash").get<std::string>(), j.value("request_digest", std::string{}),
          j.at("response_text").get<std::string>()};
}

std::vector<ReplayRecord> load_replay_file(const std::string& path) {
  const auto j = nlohmann::json::parse(util::read_file(path));
  if (!j.is_array()) throw std::runtime_error("replay fixture " + path + " is not a JSON array");
  std::vector<ReplayRecord> out;
  for (const auto& r : j) out.push_back(replay_record_from_json(r));
  return out;
}

void save_replay_file(const std::string& path, const std::vector<ReplayRecord>& records) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : records) arr.push_back(to_json(r));
  util::write_file(path, arr.dump(2) + "\n");
}

ReplayProvider::ReplayProvider(std::vector<ReplayRecord> records) : record_count_(records.size()) {
  for (auto& r : records) by_hash_[r.request_hash].responses.push_back(std::move(r.response_text));
}

std::unique_ptr<ReplayProvider> ReplayProvider::from_file(const std::string& path) {
  return std::make_unique<ReplayProvider>(load_replay_file(path));
}

std::string ReplayProvider::do_complete(const ChatContext& context, const CompletionParams& params) {
  const std::string hash = request_hash(context.messages, params);
  std::lock_guard lock(mutex_);
  auto it = by_hash_.find(hash);
  if (it == by_hash_.end()) {
    throw ReplayMiss(hash, "replay miss: no recorded response for request " + hash.substr(0, 16) + " (module '" +
                               context.tag + "')");
  }
  Entry& e = it->second;
  const std::string& out = e.responses[e.next];
  e.next = (e.next + 1) % e.responses.size();
  return out;
}

// -- recording ---------------------------------------------------------------

RecordingProvider::RecordingProvider(Provider& inner, std::optional<std::string> path)
    : Provider(inner.window()), inner_(inner), path_(std::move(path)) {}

std::vector<ReplayRecord> RecordingProvider::records() const {
  std::lock_guard lock(mutex_);
  return records_;
}

std::string RecordingProvider::do_complete(const ChatContext& context, const CompletionParams& params) {
  std::string response = inner_.complete(context, params);
  std::lock_guard lock(mutex_);
  records_.push_back({request_hash(context.messages, params), request_digest(context.messages, params), response});
  if (path_) save_replay_file(*path_, records_);
  return response;
}

// -- spy ---------------------------------------------------------------------

std::vector<CapturedCall> SpyProvider::calls() const {
  std::lock_guard lock(mutex_);
  return calls_;
}

std::size_t SpyProvider::call_count() const {
  std::lock_guard lock(mutex_);
  return calls_.size();
}

std::size_t SpyProvider::call_count(std::string_view tag) const {
  std::lock_guard lock(mutex_);
  std::size_t n = 0;
  for (const auto& c : calls_) n += c.context.tag == tag ? 1 : 0;
  return n;
}

void SpyProvider::clear() {
  std::lock_guard lock(mutex_);
  calls_.clear();
}

std::string SpyProvider::do_complete(const ChatContext& context, const CompletionParams& params) {
  std::string response = inner_.complete(context, params);
  std::lock_guard lock(mutex_);
  calls_.push_back({context, params, response});
  return response;
}

// -- factory -----------------------------------------------------------------

std::unique_ptr<Provider> make_provider(const nlohmann::json& config) {
  const std::string kind = config.value("kind", std::string{});
  std::unique_ptr<Provider> provider;
  if (kind == "replay") {
    provider = ReplayProvider::from_file(config.at("fixture").get<std::string>());
  } else if (kind == "live") {
    LiveConfig live;
    live.endpoint = config.value("endpoint", live.endpoint);
    live.api_key_env = config.value("api_key_env", live.api_key_env);
    provider = std::make_unique<LiveProvider>(live);
  } else if (kind == "scripted") {
    provider = std::make_unique<ScriptedProvider>(config.value("responses", std::vector<std::string>{}));
  } else {
    throw std::invalid_argument("unknown provider kind '" + kind + "' (expected live, replay or scripted)");
  }
  if (config.contains("window")) provider->set_window(config.at("window").get<std::size_t>());
  return provider;
}

}  // namespace sceneforge::llm
