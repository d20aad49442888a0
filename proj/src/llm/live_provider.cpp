#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "sceneforge/llm/provider.hpp"

#include <cstdlib>

namespace sceneforge::llm {

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;    // base path without trailing '/'
};

Endpoint split_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw TransportError("endpoint '" + url + "' has no scheme");
  const auto path_start = url.find('/', scheme_end + 3);
  Endpoint e;
  e.origin = url.substr(0, path_start);
  e.path = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!e.path.empty() && e.path.back() == '/') e.path.pop_back();
  return e;
}

}  // namespace

LiveProvider::LiveProvider(LiveConfig config, std::size_t window) : Provider(window), config_(std::move(config)) {}

nlohmann::ordered_json LiveProvider::request_body(const ChatContext& context, const CompletionParams& params) {
  nlohmann::ordered_json body;
  body["model"] = params.model_id;
  auto& messages = body["messages"] = nlohmann::ordered_json::array();
  for (const auto& m : context.messages) messages.push_back({{"role", role_name(m.role)}, {"content", m.content}});
  body["temperature"] = params.temperature;
  body["max_tokens"] = params.max_output_tokens;
  return body;
}

std::string LiveProvider::parse_response(std::string_view body) {
  const auto j = nlohmann::json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) throw TransportError("endpoint returned a non-JSON body");
  try {
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception&) {
    throw TransportError("endpoint response has no choices[0].message.content");
  }
}

std::string LiveProvider::do_complete(const ChatContext& context, const CompletionParams& params) {
  const Endpoint endpoint = split_endpoint(config_.endpoint);
  httplib::Client client(endpoint.origin);
  const auto seconds = static_cast<time_t>(params.timeout.count());
  client.set_connection_timeout(seconds, 0);
  client.set_read_timeout(seconds, 0);
  client.set_write_timeout(seconds, 0);
  if (!config_.api_key_env.empty()) {
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key != nullptr && *key != '\0') {
      client.set_bearer_token_auth(key);
    }
  }
  const auto result =
      client.Post(endpoint.path + "/chat/completions", request_body(context, params).dump(), "application/json");
  if (!result) throw TransportError("request to " + endpoint.origin + " failed: " + httplib::to_string(result.error()));
  if (result->status < 200 || result->status >= 300) {
    throw TransportError("endpoint returned HTTP " + std::to_string(result->status) + ": " +
                         result->body.substr(0, 300));
  }
  return parse_response(result->body);
}

}  // namespace sceneforge::llm
