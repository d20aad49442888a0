#pragma once

#include "sceneforge/service/session.hpp"

#include <memory>
#include <string>

namespace sceneforge::service {

/// HTTP front end over a SessionManager. Every body is JSON; errors are
/// {"error": {"code", "message"}} with the status from http_status().
///
///   GET  /health
///   POST /sessions                              {preset?, scene?}
///   GET  /sessions/{id}/snapshot
///   POST /sessions/{id}/prompts                 {text}            -> 202 {run}
///   POST /sessions/{id}/answer                  {text}
///   GET  /sessions/{id}/events?from=N           text/event-stream
///   GET  /sessions/{id}/events/poll?from=N&wait_ms=M
///   POST /sessions/{id}/interact                {entity}
///   POST /sessions/{id}/tick                    {dt}
///   GET  /sessions/{id}/scene                   exported scene document
///   PUT  /sessions/{id}/scene                   exported scene document
///   GET  /sessions/{id}/generations
///   POST /sessions/{id}/generations             {episode?, summary?}
///   POST /sessions/{id}/generations/{gid}/reload {mode: script|summary}
class Server {
 public:
  explicit Server(ServiceOptions options);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Blocks until stop().
  bool listen(const std::string& host, int port);
  /// Binds an ephemeral port and returns it; serve with listen_after_bind().
  int bind_to_any_port(const std::string& host);
  bool listen_after_bind();
  void wait_until_ready() const;
  void stop();

  [[nodiscard]] SessionManager& sessions();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace sceneforge::service
