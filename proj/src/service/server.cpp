#include "sceneforge/service/server.hpp"

#include "sceneforge/script/script.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <thread>

namespace sceneforge::service {

namespace {

using Json = nlohmann::ordered_json;

constexpr auto kStreamPoll = std::chrono::milliseconds(250);
constexpr long kMaxWaitMs = 30000;

void send_json(httplib::Response& res, const Json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, std::string_view code, const std::string& message, int status) {
  send_json(res, {{"error", {{"code", code}, {"message", message}}}}, status);
}

nlohmann::json body_of(const httplib::Request& req) {
  if (req.body.empty()) return nlohmann::json::object();
  auto j = nlohmann::json::parse(req.body);
  if (!j.is_object()) throw ServiceError(ErrorCode::Validation, "request body must be a JSON object");
  return j;
}

std::string required_text(const nlohmann::json& body, const char* field) {
  const auto it = body.find(field);
  if (it == body.end() || !it->is_string()) {
    throw ServiceError(ErrorCode::Validation, std::string("field '") + field + "' must be a string");
  }
  return it->get<std::string>();
}

std::uint64_t query_u64(const httplib::Request& req, const char* key, std::uint64_t fallback) {
  if (!req.has_param(key)) return fallback;
  const auto v = req.get_param_value(key);
  try {
    std::size_t used = 0;
    const auto n = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return n;
  } catch (const std::exception&) {
    throw ServiceError(ErrorCode::Validation, std::string("query parameter '") + key + "' must be a non-negative integer");
  }
}

std::string sse_frame(const PipelineEvent& e) {
  return "id: " + std::to_string(e.sequence) + "\nevent: " + e.stage + "\ndata: " + to_json(e).dump() + "\n\n";
}

Json generation_json(const persist::SavedGeneration& g) {
  return {{"id", g.id},
          {"summary", g.summary},
          {"created_at", g.created_at},
          {"origin_session", g.origin_session},
          {"code", g.source.text}};
}

}  // namespace

struct Server::Impl {
  explicit Impl(ServiceOptions options) : manager(std::move(options)) {
    http.new_task_queue = [] { return new httplib::ThreadPool(16); };
    routes();
  }

  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  // Maps exceptions onto the error envelope.
  static Handler guarded(Handler inner) {
    return [inner = std::move(inner)](const httplib::Request& req, httplib::Response& res) {
      try {
        inner(req, res);
      } catch (const ServiceError& e) {
        send_error(res, error_code_name(e.code()), e.what(), http_status(e.code()));
      } catch (const nlohmann::json::exception& e) {
        send_error(res, "ValidationError", std::string("malformed JSON: ") + e.what(), 400);
      } catch (const std::invalid_argument& e) {
        send_error(res, "ValidationError", e.what(), 400);
      } catch (const std::exception& e) {
        send_error(res, "InternalError", e.what(), 500);
      }
    };
  }

  std::shared_ptr<Session> session(const httplib::Request& req) const { return manager.get(req.matches[1]); }

  void routes() {
    http.Get("/health", guarded([this](const httplib::Request&, httplib::Response& res) {
      send_json(res, {{"status", "ok"}, {"sessions", manager.ids().size()}});
    }));

    http.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto body = body_of(req);
      std::optional<std::string> preset;
      std::optional<std::string> scene;
      if (body.contains("preset")) preset = required_text(body, "preset");
      if (body.contains("scene")) {
        const auto& s = body.at("scene");
        scene = s.is_string() ? s.get<std::string>() : s.dump();
      }
      const auto id = manager.create(preset, scene);
      send_json(res, {{"session", id}, {"config", manager.get(id)->config().name}}, 201);
    }));

    http.Delete(R"(/sessions/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      if (!manager.remove(req.matches[1])) {
        throw ServiceError(ErrorCode::UnknownSession, "no session '" + std::string(req.matches[1]) + "'");
      }
      res.status = 204;
    }));

    http.Get(R"(/sessions/([^/]+)/snapshot)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, session(req)->snapshot());
    }));

    http.Post(R"(/sessions/([^/]+)/prompts)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto s = session(req);
      const auto run = s->submit(required_text(body_of(req), "text"));
      send_json(res, {{"session", s->id()}, {"run", run}}, 202);
    }));

    http.Post(R"(/sessions/([^/]+)/answer)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      session(req)->respond(required_text(body_of(req), "text"));
      send_json(res, {{"accepted", true}});
    }));

    http.Get(R"(/sessions/([^/]+)/events/poll)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto s = session(req);
      const auto from = query_u64(req, "from", 0);
      const auto wait_ms = std::min<std::uint64_t>(query_u64(req, "wait_ms", 0), kMaxWaitMs);
      Session::Subscription sub(*s);
      const auto events = wait_ms > 0 ? s->events().wait(from, std::chrono::milliseconds(wait_ms)) : s->events().since(from);
      Json list = Json::array();
      for (const auto& e : events) list.push_back(to_json(e));
      send_json(res, {{"events", list}, {"head", s->events().head()}});
    }));

    http.Get(R"(/sessions/([^/]+)/events)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto s = session(req);
      auto next = std::make_shared<std::uint64_t>(query_u64(req, "from", 0));
      auto sub = std::make_shared<Session::Subscription>(*s);
      res.set_header("Cache-Control", "no-cache");
      res.set_chunked_content_provider(
          "text/event-stream", [this, s, sub, next](std::size_t, httplib::DataSink& sink) {
            while (!stopping) {
              const auto events = s->events().wait(*next, kStreamPoll);
              if (events.empty()) {
                // Comment frames keep proxies open and detect a gone client.
                if (!sink.write(": keepalive\n\n", 13)) return false;
                continue;
              }
              for (const auto& e : events) {
                const auto frame = sse_frame(e);
                if (!sink.write(frame.data(), frame.size())) return false;
                *next = e.sequence + 1;
              }
              return true;
            }
            sink.done();
            return true;
          });
    }));

    http.Post(R"(/sessions/([^/]+)/interact)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, session(req)->interact(required_text(body_of(req), "entity")));
    }));

    http.Post(R"(/sessions/([^/]+)/tick)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto body = body_of(req);
      const auto it = body.find("dt");
      if (it == body.end() || !it->is_number() || !(it->get<double>() > 0)) {
        throw ServiceError(ErrorCode::Validation, "field 'dt' must be a positive number");
      }
      auto s = session(req);
      s->tick(it->get<double>());
      send_json(res, s->snapshot());
    }));

    http.Get(R"(/sessions/([^/]+)/scene)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      res.set_content(session(req)->export_scene(), "application/json");
    }));

    http.Put(R"(/sessions/([^/]+)/scene)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto s = session(req);
      s->import_scene(req.body);
      send_json(res, s->snapshot());
    }));

    http.Get(R"(/sessions/([^/]+)/generations)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      Json list = Json::array();
      for (const auto& g : session(req)->generations()) list.push_back(generation_json(g));
      send_json(res, {{"generations", list}});
    }));

    http.Post(R"(/sessions/([^/]+)/generations)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto body = body_of(req);
      std::optional<std::size_t> index;
      std::optional<std::string> summary;
      if (body.contains("episode")) {
        const auto& e = body.at("episode");
        if (!e.is_number_unsigned()) throw ServiceError(ErrorCode::Validation, "field 'episode' must be a non-negative integer");
        index = e.get<std::size_t>();
      }
      if (body.contains("summary")) summary = required_text(body, "summary");
      send_json(res, generation_json(session(req)->save_generation(index, summary)), 201);
    }));

    http.Post(R"(/sessions/([^/]+)/generations/([A-Za-z0-9_-]+)/reload)",
              guarded([this](const httplib::Request& req, httplib::Response& res) {
                const auto body = body_of(req);
                const auto mode_text = body.contains("mode") ? required_text(body, "mode") : std::string("script");
                if (mode_text != "script" && mode_text != "summary") {
                  throw ServiceError(ErrorCode::Validation, "mode must be 'script' or 'summary'");
                }
                const auto mode = mode_text == "script" ? ReloadMode::Script : ReloadMode::Summary;
                send_json(res, session(req)->reload_generation(req.matches[2], mode), mode == ReloadMode::Summary ? 202 : 200);
              }));
  }

  SessionManager manager;
  httplib::Server http;
  std::atomic<bool> stopping{false};
};

Server::Server(ServiceOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}

Server::~Server() { stop(); }

bool Server::listen(const std::string& host, int port) { return impl_->http.listen(host, port); }

int Server::bind_to_any_port(const std::string& host) { return impl_->http.bind_to_any_port(host); }

bool Server::listen_after_bind() { return impl_->http.listen_after_bind(); }

void Server::wait_until_ready() const { impl_->http.wait_until_ready(); }

void Server::stop() {
  impl_->stopping = true;
  impl_->http.stop();
}

SessionManager& Server::sessions() { return impl_->manager; }

}  // namespace sceneforge::service
