#include "seqchart/http_server.hpp"

#include <httplib.h>

namespace seqchart::service {

namespace {

constexpr const char* kJson = "application/json";

void send_json(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump() + "\n", kJson);
}

void send_error(httplib::Response& res, const ServiceError& e) {
  Json body;
  body["error"] = std::string(to_string(e.code()));
  body["message"] = e.what();
  if (e.code() == ErrorCode::EventNotEnabled) body["available_events"] = e.available_events();
  send_json(res, http_status(e.code()), body);
}

Json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return Json::object();
  try {
    return Json::parse(req.body);
  } catch (const Json::parse_error& e) {
    throw ServiceError(ErrorCode::BadRequest, std::string("malformed JSON body: ") + e.what());
  }
}

/// Runs a handler, mapping service errors to their status codes.
template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const ServiceError& e) {
      send_error(res, e);
    } catch (const std::exception& e) {
      send_json(res, 500, {{"error", "internal"}, {"message", e.what()}});
    }
  };
}

}  // namespace

struct HttpServer::Impl {
  explicit Impl(SessionManager& manager) : manager(manager) {}
  SessionManager& manager;
  httplib::Server server;
};

HttpServer::HttpServer(SessionManager& manager) : impl_(std::make_unique<Impl>(manager)) {
  auto& server = impl_->server;
  auto& sessions = impl_->manager;

  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS"},
                              {"Access-Control-Allow-Headers", "Content-Type"}});
  server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  server.Get("/courses", guarded([&sessions](const httplib::Request&, httplib::Response& res) {
               send_json(res, 200, {{"courses", sessions.list_courses()}});
             }));

  server.Post("/sessions", guarded([&sessions](const httplib::Request& req, httplib::Response& res) {
                auto body = parse_body(req);
                if (!body.is_object() || !body.contains("course_id") || !body["course_id"].is_string()) {
                  throw ServiceError(ErrorCode::BadRequest, "body must contain a string 'course_id'");
                }
                Json strategy = body.contains("strategy") ? body["strategy"] : Json(nullptr);
                auto view = sessions.create_session(body["course_id"].get<std::string>(), strategy);
                send_json(res, 201, {{"session_id", view.session_id}, {"view", view.to_json()}});
              }));

  server.Get("/sessions/:id", guarded([&sessions](const httplib::Request& req, httplib::Response& res) {
               send_json(res, 200, sessions.get_session(req.path_params.at("id")).to_json());
             }));

  server.Post("/sessions/:id/events", guarded([&sessions](const httplib::Request& req, httplib::Response& res) {
                auto event = ExternalEvent::from_json(parse_body(req));
                send_json(res, 200, sessions.post_event(req.path_params.at("id"), event).to_json());
              }));

  server.Get("/sessions/:id/trace", guarded([&sessions](const httplib::Request& req, httplib::Response& res) {
               res.set_content(sessions.trace(req.path_params.at("id")), "application/x-ndjson");
             }));

  server.Delete("/sessions/:id", guarded([&sessions](const httplib::Request& req, httplib::Response& res) {
                  send_json(res, 200, sessions.abandon(req.path_params.at("id")).to_json());
                }));
}

HttpServer::~HttpServer() { stop(); }

bool HttpServer::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }

int HttpServer::bind_to_any_port(const std::string& host) { return impl_->server.bind_to_any_port(host); }

bool HttpServer::listen_after_bind() { return impl_->server.listen_after_bind(); }

void HttpServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

void HttpServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

}  // namespace seqchart::service
