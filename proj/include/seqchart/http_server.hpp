#pragma once

#include <memory>
#include <string>

#include "seqchart/session_service.hpp"

namespace seqchart::service {

/// JSON-over-HTTP front end for a SessionManager.
///
///   GET    /courses                   -> 200 {courses: [...]}
///   POST   /sessions                  -> 201 {session_id, view}
///   GET    /sessions/{id}             -> 200 view
///   POST   /sessions/{id}/events      -> 200 view | 409 {error, message, available_events}
///   GET    /sessions/{id}/trace       -> 200 line-delimited trace
///   DELETE /sessions/{id}             -> 200 view (session abandoned)
class HttpServer {
 public:
  explicit HttpServer(SessionManager& manager);
  ~HttpServer();

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds and serves until stop(); returns false when the port cannot be bound.
  bool listen(const std::string& host, int port);
  /// Binds to a free port and returns it (or -1); serve with listen_after_bind().
  int bind_to_any_port(const std::string& host);
  bool listen_after_bind();
  void wait_until_ready() const;
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace seqchart::service
