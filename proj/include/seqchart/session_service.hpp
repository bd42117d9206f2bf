#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "seqchart/compiler.hpp"
#include "seqchart/simulation.hpp"

namespace seqchart::service {

enum class ErrorCode { BadRequest, UnknownCourse, InvalidStrategy, SessionNotFound, EventNotEnabled, SessionCompleted };

std::string_view to_string(ErrorCode code);
int http_status(ErrorCode code);

class ServiceError : public std::runtime_error {
 public:
  ServiceError(ErrorCode code, const std::string& message, std::vector<std::string> available = {})
      : std::runtime_error(message), code_(code), available_(std::move(available)) {}

  ErrorCode code() const { return code_; }
  /// Filled for EventNotEnabled.
  const std::vector<std::string>& available_events() const { return available_; }

 private:
  ErrorCode code_;
  std::vector<std::string> available_;
};

enum class SessionStatus { Active, Completed, Abandoned };
std::string_view to_string(SessionStatus status);

/// A learner request: next, back, submit (with score) or enter.
struct ExternalEvent {
  std::string type;
  std::optional<double> score;

  static ExternalEvent from_json(const Json& doc);
  Json to_json() const;
};

struct UnitView {
  std::string id;
  std::string kind;
  std::string payload_ref;
};

struct Breadcrumb {
  std::string id;
  std::string level;
};

struct SessionView {
  std::string session_id;
  std::string course_id;
  SessionStatus status = SessionStatus::Active;
  std::vector<StateId> position;  // active states, hierarchy order
  std::optional<UnitView> current_unit;
  std::vector<Breadcrumb> breadcrumbs;
  std::vector<std::string> available_events;
  std::int64_t attempts = 0;  // on the current item

  Json to_json() const;
};

struct ServiceOptions {
  std::filesystem::path content_dir;
  /// Event logs and snapshots; sessions are memory-only when unset.
  std::optional<std::filesystem::path> snapshot_dir;
  std::int64_t snapshot_every = 16;
  /// Bound on internal steps taken while settling after one request.
  std::int64_t max_settle_steps = 100000;
};

struct QuarantinedSession {
  std::string session_id;
  std::int64_t line = 0;  // 1-based line of the offending log entry
  std::string reason;
};

struct RecoveryReport {
  std::vector<std::string> recovered;
  std::vector<QuarantinedSession> quarantined;

  Json to_json() const;
};

/// Hosts live sessions over compiled courses. Each session's requests are
/// processed one at a time; different sessions proceed in parallel.
class SessionManager {
 public:
  explicit SessionManager(ServiceOptions options);
  ~SessionManager();

  SessionManager(const SessionManager&) = delete;
  SessionManager& operator=(const SessionManager&) = delete;

  const ServiceOptions& options() const { return options_; }

  /// Course ids available in the content directory (file stems of *.json).
  std::vector<std::string> list_courses() const;

  /// `strategy` is a pipeline document or null.
  SessionView create_session(const std::string& course_id, const Json& strategy = nullptr);
  SessionView get_session(const std::string& session_id) const;
  SessionView post_event(const std::string& session_id, const ExternalEvent& event);
  /// Marks the session Abandoned; further events are rejected.
  SessionView abandon(const std::string& session_id);

  /// Line-delimited trace: one record per engine step, then a status line.
  std::string trace(const std::string& session_id) const;

  /// Engine state of a session: {seq, status, configuration, context}.
  Json engine_state(const std::string& session_id) const;

  std::vector<std::string> session_ids() const;

  /// Rebuilds every session found in the snapshot directory by replaying its
  /// event log. Sessions whose log cannot be replayed are moved to
  /// `quarantine/` with a report; the others are loaded.
  RecoveryReport recover();

 private:
  struct Course;
  struct Session;

  std::shared_ptr<const Course> load_course(const std::string& course_id, const Json& strategy);
  std::shared_ptr<Session> find(const std::string& session_id) const;
  std::shared_ptr<Session> open_session(const std::string& session_id, const std::string& course_id,
                                        const Json& strategy);
  void settle(Session& session) const;
  Event translate(const Session& session, const ExternalEvent& event) const;
  std::vector<std::string> external_events(const Session& session) const;
  SessionView view_of(const Session& session) const;
  void apply_external(Session& session, const ExternalEvent& event) const;
  void append_log(Session& session, const Json& line) const;
  void write_snapshot(const Session& session) const;
  std::filesystem::path log_path(const std::string& session_id) const;
  std::filesystem::path snapshot_path(const std::string& session_id) const;
  std::optional<QuarantinedSession> replay(const std::filesystem::path& log);
  void quarantine(const std::string& session_id, const QuarantinedSession& report) const;
  std::string new_session_id();

  ServiceOptions options_;
  mutable std::shared_mutex courses_mutex_;
  std::map<std::string, std::shared_ptr<const Course>> courses_;  // key: course id + strategy document
  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::mutex id_mutex_;
  std::uint64_t id_state_;
};

}  // namespace seqchart::service
