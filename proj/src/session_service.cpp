#include "seqchart/session_service.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include "seqchart/strategy.hpp"

namespace seqchart::service {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kLogSuffix = ".events.jsonl";
constexpr std::string_view kSnapshotSuffix = ".snapshot.json";

bool valid_identifier(std::string_view id) {
  if (id.empty() || id.size() > 128 || id.front() == '.') return false;
  return std::all_of(id.begin(), id.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '-' || c == '_' || c == '.';
  });
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_atomically(const fs::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << text;
    out.flush();
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

bool is_bookkeeping(StateRole role) { return role == StateRole::EntryChoice || role == StateRole::ExitPoint; }

bool offers(const std::vector<EventKind>& kinds, EventKind kind) {
  return std::find(kinds.begin(), kinds.end(), kind) != kinds.end();
}

}  // namespace

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::BadRequest: return "bad_request";
    case ErrorCode::UnknownCourse: return "unknown_course";
    case ErrorCode::InvalidStrategy: return "invalid_strategy";
    case ErrorCode::SessionNotFound: return "session_not_found";
    case ErrorCode::EventNotEnabled: return "event_not_enabled";
    case ErrorCode::SessionCompleted: return "session_completed";
  }
  return "error";
}

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::BadRequest:
    case ErrorCode::InvalidStrategy: return 400;
    case ErrorCode::UnknownCourse:
    case ErrorCode::SessionNotFound: return 404;
    case ErrorCode::EventNotEnabled:
    case ErrorCode::SessionCompleted: return 409;
  }
  return 500;
}

std::string_view to_string(SessionStatus status) {
  switch (status) {
    case SessionStatus::Active: return "active";
    case SessionStatus::Completed: return "completed";
    case SessionStatus::Abandoned: return "abandoned";
  }
  return "unknown";
}

ExternalEvent ExternalEvent::from_json(const Json& doc) {
  if (!doc.is_object() || !doc.contains("type") || !doc["type"].is_string()) {
    throw ServiceError(ErrorCode::BadRequest, "event must be an object with a string 'type'");
  }
  ExternalEvent event{doc["type"].get<std::string>(), std::nullopt};
  if (doc.contains("score") && !doc["score"].is_null()) {
    if (!doc["score"].is_number()) throw ServiceError(ErrorCode::BadRequest, "'score' must be a number");
    event.score = doc["score"].get<double>();
  }
  return event;
}

Json ExternalEvent::to_json() const {
  Json out;
  out["type"] = type;
  if (score) out["score"] = *score;
  return out;
}

Json SessionView::to_json() const {
  Json out;
  out["session_id"] = session_id;
  out["course_id"] = course_id;
  out["status"] = std::string(service::to_string(status));
  out["position"] = position;
  if (current_unit) {
    out["current_unit"] = {{"id", current_unit->id}, {"kind", current_unit->kind},
                           {"payload_ref", current_unit->payload_ref}};
  } else {
    out["current_unit"] = nullptr;
  }
  out["breadcrumbs"] = Json::array();
  for (const auto& crumb : breadcrumbs) out["breadcrumbs"].push_back({{"id", crumb.id}, {"level", crumb.level}});
  out["available_events"] = available_events;
  out["attempts"] = attempts;
  return out;
}

Json RecoveryReport::to_json() const {
  Json out;
  out["recovered"] = recovered;
  out["quarantined"] = Json::array();
  for (const auto& q : quarantined) {
    out["quarantined"].push_back({{"session_id", q.session_id}, {"line", q.line}, {"reason", q.reason}});
  }
  return out;
}

struct SessionManager::Course {
  std::string id;
  Json strategy;
  ActivityTree tree;
  std::shared_ptr<const Statechart> chart;
  CompilationMap map;
};

struct SessionManager::Session {
  Session(std::string id, std::shared_ptr<const Course> course)
      : id(std::move(id)), course(std::move(course)), driver(this->course->chart) {}

  mutable std::mutex mutex;
  std::string id;
  std::shared_ptr<const Course> course;
  SessionDriver driver;
  SessionStatus status = SessionStatus::Active;
  std::int64_t seq = 0;  // learner events accepted so far
};

SessionManager::SessionManager(ServiceOptions options) : options_(std::move(options)), id_state_(std::random_device{}()) {
  id_state_ = (id_state_ << 32) ^ std::random_device{}();
  if (options_.snapshot_dir) fs::create_directories(*options_.snapshot_dir);
}

SessionManager::~SessionManager() = default;

std::vector<std::string> SessionManager::list_courses() const {
  std::vector<std::string> out;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(options_.content_dir, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") out.push_back(entry.path().stem().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::shared_ptr<const SessionManager::Course> SessionManager::load_course(const std::string& course_id,
                                                                        const Json& strategy) {
  const auto key = course_id + "\n" + strategy.dump();
  {
    std::shared_lock lock(courses_mutex_);
    if (auto it = courses_.find(key); it != courses_.end()) return it->second;
  }

  if (!valid_identifier(course_id)) throw ServiceError(ErrorCode::UnknownCourse, "unknown course '" + course_id + "'");
  const auto path = options_.content_dir / (course_id + ".json");
  if (!fs::is_regular_file(path)) throw ServiceError(ErrorCode::UnknownCourse, "unknown course '" + course_id + "'");

  auto course = std::make_shared<Course>();
  course->id = course_id;
  course->strategy = strategy;
  try {
    course->tree = parse_manifest(read_file(path));
  } catch (const std::exception& e) {
    throw ServiceError(ErrorCode::UnknownCourse, "course '" + course_id + "' has an invalid manifest: " + e.what());
  }
  auto compiled = compile(course->tree);
  course->map = std::move(compiled.map);
  if (strategy.is_null()) {
    course->chart = std::make_shared<const Statechart>(std::move(compiled.chart));
  } else {
    try {
      auto pipeline = pipeline_from_json(strategy);
      course->chart = std::make_shared<const Statechart>(apply(pipeline, compiled.chart, course->map));
    } catch (const std::exception& e) {
      throw ServiceError(ErrorCode::InvalidStrategy, e.what());
    }
  }

  std::unique_lock lock(courses_mutex_);
  auto [it, inserted] = courses_.try_emplace(key, std::move(course));
  return it->second;
}

std::string SessionManager::new_session_id() {
  std::lock_guard lock(id_mutex_);
  std::mt19937_64 rng(id_state_++);
  std::ostringstream out;
  out << std::hex;
  out.width(16);
  out.fill('0');
  out << rng();
  return out.str();
}

std::shared_ptr<SessionManager::Session> SessionManager::find(const std::string& session_id) const {
  std::shared_lock lock(sessions_mutex_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw ServiceError(ErrorCode::SessionNotFound, "no session '" + session_id + "'");
  return it->second;
}

std::shared_ptr<SessionManager::Session> SessionManager::open_session(const std::string& session_id,
                                                                      const std::string& course_id,
                                                                      const Json& strategy) {
  auto session = std::make_shared<Session>(session_id, load_course(course_id, strategy));
  settle(*session);
  return session;
}

void SessionManager::settle(Session& session) const {
  auto& driver = session.driver;
  const auto& chart = driver.chart();
  for (std::int64_t n = 0; n < options_.max_settle_steps; ++n) {
    if (driver.completed()) break;
    if (driver.step_internal()) continue;

    auto leaves = active_leaves(chart, driver.configuration());
    if (leaves.size() != 1) break;
    const auto& leaf = chart.at(leaves.front());
    if (!is_bookkeeping(leaf.role)) break;
    if (leaf.role == StateRole::ExitPoint) {
      // An empty item rests at its exit so the learner sees it before moving on.
      const auto* item = chart.parent(leaf.id);
      const auto* node = item ? session.course->tree.find(chart.at(*item).ref) : nullptr;
      if (node != nullptr && node->units.empty()) break;
    }
    auto kinds = driver.available();
    if (kinds.size() != 1 || kinds.front() != EventKind::Enter) break;
    driver.apply(Event::enter());
  }
  if (driver.completed()) session.status = SessionStatus::Completed;
}

std::vector<std::string> SessionManager::external_events(const Session& session) const {
  if (session.status != SessionStatus::Active) return {};
  const auto& driver = session.driver;
  auto kinds = driver.available();
  auto leaves = active_leaves(driver.chart(), driver.configuration());
  bool bookkeeping = leaves.size() == 1 && is_bookkeeping(driver.chart().at(leaves.front()).role);
  bool next = offers(kinds, EventKind::Next);
  bool enter = offers(kinds, EventKind::Enter);

  std::vector<std::string> out;
  if (next || (enter && bookkeeping)) out.emplace_back("next");
  if (enter && (next || !bookkeeping)) out.emplace_back("enter");
  if (offers(kinds, EventKind::Back)) out.emplace_back("back");
  if (offers(kinds, EventKind::Submit)) out.emplace_back("submit");
  return out;
}

Event SessionManager::translate(const Session& session, const ExternalEvent& event) const {
  const auto& driver = session.driver;
  auto available = external_events(session);
  auto not_enabled = [&] {
    return ServiceError(ErrorCode::EventNotEnabled, "event '" + event.type + "' is not enabled", available);
  };
  auto kinds = driver.available();

  if (event.type == "next") {
    if (offers(kinds, EventKind::Next)) return Event::next();
    if (std::find(available.begin(), available.end(), "next") != available.end()) return Event::enter();
    throw not_enabled();
  }
  if (event.type == "enter" || event.type == "back") {
    auto kind = event.type == "enter" ? EventKind::Enter : EventKind::Back;
    if (!offers(kinds, kind)) throw not_enabled();
    return Event{kind};
  }
  if (event.type == "submit") {
    if (!event.score) throw ServiceError(ErrorCode::BadRequest, "submit requires a score");
    if (!(*event.score >= 0.0 && *event.score <= 1.0)) {
      throw ServiceError(ErrorCode::BadRequest, "score must lie in [0,1]");
    }
    auto submit = Event::submit(*event.score);
    if (enabled_transitions(driver.chart(), driver.configuration(), submit, driver.context()).empty()) {
      throw not_enabled();
    }
    return submit;
  }
  throw ServiceError(ErrorCode::BadRequest, "unknown event type '" + event.type + "'");
}

void SessionManager::apply_external(Session& session, const ExternalEvent& event) const {
  if (session.status == SessionStatus::Completed) {
    throw ServiceError(ErrorCode::SessionCompleted, "session '" + session.id + "' is completed");
  }
  if (session.status == SessionStatus::Abandoned) {
    throw ServiceError(ErrorCode::SessionCompleted, "session '" + session.id + "' was abandoned");
  }
  auto engine_event = translate(session, event);
  session.driver.apply(engine_event);
  settle(session);
  ++session.seq;
}

SessionView SessionManager::view_of(const Session& session) const {
  const auto& driver = session.driver;
  const auto& chart = driver.chart();
  const auto& tree = session.course->tree;

  SessionView view;
  view.session_id = session.id;
  view.course_id = session.course->id;
  view.status = session.status;
  view.position = active_in_order(chart, driver.configuration());
  for (const auto& id : view.position) {
    const auto& state = chart.at(id);
    if (state.role == StateRole::Cluster || state.role == StateRole::Item) {
      if (const auto* node = tree.find(state.ref)) view.breadcrumbs.push_back({node->id, std::string(to_string(node->level))});
    } else if (state.role == StateRole::Asset || state.role == StateRole::Assessment) {
      if (const auto* unit = tree.find_unit(state.ref)) {
        view.current_unit = UnitView{unit->id, std::string(to_string(unit->kind)), unit->payload_ref};
      }
    }
  }
  view.available_events = external_events(session);
  if (auto item = current_item(chart, driver.configuration())) view.attempts = driver.context().attempts(*item);
  return view;
}

fs::path SessionManager::log_path(const std::string& session_id) const {
  return *options_.snapshot_dir / (session_id + std::string(kLogSuffix));
}

fs::path SessionManager::snapshot_path(const std::string& session_id) const {
  return *options_.snapshot_dir / (session_id + std::string(kSnapshotSuffix));
}

void SessionManager::append_log(Session& session, const Json& line) const {
  if (!options_.snapshot_dir) return;
  std::ofstream out(log_path(session.id), std::ios::binary | std::ios::app);
  out << line.dump() << '\n';
  out.flush();
  if (!out) throw std::runtime_error("cannot append to the log of session " + session.id);
}

void SessionManager::write_snapshot(const Session& session) const {
  if (!options_.snapshot_dir) return;
  Json doc;
  doc["session_id"] = session.id;
  doc["seq"] = session.seq;
  doc["status"] = std::string(to_string(session.status));
  doc["configuration"] = to_json(session.driver.configuration());
  doc["context"] = to_json(session.driver.context());
  write_atomically(snapshot_path(session.id), doc.dump(2) + "\n");
}

SessionView SessionManager::create_session(const std::string& course_id, const Json& strategy) {
  if (!strategy.is_null() && !strategy.is_array()) {
    throw ServiceError(ErrorCode::InvalidStrategy, "strategy must be an array of {name, params}");
  }
  auto session = open_session(new_session_id(), course_id, strategy);
  {
    std::unique_lock lock(sessions_mutex_);
    while (sessions_.count(session->id) != 0) session->id = new_session_id();
    sessions_.emplace(session->id, session);
  }
  std::lock_guard lock(session->mutex);
  Json header;
  header["type"] = "created";
  header["session_id"] = session->id;
  header["course_id"] = course_id;
  header["strategy"] = strategy;
  append_log(*session, header);
  write_snapshot(*session);
  return view_of(*session);
}

SessionView SessionManager::get_session(const std::string& session_id) const {
  auto session = find(session_id);
  std::lock_guard lock(session->mutex);
  return view_of(*session);
}

SessionView SessionManager::post_event(const std::string& session_id, const ExternalEvent& event) {
  auto session = find(session_id);
  std::lock_guard lock(session->mutex);
  apply_external(*session, event);
  Json line = event.to_json();
  line["seq"] = session->seq;
  append_log(*session, line);
  if (session->status != SessionStatus::Active || session->seq % options_.snapshot_every == 0) {
    write_snapshot(*session);
  }
  return view_of(*session);
}

SessionView SessionManager::abandon(const std::string& session_id) {
  auto session = find(session_id);
  std::lock_guard lock(session->mutex);
  if (session->status == SessionStatus::Active) {
    session->status = SessionStatus::Abandoned;
    Json line;
    line["type"] = "abandon";
    line["seq"] = session->seq;
    append_log(*session, line);
    write_snapshot(*session);
  }
  return view_of(*session);
}

std::string SessionManager::trace(const std::string& session_id) const {
  auto session = find(session_id);
  std::lock_guard lock(session->mutex);
  std::string out;
  const auto& records = session->driver.records();
  for (const auto& record : records) out += seqchart::to_json(record).dump() + "\n";
  Json status;
  status["terminal"] = std::string(to_string(session->status));
  status["steps"] = static_cast<std::int64_t>(records.size()) - 1;
  out += status.dump() + "\n";
  return out;
}

Json SessionManager::engine_state(const std::string& session_id) const {
  auto session = find(session_id);
  std::lock_guard lock(session->mutex);
  Json out;
  out["seq"] = session->seq;
  out["status"] = std::string(to_string(session->status));
  out["configuration"] = to_json(session->driver.configuration());
  out["context"] = to_json(session->driver.context());
  return out;
}

std::vector<std::string> SessionManager::session_ids() const {
  std::shared_lock lock(sessions_mutex_);
  std::vector<std::string> out;
  for (const auto& [id, session] : sessions_) out.push_back(id);
  return out;
}

void SessionManager::quarantine(const std::string& session_id, const QuarantinedSession& report) const {
  const auto dir = *options_.snapshot_dir / "quarantine";
  fs::create_directories(dir);
  for (const auto& path : {log_path(session_id), snapshot_path(session_id)}) {
    if (fs::exists(path)) fs::rename(path, dir / path.filename());
  }
  Json doc{{"session_id", report.session_id}, {"line", report.line}, {"reason", report.reason}};
  write_atomically(dir / (session_id + ".report.json"), doc.dump(2) + "\n");
}

std::optional<QuarantinedSession> SessionManager::replay(const fs::path& log) {
  auto name = log.filename().string();
  const auto session_id = name.substr(0, name.size() - kLogSuffix.size());
  auto fail = [&](std::int64_t line, std::string reason) {
    return QuarantinedSession{session_id, line, std::move(reason)};
  };

  const auto text = read_file(log);
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string::npos) break;  // torn final write: treat as truncation
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  const bool torn = start < text.size();
  if (lines.empty()) return fail(1, "missing session header");

  std::shared_ptr<Session> session;
  try {
    auto header = Json::parse(lines.front());
    if (header.value("type", "") != "created" || header.value("session_id", "") != session_id ||
        !header.contains("course_id")) {
      return fail(1, "malformed session header");
    }
    session = open_session(session_id, header["course_id"].get<std::string>(),
                           header.contains("strategy") ? header["strategy"] : Json(nullptr));
  } catch (const std::exception& e) {
    return fail(1, e.what());
  }

  std::optional<Json> snapshot;
  if (fs::exists(snapshot_path(session_id))) {
    try {
      snapshot = Json::parse(read_file(snapshot_path(session_id)));
    } catch (const std::exception&) {
      snapshot.reset();  // a snapshot is only a cache; the log is authoritative
    }
  }
  auto check_snapshot = [&]() -> std::optional<std::string> {
    if (!snapshot || snapshot->value("seq", std::int64_t{-1}) != session->seq) return std::nullopt;
    if ((*snapshot)["configuration"] != to_json(session->driver.configuration()) ||
        (*snapshot)["context"] != to_json(session->driver.context())) {
      return "replayed state differs from the snapshot at seq " + std::to_string(session->seq);
    }
    return std::nullopt;
  };

  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto line_no = static_cast<std::int64_t>(i) + 1;
    try {
      if (auto mismatch = check_snapshot()) return fail(line_no, *mismatch);
      auto doc = Json::parse(lines[i]);
      if (doc.value("type", "") == "abandon") {
        session->status = SessionStatus::Abandoned;
        continue;
      }
      auto event = ExternalEvent::from_json(doc);
      apply_external(*session, event);
      if (doc.value("seq", std::int64_t{-1}) != session->seq) {
        return fail(line_no, "sequence number out of order");
      }
    } catch (const std::exception& e) {
      return fail(line_no, std::string("cannot replay: ") + e.what() + ": " + lines[i]);
    }
  }
  if (auto mismatch = check_snapshot()) return fail(static_cast<std::int64_t>(lines.size()), *mismatch);

  if (torn) {
    std::string prefix;
    for (const auto& line : lines) prefix += line + "\n";
    write_atomically(log, prefix);
  }
  std::unique_lock lock(sessions_mutex_);
  sessions_[session_id] = std::move(session);
  return std::nullopt;
}

RecoveryReport SessionManager::recover() {
  if (!options_.snapshot_dir) throw std::logic_error("recover needs a snapshot directory");
  std::vector<fs::path> logs;
  for (const auto& entry : fs::directory_iterator(*options_.snapshot_dir)) {
    auto name = entry.path().filename().string();
    if (entry.is_regular_file() && name.size() > kLogSuffix.size() && name.ends_with(kLogSuffix)) {
      logs.push_back(entry.path());
    }
  }
  std::sort(logs.begin(), logs.end());

  RecoveryReport report;
  for (const auto& log : logs) {
    auto name = log.filename().string();
    auto session_id = name.substr(0, name.size() - kLogSuffix.size());
    {
      std::shared_lock lock(sessions_mutex_);
      if (sessions_.count(session_id) != 0) continue;
    }
    if (auto problem = replay(log)) {
      quarantine(session_id, *problem);
      report.quarantined.push_back(std::move(*problem));
    } else {
      report.recovered.push_back(session_id);
    }
  }
  return report;
}

}  // namespace seqchart::service
