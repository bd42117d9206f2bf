#include <gtest/gtest.h>

#include <atomic>
#include <fstream>
#include <random>
#include <functional>
#include <sstream>
#include <thread>

#include <unistd.h>

#include "oracles.hpp"
#include "seqchart/chart_json.hpp"
#include "seqchart/session_service.hpp"

using namespace seqchart;
using namespace seqchart::service;
namespace fs = std::filesystem;

namespace {

fs::path content_dir() { return testkit::data_dir() / "fixtures" / "courses"; }

class ScratchDir {
 public:
  ScratchDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("seqchart-svc-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~ScratchDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

ServiceOptions memory_only() { return {content_dir()}; }

ServiceOptions persistent(const fs::path& dir, std::int64_t every = 16) {
  ServiceOptions options{content_dir(), dir};
  options.snapshot_every = every;
  return options;
}

ExternalEvent next() { return {"next", std::nullopt}; }
ExternalEvent back() { return {"back", std::nullopt}; }
ExternalEvent submit(double s) { return {"submit", s}; }

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ServiceError& e) {
    return e.code();
  }
  ADD_FAILURE() << "no ServiceError thrown";
  return ErrorCode::BadRequest;
}

}  // namespace

TEST(SessionManager, ListsCourses) {
  SessionManager manager(memory_only());
  EXPECT_EQ(manager.list_courses(), (std::vector<std::string>{"algebra", "empty-first", "two-unit"}));
}

TEST(SessionManager, CreateLandsOnFirstUnit) {
  SessionManager manager(memory_only());
  auto view = manager.create_session("two-unit");
  EXPECT_EQ(view.status, SessionStatus::Active);
  ASSERT_TRUE(view.current_unit.has_value());
  EXPECT_EQ(view.current_unit->id, "A1");
  EXPECT_EQ(view.current_unit->kind, "asset");
  EXPECT_EQ(view.current_unit->payload_ref, "lesson.html");
  EXPECT_EQ(view.position, (std::vector<StateId>{"curriculum:C1", "item:I1", "asset:A1"}));
  ASSERT_EQ(view.breadcrumbs.size(), 2u);
  EXPECT_EQ(view.breadcrumbs[1].id, "I1");
  EXPECT_EQ(view.breadcrumbs[1].level, "item");
  EXPECT_EQ(view.available_events, (std::vector<std::string>{"next"}));
  EXPECT_EQ(view.attempts, 1);
  EXPECT_EQ(manager.get_session(view.session_id).to_json(), view.to_json());
}

TEST(SessionManager, PassCompletes) {
  SessionManager manager(memory_only());
  auto id = manager.create_session("two-unit").session_id;
  auto view = manager.post_event(id, next());
  EXPECT_EQ(view.current_unit->id, "Q1");
  EXPECT_EQ(view.available_events, (std::vector<std::string>{"submit"}));
  view = manager.post_event(id, submit(0.9));
  EXPECT_EQ(view.status, SessionStatus::Completed);
  EXPECT_TRUE(view.available_events.empty());
  EXPECT_EQ(code_of([&] { manager.post_event(id, next()); }), ErrorCode::SessionCompleted);
}

TEST(SessionManager, FailReturnsToItemStart) {
  SessionManager manager(memory_only());
  auto id = manager.create_session("two-unit").session_id;
  manager.post_event(id, next());
  auto view = manager.post_event(id, submit(0.1));
  EXPECT_EQ(view.status, SessionStatus::Active);
  EXPECT_EQ(view.current_unit->id, "A1");
  EXPECT_EQ(view.attempts, 2);
}

TEST(SessionManager, BackFromSecondAsset) {
  SessionManager manager(memory_only());
  auto id = manager.create_session("algebra").session_id;
  auto view = manager.post_event(id, next());
  EXPECT_EQ(view.current_unit->id, "lin-video");
  EXPECT_NE(std::find(view.available_events.begin(), view.available_events.end(), "back"),
            view.available_events.end());
  view = manager.post_event(id, back());
  EXPECT_EQ(view.current_unit->id, "lin-text");
}

TEST(SessionManager, EmptyItemRestsAtExit) {
  SessionManager manager(memory_only());
  auto view = manager.create_session("empty-first");
  EXPECT_FALSE(view.current_unit.has_value());
  EXPECT_EQ(view.position.back(), "exit:I0");
  EXPECT_EQ(view.available_events, (std::vector<std::string>{"next"}));
  view = manager.post_event(view.session_id, next());
  EXPECT_EQ(view.current_unit->id, "A1");
}

TEST(SessionManager, DisabledEventListsAlternatives) {
  SessionManager manager(memory_only());
  auto id = manager.create_session("two-unit").session_id;
  manager.post_event(id, next());
  try {
    manager.post_event(id, next());
    FAIL() << "next accepted at an assessment";
  } catch (const ServiceError& e) {
    EXPECT_EQ(e.code(), ErrorCode::EventNotEnabled);
    EXPECT_EQ(http_status(e.code()), 409);
    EXPECT_EQ(e.available_events(), (std::vector<std::string>{"submit"}));
  }
  // Rejected requests leave the session untouched.
  EXPECT_EQ(manager.get_session(id).current_unit->id, "Q1");
  EXPECT_EQ(manager.engine_state(id)["seq"], 1);
}

TEST(SessionManager, ErrorCodes) {
  SessionManager manager(memory_only());
  EXPECT_EQ(code_of([&] { manager.create_session("nope"); }), ErrorCode::UnknownCourse);
  EXPECT_EQ(code_of([&] { manager.create_session("../courses/two-unit"); }), ErrorCode::UnknownCourse);
  EXPECT_EQ(code_of([&] { manager.create_session("two-unit", Json{{"name", "x"}}); }), ErrorCode::InvalidStrategy);
  EXPECT_EQ(code_of([&] { manager.create_session("two-unit", Json::parse(R"([{"name":"warp-drive"}])")); }),
            ErrorCode::InvalidStrategy);
  EXPECT_EQ(code_of([&] { manager.get_session("missing"); }), ErrorCode::SessionNotFound);
  auto id = manager.create_session("two-unit").session_id;
  EXPECT_EQ(code_of([&] { manager.post_event(id, {"dance", std::nullopt}); }), ErrorCode::BadRequest);
  manager.post_event(id, next());
  EXPECT_EQ(code_of([&] { manager.post_event(id, {"submit", std::nullopt}); }), ErrorCode::BadRequest);
  EXPECT_EQ(code_of([&] { manager.post_event(id, submit(1.5)); }), ErrorCode::BadRequest);
  EXPECT_EQ(code_of([] { ExternalEvent::from_json(Json::array()); }), ErrorCode::BadRequest);
}

TEST(SessionManager, StrategyIsApplied) {
  SessionManager manager(memory_only());
  auto id = manager.create_session("two-unit", Json::parse(R"([{"name":"mastery-threshold","params":{"threshold":0.95}}])"))
                .session_id;
  manager.post_event(id, next());
  auto view = manager.post_event(id, submit(0.9));
  EXPECT_EQ(view.status, SessionStatus::Active);
  EXPECT_EQ(view.attempts, 2);
}

TEST(SessionManager, AbandonRejectsFurtherEvents) {
  SessionManager manager(memory_only());
  auto id = manager.create_session("two-unit").session_id;
  EXPECT_EQ(manager.abandon(id).status, SessionStatus::Abandoned);
  EXPECT_EQ(code_of([&] { manager.post_event(id, next()); }), ErrorCode::SessionCompleted);
}

TEST(SessionManager, TraceEndsWithStatus) {
  SessionManager manager(memory_only());
  auto id = manager.create_session("two-unit").session_id;
  manager.post_event(id, next());
  manager.post_event(id, submit(1.0));
  auto text = manager.trace(id);
  std::vector<Json> lines;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) lines.push_back(Json::parse(line));
  ASSERT_EQ(lines.size(), 7u);  // initial record, five steps, status
  EXPECT_EQ(lines.back()["terminal"], "completed");
  EXPECT_EQ(lines.back()["steps"], 5);
}

TEST(SessionManager, ApiMatchesDirectEngine) {
  // Every view position equals the configuration obtained by stepping the engine directly.
  std::mt19937_64 rng(5);
  SessionManager manager(memory_only());
  auto chart = compile(parse_manifest(testkit::read_file(content_dir() / "algebra.json"))).chart;
  for (int round = 0; round < 20; ++round) {
    auto view = manager.create_session("algebra");
    const auto id = view.session_id;
    for (int i = 0; i < 40 && view.status == SessionStatus::Active; ++i) {
      const auto& options = view.available_events;
      ASSERT_FALSE(options.empty());
      const auto& pick = options[rng() % options.size()];
      ExternalEvent event{pick, pick == "submit" ? std::optional<double>((rng() % 11) / 10.0) : std::nullopt};
      view = manager.post_event(id, event);
      auto state = manager.engine_state(id);
      EXPECT_EQ(active_in_order(chart, configuration_from_json(state["configuration"])), view.position);
    }
  }
}

TEST(Persistence, RecoversCompletedAndActiveSessions) {
  ScratchDir dir;
  std::string done, open, abandoned;
  Json done_state, open_state;
  {
    SessionManager manager(persistent(dir.path(), 2));
    done = manager.create_session("two-unit").session_id;
    manager.post_event(done, next());
    manager.post_event(done, submit(0.2));
    manager.post_event(done, next());
    manager.post_event(done, submit(0.8));
    done_state = manager.engine_state(done);
    open = manager.create_session("algebra").session_id;
    manager.post_event(open, next());
    open_state = manager.engine_state(open);
    abandoned = manager.create_session("empty-first").session_id;
    manager.abandon(abandoned);
  }
  SessionManager restarted(persistent(dir.path(), 2));
  auto report = restarted.recover();
  EXPECT_TRUE(report.quarantined.empty());
  EXPECT_EQ(report.recovered.size(), 3u);
  EXPECT_EQ(restarted.engine_state(done), done_state);
  EXPECT_EQ(restarted.engine_state(open), open_state);
  EXPECT_EQ(restarted.get_session(done).status, SessionStatus::Completed);
  EXPECT_EQ(restarted.get_session(abandoned).status, SessionStatus::Abandoned);
  EXPECT_EQ(restarted.post_event(open, next()).current_unit->id, "lin-quiz");
}

TEST(Persistence, TornFinalLineIsDropped) {
  ScratchDir dir;
  std::string id;
  Json state;
  {
    SessionManager manager(persistent(dir.path()));
    id = manager.create_session("algebra").session_id;
    manager.post_event(id, next());
    state = manager.engine_state(id);
  }
  const auto log = dir.path() / (id + ".events.jsonl");
  {
    std::ofstream out(log, std::ios::app | std::ios::binary);
    out << R"({"type":"ne)";
  }
  SessionManager restarted(persistent(dir.path()));
  auto report = restarted.recover();
  ASSERT_EQ(report.recovered, std::vector<std::string>{id});
  EXPECT_EQ(restarted.engine_state(id), state);
  auto text = testkit::read_file(log);
  EXPECT_EQ(text.back(), '\n');
  EXPECT_EQ(text.find("\"ne\n"), std::string::npos);
}

TEST(Persistence, CorruptLogIsQuarantined) {
  ScratchDir dir;
  fs::copy_file(testkit::data_dir() / "fixtures" / "corrupt.events.jsonl", dir.path() / "corrupt.events.jsonl");
  std::string good;
  {
    SessionManager manager(persistent(dir.path()));
    good = manager.create_session("two-unit").session_id;
  }
  SessionManager restarted(persistent(dir.path()));
  auto report = restarted.recover();
  EXPECT_EQ(report.recovered, std::vector<std::string>{good});
  ASSERT_EQ(report.quarantined.size(), 1u);
  EXPECT_EQ(report.quarantined[0].session_id, "corrupt");
  EXPECT_EQ(report.quarantined[0].line, 3);
  EXPECT_TRUE(fs::exists(dir.path() / "quarantine" / "corrupt.events.jsonl"));
  EXPECT_TRUE(fs::exists(dir.path() / "quarantine" / "corrupt.report.json"));
  EXPECT_FALSE(fs::exists(dir.path() / "corrupt.events.jsonl"));
  EXPECT_EQ(code_of([&] { restarted.get_session("corrupt"); }), ErrorCode::SessionNotFound);
}

TEST(Persistence, SnapshotMismatchIsQuarantined) {
  ScratchDir dir;
  std::string id;
  {
    SessionManager manager(persistent(dir.path(), 1));
    id = manager.create_session("two-unit").session_id;
    manager.post_event(id, next());
  }
  const auto snapshot = dir.path() / (id + ".snapshot.json");
  auto doc = Json::parse(testkit::read_file(snapshot));
  doc["context"]["last_score"] = 0.25;
  std::ofstream(snapshot) << doc.dump();
  SessionManager restarted(persistent(dir.path(), 1));
  auto report = restarted.recover();
  ASSERT_EQ(report.quarantined.size(), 1u);
  EXPECT_EQ(report.quarantined[0].session_id, id);
}

TEST(Concurrency, PerSessionRequestsAreSerialized) {
  SessionManager manager(memory_only());
  constexpr int kSessions = 8;
  constexpr int kThreads = 4;
  constexpr int kRequests = 200;
  std::vector<std::string> ids;
  for (int i = 0; i < kSessions; ++i) ids.push_back(manager.create_session("algebra").session_id);

  std::atomic<int> accepted{0};
  std::vector<std::thread> workers;
  for (int t = 0; t < kThreads; ++t) {
    workers.emplace_back([&, t] {
      std::mt19937_64 rng(t);
      for (int i = 0; i < kRequests; ++i) {
        const auto& id = ids[rng() % ids.size()];
        static const char* kinds[] = {"next", "back", "submit", "enter"};
        std::string kind = kinds[rng() % 4];
        ExternalEvent event{kind, kind == "submit" ? std::optional<double>(0.4) : std::nullopt};
        try {
          manager.post_event(id, event);
          ++accepted;
        } catch (const ServiceError&) {
        }
        if (i % 50 == 0) manager.create_session("two-unit");
      }
    });
  }
  for (auto& w : workers) w.join();

  // Every accepted request advanced exactly one session by one sequence number.
  std::int64_t total = 0;
  for (const auto& id : ids) {
    auto state = manager.engine_state(id);
    total += state["seq"].get<std::int64_t>();
    auto trace = manager.trace(id);
    EXPECT_FALSE(trace.empty());
  }
  EXPECT_EQ(total, accepted.load());
}
