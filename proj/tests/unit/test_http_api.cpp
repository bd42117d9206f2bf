#include <gtest/gtest.h>

#include <httplib.h>

#include <thread>

#include "oracles.hpp"
#include "seqchart/http_server.hpp"

using namespace seqchart;
using namespace seqchart::service;

namespace {

class HttpApi : public ::testing::Test {
 protected:
  void SetUp() override {
    manager_ = std::make_unique<SessionManager>(ServiceOptions{seqchart::testkit::data_dir() / "fixtures" / "courses"});
    server_ = std::make_unique<HttpServer>(*manager_);
    port_ = server_->bind_to_any_port("127.0.0.1");
    ASSERT_GT(port_, 0);
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
  }

  void TearDown() override {
    server_->stop();
    thread_.join();
  }

  Json post(const std::string& path, const Json& body, int expected) {
    auto res = client_->Post(path, body.dump(), "application/json");
    EXPECT_TRUE(res);
    if (!res) return nullptr;
    EXPECT_EQ(res->status, expected) << res->body;
    return Json::parse(res->body);
  }

  Json get(const std::string& path, int expected) {
    auto res = client_->Get(path);
    EXPECT_TRUE(res);
    if (!res) return nullptr;
    EXPECT_EQ(res->status, expected) << res->body;
    return Json::parse(res->body);
  }

  std::string create(const std::string& course) {
    return post("/sessions", {{"course_id", course}}, 201)["session_id"].get<std::string>();
  }

  std::unique_ptr<SessionManager> manager_;
  std::unique_ptr<HttpServer> server_;
  std::unique_ptr<httplib::Client> client_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace

TEST_F(HttpApi, ListsCourses) {
  auto body = get("/courses", 200);
  EXPECT_EQ(body["courses"], Json::array({"algebra", "empty-first", "two-unit"}));
}

TEST_F(HttpApi, CreateReturnsView) {
  auto body = post("/sessions", {{"course_id", "two-unit"}}, 201);
  auto id = body["session_id"].get<std::string>();
  EXPECT_EQ(body["view"]["session_id"], id);
  EXPECT_EQ(body["view"]["current_unit"]["id"], "A1");
  EXPECT_EQ(body["view"]["status"], "active");
  EXPECT_EQ(get("/sessions/" + id, 200), body["view"]);
}

TEST_F(HttpApi, FullSessionOverHttp) {
  auto id = create("two-unit");
  auto view = post("/sessions/" + id + "/events", {{"type", "next"}}, 200);
  EXPECT_EQ(view["current_unit"]["id"], "Q1");
  view = post("/sessions/" + id + "/events", {{"type", "submit"}, {"score", 1.0}}, 200);
  EXPECT_EQ(view["status"], "completed");

  auto res = client_->Get("/sessions/" + id + "/trace");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(res->get_header_value("Content-Type"), "application/x-ndjson");
  EXPECT_NE(res->body.find("{\"terminal\":\"completed\",\"steps\":5}"), std::string::npos);

  auto err = post("/sessions/" + id + "/events", {{"type", "next"}}, 409);
  EXPECT_EQ(err["error"], "session_completed");
}

TEST_F(HttpApi, DisabledEventIs409WithAlternatives) {
  auto id = create("two-unit");
  post("/sessions/" + id + "/events", {{"type", "next"}}, 200);
  auto err = post("/sessions/" + id + "/events", {{"type", "back"}}, 409);
  EXPECT_EQ(err["error"], "event_not_enabled");
  EXPECT_EQ(err["available_events"], Json::array({"submit"}));
}

TEST_F(HttpApi, ClientErrors) {
  EXPECT_EQ(post("/sessions", {{"course_id", "missing"}}, 404)["error"], "unknown_course");
  EXPECT_EQ(post("/sessions", {{"id", "two-unit"}}, 400)["error"], "bad_request");
  EXPECT_EQ(get("/sessions/nope", 404)["error"], "session_not_found");
  EXPECT_EQ(post("/sessions/nope/events", {{"type", "next"}}, 404)["error"], "session_not_found");
  auto id = create("two-unit");
  EXPECT_EQ(post("/sessions/" + id + "/events", {{"type", 3}}, 400)["error"], "bad_request");
  auto res = client_->Post("/sessions/" + id + "/events", "{not json", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  EXPECT_EQ(post("/sessions", {{"course_id", "two-unit"}, {"strategy", {{{"name", "bogus"}}}}}, 400)["error"],
            "invalid_strategy");
}

TEST_F(HttpApi, DeleteAbandons) {
  auto id = create("algebra");
  auto res = client_->Delete("/sessions/" + id);
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(Json::parse(res->body)["status"], "abandoned");
  EXPECT_EQ(post("/sessions/" + id + "/events", {{"type", "next"}}, 409)["error"], "session_completed");
}

TEST_F(HttpApi, CorsPreflight) {
  auto res = client_->Options("/sessions");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 204);
  EXPECT_EQ(res->get_header_value("Access-Control-Allow-Origin"), "*");
}
