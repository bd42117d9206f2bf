#include <gtest/gtest.h>

#include <atomic>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "oracles.hpp"
#include "seqchart/chart_json.hpp"
#include "seqchart/cli.hpp"
#include "seqchart/compiler.hpp"

using namespace seqchart;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "seqchart");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string fixture(const std::string& name) { return (testkit::data_dir() / "fixtures" / name).string(); }

fs::path scratch(const std::string& name) {
  static std::atomic<int> counter{0};
  return fs::temp_directory_path() / ("seqchart-cli-" + std::to_string(::getpid()) + "-" +
                                      std::to_string(counter++) + "-" + name);
}

}  // namespace

TEST(Cli, ValidateIsSilentOnSuccess) {
  auto r = run({"validate", fixture("two_unit.json")});
  EXPECT_EQ(r.code, 0);
  EXPECT_TRUE(r.out.empty());
  EXPECT_TRUE(r.err.empty());
}

TEST(Cli, ValidateReportsModelErrors) {
  auto r = run({"validate", fixture("childless_cluster.json")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("T1"), std::string::npos);
  EXPECT_EQ(run({"validate", fixture("duplicate_id.json")}).code, 1);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"frobnicate"}).code, 2);
  EXPECT_EQ(run({"validate"}).code, 2);
  EXPECT_EQ(run({"validate", "/no/such/file.json"}).code, 2);
  EXPECT_EQ(run({"simulate", fixture("two_unit.json"), "--policy", "telepathy"}).code, 2);
  EXPECT_EQ(run({"simulate", fixture("two_unit.json")}).code, 2);
  EXPECT_EQ(run({"explore", fixture("two_unit.json"), "--outcomes", "maybe"}).code, 2);
}

TEST(Cli, CompileWritesChartAndMap) {
  auto out = scratch("chart.json");
  auto r = run({"compile", fixture("two_unit.json"), "-o", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  auto expected = compile(parse_manifest(testkit::read_file(fixture("two_unit.json"))));
  EXPECT_EQ(parse_chart(testkit::read_file(out)), expected.chart);
  auto map = Json::parse(testkit::read_file(out.string() + ".map.json"));
  EXPECT_EQ(map, to_json(expected.map));
  fs::remove(out);
  fs::remove(out.string() + ".map.json");
}

TEST(Cli, SimulateMatchesGolden) {
  auto r = run({"simulate", fixture("two_unit.json"), "--policy", "always-pass"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, testkit::read_file(testkit::data_dir() / "golden" / "two_unit.always-pass.jsonl"));
}

TEST(Cli, SimulateIsDeterministicPerSeed) {
  auto a = run({"simulate", fixture("courses/algebra.json"), "--policy", "random", "--seed", "9"});
  auto b = run({"simulate", fixture("courses/algebra.json"), "--policy", "random", "--seed", "9"});
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
}

TEST(Cli, StrategyDocument) {
  auto doc = scratch("strategy.json");
  std::ofstream(doc) << R"([{"name":"max-attempts","params":{"n":2,"action":"skip"}}])";
  auto r = run({"simulate", fixture("two_unit.json"), "--policy", "always-fail", "--strategy", doc.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("\"terminal\":\"completed\""), std::string::npos);

  std::ofstream(doc) << R"([{"name":"warp"}])";
  EXPECT_EQ(run({"simulate", fixture("two_unit.json"), "--policy", "always-pass", "--strategy", doc.string()}).code,
            1);
  fs::remove(doc);
}

TEST(Cli, ExploreReportsTrap) {
  auto r = run({"explore", fixture("two_unit.json"), "--outcomes", "failed"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto report = Json::parse(r.out);
  EXPECT_FALSE(report["completion_reachable"].get<bool>());
  EXPECT_FALSE(report["livelock_witness"].is_null());
}

TEST(Cli, Stats) {
  auto r = run({"stats", fixture("two_unit.json"), "--policy", "always-pass", "--learners", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto stats = Json::parse(r.out);
  EXPECT_EQ(stats["learners"], 3);
  EXPECT_EQ(stats["completion_rate"], 1.0);
}
