#include <gtest/gtest.h>

#include <random>

#include "generator.hpp"
#include "seqchart/chart_json.hpp"
#include "seqchart/compiler.hpp"
#include "seqchart/strategy.hpp"

using namespace seqchart;

TEST(ChartJson, GuardShape) {
  auto guard = Guard::all_of({Guard::failed(), Guard::attempt_count("item:I1", Cmp::Ge, 2)});
  EXPECT_EQ(to_json(guard).dump(),
            R"({"op":"and","args":[{"op":"failed","args":[]},{"op":"attempt_count","args":["item:I1",">=",2]}]})");
  EXPECT_EQ(to_json(Guard::last_score(Cmp::Lt, 0.75)).dump(), R"({"op":"last_score","args":["<",0.75]})");
  EXPECT_EQ(guard_from_json(to_json(guard)), guard);
}

TEST(ChartJson, TopLevelKeyOrderIsStable) {
  std::mt19937_64 rng(1);
  auto chart = compile(testkit::random_tree(rng, {})).chart;
  auto doc = to_json(chart);
  std::vector<std::string> keys;
  for (const auto& [key, value] : doc.items()) keys.push_back(key);
  EXPECT_EQ(keys, (std::vector<std::string>{"states", "transitions", "root"}));
}

TEST(ChartJson, RoundTripGeneratedCharts) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 100; ++i) {
    auto compiled = compile(testkit::random_tree(rng, {}));
    auto chart = apply(compose({strategies::max_attempts(3, FailureAction::RemediateToItemStart),
                                strategies::skip_ahead()}),
                       compiled.chart, compiled.map, {true, nullptr});
    auto text = dump_chart(chart);
    auto back = parse_chart(text);
    EXPECT_EQ(back, chart);
    EXPECT_EQ(dump_chart(back), text);
    EXPECT_EQ(compilation_map_from_json(to_json(compiled.map)), compiled.map);
  }
}

TEST(ChartJson, RejectsMalformedDocuments) {
  EXPECT_THROW(parse_chart("[]"), ChartFormatError);
  EXPECT_THROW(parse_chart("{"), ChartFormatError);
  EXPECT_THROW(parse_chart(R"({"states":[],"transitions":[]})"), ChartFormatError);
  EXPECT_THROW(guard_from_json(Json::parse(R"({"op":"last_score","args":["~",1]})")), ChartFormatError);
  EXPECT_THROW(guard_from_json(Json::parse(R"({"op":"sometimes","args":[]})")), ChartFormatError);
}

TEST(ChartJson, EventsConfigurationsContexts) {
  for (const auto& event : {Event::enter(), Event::submit(0.25), Event::result(Outcome::Failed, 0.1),
                            Event::timeout("assessment:Q1"), Event::exit_reached("item:I1")}) {
    EXPECT_EQ(event_from_json(to_json(event)), event);
  }
  Configuration config{{"root", "a"}, {{"root", 0}, {"a", 3}}};
  EXPECT_EQ(configuration_from_json(to_json(config)), config);

  EvalContext ctx;
  ctx.attempt_count["item:I1"] = 2;
  ctx.last_score = 0.5;
  ctx.last_outcome = Outcome::Passed;
  ctx.now = 9;
  EXPECT_EQ(context_from_json(to_json(ctx)), ctx);
}
