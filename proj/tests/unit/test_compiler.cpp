#include <gtest/gtest.h>

#include <random>

#include "generator.hpp"
#include "oracles.hpp"
#include "seqchart/compiler.hpp"
#include "seqchart/simulation.hpp"

using namespace seqchart;
using seqchart::testkit::data_dir;
using seqchart::testkit::read_file;

namespace {

ActivityTree fixture(const std::string& name) { return parse_manifest(read_file(data_dir() / "fixtures" / name)); }

std::vector<const Transition*> from(const Statechart& chart, const StateId& source, EventKind kind) {
  std::vector<const Transition*> out;
  for (const auto& t : chart.transitions()) {
    if (t.source == source && t.event == kind) out.push_back(&t);
  }
  return out;
}

}  // namespace

TEST(Compile, EmptyItemRoutesEntryToExit) {
  auto chart = compile(fixture("empty_item.json")).chart;
  auto entry = from(chart, "entry:I1", EventKind::Enter);
  ASSERT_EQ(entry.size(), 1u);
  EXPECT_EQ(entry[0]->target, "exit:I1");
  EXPECT_EQ(entry[0]->guard, Guard::always());
}

TEST(Compile, ItemLayout) {
  auto compiled = compile(fixture("two_unit.json"));
  const auto& chart = compiled.chart;
  const auto& item = chart.at("item:I1");
  EXPECT_EQ(item.kind, StateKind::CompoundOr);
  EXPECT_EQ(item.initial, "entry:I1");
  EXPECT_EQ(item.children,
            (std::vector<StateId>{"entry:I1", "asset:A1", "assessment:Q1", "exit:I1", "final:I1"}));
  EXPECT_EQ(chart.at("final:I1").kind, StateKind::Final);

  EXPECT_EQ(from(chart, "asset:A1", EventKind::Next).at(0)->target, "assessment:Q1");
  auto submits = from(chart, "assessment:Q1", EventKind::Submit);
  ASSERT_EQ(submits.size(), 2u);
  EXPECT_EQ(submits[0]->guard, Guard::last_score(Cmp::Ge, 0.5));
  EXPECT_EQ(submits[0]->effects, (std::vector<Effect>{Effect::set_outcome(Outcome::Passed)}));
  EXPECT_EQ(submits[1]->guard, Guard::last_score(Cmp::Lt, 0.5));
  EXPECT_EQ(submits[1]->effects, (std::vector<Effect>{Effect::set_outcome(Outcome::Failed)}));
  EXPECT_TRUE(from(chart, "assessment:Q1", EventKind::Back).empty());

  auto exits = from(chart, "exit:I1", EventKind::Enter);
  ASSERT_EQ(exits.size(), 3u);
  EXPECT_EQ(exits[0]->target, "entry:I1");
  EXPECT_EQ(exits[0]->priority, kRetryPriority);
  EXPECT_EQ(exits[1]->target, "final:I1");
  EXPECT_EQ(exits[2]->target, "final:I1");

  EXPECT_EQ(compiled.map.unit_state.at("Q1"), "assessment:Q1");
  EXPECT_EQ(compiled.map.entry_of.at("I1"), "entry:I1");
  EXPECT_EQ(compiled.map.exit_of.at("I1"), "exit:I1");
  EXPECT_EQ(compiled.map.node_state.at("C1"), "curriculum:C1");
}

TEST(Compile, TimedAssessmentGetsDeadlineAndTimeout) {
  auto chart = compile(fixture("courses/algebra.json")).chart;
  EXPECT_EQ(chart.at("assessment:lin-quiz").deadline, 30);
  auto timeouts = from(chart, "assessment:lin-quiz", EventKind::Timeout);
  ASSERT_EQ(timeouts.size(), 1u);
  EXPECT_EQ(timeouts[0]->target, "exit:LIN-check");
  EXPECT_EQ(timeouts[0]->effects, (std::vector<Effect>{Effect::set_outcome(Outcome::Failed)}));
}

TEST(Compile, SubmitPassReachesItemFinal) {
  auto chart = compile(fixture("two_unit.json")).chart;
  auto config = initial_configuration(chart);
  auto ctx = initial_context(chart);
  for (const auto& event : {Event::enter(), Event::next(), Event::submit(1.0), Event::enter()}) {
    auto r = step(chart, config, event, ctx);
    ASSERT_FALSE(r.fired.empty()) << describe(event);
    config = r.configuration;
    ctx = r.context;
  }
  EXPECT_TRUE(config.contains("final:I1"));
}

TEST(Compile, MidItemAssessmentPassContinuesToNextUnit) {
  ActivityTree tree(ActivityNode::cluster(
      "C1", Level::Curriculum,
      {ActivityNode::item("I1", {{"Q1", UnitKind::AssessmentAsset, "q"}, {"A2", UnitKind::Asset, "a"}})}));
  auto chart = compile(tree).chart;
  auto submits = from(chart, "assessment:Q1", EventKind::Submit);
  ASSERT_EQ(submits.size(), 2u);
  EXPECT_EQ(submits[0]->target, "asset:A2");
  EXPECT_EQ(submits[0]->effects, std::vector<Effect>{Effect::set_outcome(Outcome::Passed)});
  EXPECT_EQ(submits[1]->target, "exit:I1");
  EXPECT_EQ(submits[1]->effects, std::vector<Effect>{Effect::set_outcome(Outcome::Failed)});
}

TEST(Compile, ExitReachedMovesToNextSibling) {
  ActivityTree tree(ActivityNode::cluster(
      "C1", Level::Curriculum,
      {ActivityNode::cluster("T", Level::Topic, {ActivityNode::item("I1"), ActivityNode::item("I2")})}));
  auto chart = compile(tree).chart;
  auto config = configuration_at(chart, "final:I1");
  auto r = step(chart, config, Event::exit_reached("item:I1"), initial_context(chart));
  EXPECT_EQ(active_leaves(chart, r.configuration), (std::vector<StateId>{"entry:I2"}));
}

TEST(Compile, RejectsInvalidTree) {
  ActivityTree tree(ActivityNode::cluster("C1", Level::Curriculum, {}));
  EXPECT_THROW(compile(tree), InvalidTree);
}

TEST(CourseLength, HandTracedFixtures) {
  EXPECT_EQ(course_length(fixture("empty_item.json")), 3);
  EXPECT_EQ(course_length(fixture("two_unit.json")), 5);
  EXPECT_EQ(course_length(fixture("minimal.json")), 6);
}

TEST(CourseLength, TwinSiblingsDoubleThePerItemCost) {
  auto one = ActivityTree(ActivityNode::cluster("C1", Level::Curriculum,
                                                {ActivityNode::item("I1", {{"A1", UnitKind::Asset, "x"}})}));
  auto two = ActivityTree(ActivityNode::cluster(
      "C1", Level::Curriculum,
      {ActivityNode::item("I1", {{"A1", UnitKind::Asset, "x"}}), ActivityNode::item("I2", {{"A2", UnitKind::Asset, "y"}})}));
  // per item: Enter + 1 unit + exit rule; propagation: one ExitReached per item
  EXPECT_EQ(course_length(one), 3 + 1);
  EXPECT_EQ(course_length(two), 2 * 3 + 2);
  auto pass = LearnerPolicy::always_pass();
  EXPECT_EQ(run_session(compile(two).chart, pass, 100).steps(), course_length(two));
}

TEST(CompileProperties, GeneratedTrees) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 300; ++i) {
    auto tree = testkit::random_tree(rng, {});
    auto compiled = compile(tree);
    const auto& chart = compiled.chart;
    EXPECT_TRUE(check_chart(chart).empty());
    for (const auto& state : chart.states()) EXPECT_NE(state.kind, StateKind::CompoundAnd);

    // Totality and injectivity of the map.
    std::set<StateId> targets;
    for (const auto* node : tree.nodes()) {
      ASSERT_EQ(compiled.map.node_state.count(node->id), 1u);
      EXPECT_TRUE(chart.contains(compiled.map.node_state.at(node->id)));
      EXPECT_TRUE(targets.insert(compiled.map.node_state.at(node->id)).second);
      for (const auto& unit : node->units) {
        ASSERT_EQ(compiled.map.unit_state.count(unit.id), 1u);
        EXPECT_TRUE(targets.insert(compiled.map.unit_state.at(unit.id)).second);
      }
    }
    EXPECT_EQ(compile(tree).chart, chart);
  }
}
