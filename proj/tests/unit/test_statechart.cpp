#include <gtest/gtest.h>

#include "seqchart/statechart.hpp"

using namespace seqchart;

namespace {

StateNode atomic(StateId id) { return {std::move(id)}; }
StateNode or_state(StateId id, std::vector<StateId> children, StateId initial) {
  return {std::move(id), StateKind::CompoundOr, std::move(children), std::move(initial)};
}
Transition on(StateId source, EventKind event, StateId target) {
  return {std::move(source), event, {}, Guard::always(), std::move(target)};
}

bool has_rule(const std::vector<Violation>& found, const std::string& rule) {
  for (const auto& v : found) {
    if (v.rule == rule) return true;
  }
  return false;
}

Statechart two_state() {
  return Statechart("root", {or_state("root", {"a", "b"}, "a"), atomic("a"), atomic("b")},
                    {on("a", EventKind::Next, "b")});
}

Statechart parallel() {
  return Statechart("root",
                    {or_state("root", {"p"}, "p"), {"p", StateKind::CompoundAnd, {"r1", "r2"}},
                     or_state("r1", {"x"}, "x"), or_state("r2", {"y"}, "y"), atomic("x"), atomic("y")},
                    {});
}

}  // namespace

TEST(CheckChart, TwoStateChartIsWellFormed) { EXPECT_TRUE(check_chart(two_state()).empty()); }

TEST(CheckChart, BadInitial) {
  Statechart chart("root", {or_state("root", {"a"}, "zzz"), atomic("a")}, {});
  EXPECT_TRUE(has_rule(check_chart(chart), "bad-initial"));
}

TEST(CheckChart, RegionTarget) {
  auto chart = parallel();
  chart = chart.with_transitions({on("x", EventKind::Next, "r2")});
  EXPECT_TRUE(has_rule(check_chart(chart), "region-target"));
}

TEST(CheckChart, ParallelChartIsWellFormed) { EXPECT_TRUE(check_chart(parallel()).empty()); }

TEST(CheckChart, StructuralViolations) {
  EXPECT_TRUE(has_rule(check_chart(Statechart("nope", {atomic("a")}, {})), "missing-root"));
  EXPECT_TRUE(has_rule(check_chart(Statechart("a", {atomic("a")}, {})), "root-kind"));
  EXPECT_TRUE(has_rule(check_chart(Statechart("root", {or_state("root", {"a", "ghost"}, "a"), atomic("a")}, {})),
                       "unknown-child"));
  EXPECT_TRUE(has_rule(
      check_chart(Statechart("root", {or_state("root", {"a", "b"}, "a"), or_state("a", {"b"}, "b"), atomic("b")}, {})),
      "multiple-parents"));
  EXPECT_TRUE(has_rule(check_chart(Statechart("root", {or_state("root", {"a"}, "a"), atomic("a"), atomic("lost")}, {})),
                       "detached-state"));
  EXPECT_TRUE(has_rule(check_chart(Statechart("root", {or_state("root", {}, "")}, {})), "or-empty"));

  StateNode timed = atomic("a");
  timed.deadline = 0;
  EXPECT_TRUE(has_rule(check_chart(Statechart("root", {or_state("root", {"a"}, "a"), timed}, {})), "bad-deadline"));
}

TEST(CheckChart, TransitionViolations) {
  auto base = two_state();
  EXPECT_TRUE(has_rule(check_chart(base.with_transitions({on("ghost", EventKind::Next, "b")})), "unknown-source"));
  EXPECT_TRUE(has_rule(check_chart(base.with_transitions({on("a", EventKind::Next, "ghost")})), "unknown-target"));
  EXPECT_TRUE(has_rule(check_chart(base.with_transitions({on("a", EventKind::Next, "root")})), "root-target"));
  EXPECT_TRUE(has_rule(check_chart(base.with_transitions({on("a", EventKind::Timeout, "b")})), "event-state"));

  Transition bad_guard = on("a", EventKind::Next, "b");
  bad_guard.guard = Guard::attempt_count("ghost", Cmp::Lt, 2);
  EXPECT_TRUE(has_rule(check_chart(base.with_transitions({bad_guard})), "guard-subject"));

  Transition bad_effect = on("a", EventKind::Next, "b");
  bad_effect.effects = {Effect::count_attempt("ghost")};
  EXPECT_TRUE(has_rule(check_chart(base.with_transitions({bad_effect})), "effect-subject"));
}

TEST(Statechart, HierarchyQueries) {
  auto chart = parallel();
  EXPECT_EQ(chart.depth("root"), 0u);
  EXPECT_EQ(chart.depth("x"), 3u);
  EXPECT_EQ(*chart.parent("x"), "r1");
  EXPECT_EQ(chart.parent("root"), nullptr);
  EXPECT_EQ(chart.ancestors("x"), (std::vector<StateId>{"r1", "p", "root"}));
  EXPECT_TRUE(chart.is_descendant("y", "p"));
  EXPECT_FALSE(chart.is_descendant("p", "y"));
  EXPECT_THROW(chart.at("ghost"), std::out_of_range);
}

TEST(Statechart, GuardConstants) {
  Transition t = on("a", EventKind::Next, "b");
  t.guard = Guard::all_of({Guard::attempt_count("a", Cmp::Lt, 3), Guard::last_score(Cmp::Ge, 0.8),
                           Guard::negate(Guard::last_score(Cmp::Lt, 0.4))});
  auto chart = two_state().with_transitions({t});
  EXPECT_DOUBLE_EQ(max_attempt_constant(chart), 3.0);
  EXPECT_EQ(score_constants(chart), (std::vector<double>{0.4, 0.8}));
}

TEST(Enums, RoundTripNames) {
  for (auto kind : {EventKind::Enter, EventKind::Next, EventKind::Back, EventKind::Submit,
                    EventKind::AssessmentResult, EventKind::Timeout, EventKind::ExitReached}) {
    EXPECT_EQ(parse_event_kind(to_string(kind)), kind);
  }
  for (auto cmp : {Cmp::Lt, Cmp::Le, Cmp::Eq, Cmp::Ge, Cmp::Gt}) EXPECT_EQ(parse_cmp(to_string(cmp)), cmp);
  EXPECT_FALSE(parse_state_kind("bogus").has_value());
  EXPECT_TRUE(compare(0.5, Cmp::Ge, 0.5));
  EXPECT_FALSE(compare(0.5, Cmp::Gt, 0.5));
}
