#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "seqchart/statechart.hpp"

namespace seqchart {

/// The set of active states plus the tick at which each was entered.
struct Configuration {
  std::set<StateId> active;
  std::map<StateId, std::int64_t> entered_at;

  bool contains(const StateId& id) const { return active.count(id) != 0; }
  bool operator==(const Configuration&) const = default;
};

struct EvalContext {
  std::map<StateId, std::int64_t> attempt_count;
  std::optional<double> last_score;
  std::optional<Outcome> last_outcome;
  std::map<StateId, bool> has_next;
  std::int64_t now = 0;

  std::int64_t attempts(const StateId& id) const {
    auto it = attempt_count.find(id);
    return it == attempt_count.end() ? 0 : it->second;
  }
  bool operator==(const EvalContext&) const = default;
};

struct Event {
  EventKind kind = EventKind::Enter;
  double score = 0.0;                 // Submit, AssessmentResult
  Outcome outcome = Outcome::Passed;  // AssessmentResult
  StateId state;                      // Timeout, ExitReached

  static Event enter() { return {EventKind::Enter}; }
  static Event next() { return {EventKind::Next}; }
  static Event back() { return {EventKind::Back}; }
  static Event submit(double score) { return {EventKind::Submit, score}; }
  static Event result(Outcome outcome, double score) { return {EventKind::AssessmentResult, score, outcome}; }
  static Event timeout(StateId s) { return {EventKind::Timeout, 0.0, Outcome::Passed, std::move(s)}; }
  static Event exit_reached(StateId s) { return {EventKind::ExitReached, 0.0, Outcome::Passed, std::move(s)}; }

  bool carries_score() const { return kind == EventKind::Submit || kind == EventKind::AssessmentResult; }
  bool operator==(const Event&) const = default;
};

std::string describe(const Event& event);

struct StepResult {
  Configuration configuration;
  EvalContext context;  // ctx after the fired transitions' effects
  std::vector<TransitionIndex> fired;
  std::vector<Event> emitted;
  std::vector<StateId> exited;   // innermost first
  std::vector<StateId> entered;  // outermost first
};

class ChartError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class IllFormedChart : public ChartError {
 public:
  using ChartError::ChartError;
};
class InvalidConfiguration : public ChartError {
 public:
  using ChartError::ChartError;
};
class InvalidEvent : public ChartError {
 public:
  using ChartError::ChartError;
};
class ClockRegression : public ChartError {
 public:
  using ChartError::ChartError;
};

bool evaluate(const Guard& guard, const EvalContext& ctx);

/// Context seen by guards while `event` is being dispatched: a score-carrying
/// event overrides last_score, an AssessmentResult overrides last_outcome.
EvalContext dispatch_context(const EvalContext& ctx, const Event& event);

/// Applies a fired transition's effects to the context.
void apply_effects(const Transition& transition, const Event& event, EvalContext& ctx);

/// has_next[s] is true when s has a later non-final sibling in its parent.
std::map<StateId, bool> structural_has_next(const Statechart& chart);

/// Fresh context for a session over `chart`: no attempts, no outcome, tick 0.
EvalContext initial_context(const Statechart& chart);

Configuration initial_configuration(const Statechart& chart, std::int64_t now = 0);

/// Configuration whose active path runs from the root to `state`, completed by default entry.
Configuration configuration_at(const Statechart& chart, const StateId& state, std::int64_t now = 0);

/// Empty when `config` is consistent with `chart`, otherwise the reason.
std::optional<std::string> check_configuration(const Statechart& chart, const Configuration& config);

std::vector<TransitionIndex> enabled_transitions(const Statechart& chart, const Configuration& config,
                                                 const Event& event, const EvalContext& ctx);

StepResult step(const Statechart& chart, const Configuration& config, const Event& event,
                const EvalContext& ctx);

/// Timeouts for active states whose deadline (entered_at + deadline) falls in
/// (ctx.now, new_now]. Each deadline is crossed once per entry, so a state
/// times out at most once per entry as long as the clock only moves forward.
std::vector<Event> advance_clock(const Statechart& chart, const Configuration& config, const EvalContext& ctx,
                                 std::int64_t new_now);

/// Active states in hierarchy (document pre-order) order.
std::vector<StateId> active_in_order(const Statechart& chart, const Configuration& config);

/// Active atomic/final states in hierarchy order.
std::vector<StateId> active_leaves(const Statechart& chart, const Configuration& config);

}  // namespace seqchart
