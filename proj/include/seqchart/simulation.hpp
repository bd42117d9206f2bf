#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "seqchart/chart_json.hpp"
#include "seqchart/engine.hpp"

namespace seqchart {

/// Events a learner can produce. Timeout and ExitReached are generated internally.
inline constexpr EventKind kLearnerEvents[] = {EventKind::Enter, EventKind::Next, EventKind::Back,
                                               EventKind::Submit};

/// Scores that separate every LastScore comparison in the chart: 0, 1, each
/// constant and the midpoints between neighbours.
std::vector<double> score_probes(const Statechart& chart);

/// Learner event kinds with at least one enabled transition. Submit counts
/// as available when some probe score enables it.
std::vector<EventKind> available_events(const Statechart& chart, const Configuration& config,
                                        const EvalContext& ctx);

/// Innermost active item state, if any.
std::optional<StateId> current_item(const Statechart& chart, const Configuration& config);

/// Finite abstraction of a context used for cycle detection: outcome, last
/// score, attempt counts capped at `attempt_cap`, and the age of each active
/// state with a deadline (capped at the deadline).
std::string context_class(const Statechart& chart, const Configuration& config, const EvalContext& ctx,
                          std::int64_t attempt_cap);

struct ScoreModel {
  enum class Kind { Constant, Bernoulli, Improving };
  Kind kind = Kind::Constant;
  double value = 1.0;  // Constant score; Bernoulli pass probability
  double pass_score = 1.0;
  double fail_score = 0.0;
  double start = 0.0;  // Improving: score of the first attempt
  double gain = 0.0;   // Improving: increase per further attempt
  double cap = 1.0;

  static ScoreModel constant(double score) { return {Kind::Constant, score}; }
  static ScoreModel bernoulli(double p, double pass = 1.0, double fail = 0.0) {
    return {Kind::Bernoulli, p, pass, fail};
  }
  static ScoreModel improving(double start, double gain, double cap) {
    return {Kind::Improving, 0.0, 1.0, 0.0, start, gain, cap};
  }
};

struct PolicyView {
  const Statechart& chart;
  const Configuration& config;
  const EvalContext& ctx;
  const std::vector<EventKind>& available;
};

/// Scripted learner. `Scripted` prefers Submit, then Next, Enter, Back;
/// `Random` picks uniformly among the available events.
class LearnerPolicy {
 public:
  enum class Choice { Scripted, Random };

  LearnerPolicy(std::string name, ScoreModel scores, std::uint64_t seed, Choice choice = Choice::Scripted);

  static LearnerPolicy always_pass(std::uint64_t seed = 0);
  static LearnerPolicy always_fail(std::uint64_t seed = 0);
  /// always-pass | always-fail | constant:S | bernoulli:P[:PASS:FAIL] | improving:START:GAIN:CAP | random[:P]
  static LearnerPolicy from_spec(std::string_view spec, std::uint64_t seed);

  const std::string& name() const { return name_; }
  std::uint64_t seed() const { return seed_; }

  Event decide(const PolicyView& view);

  /// Identifies the policy's future behaviour at this point when it is a
  /// function of the view alone; nullopt for stochastic policies.
  std::optional<std::string> fingerprint(const PolicyView& view) const;

 private:
  double next_uniform();
  double score_for(const PolicyView& view);
  bool deterministic() const;

  std::string name_;
  ScoreModel scores_;
  std::uint64_t seed_;
  Choice choice_;
  std::mt19937_64 rng_;
};

class PolicyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TraceRecord {
  std::int64_t tick = 0;
  std::vector<StateId> active;  // hierarchy order
  std::optional<Event> event;   // empty for the initial record
  std::vector<TransitionIndex> fired;
  std::optional<Outcome> outcome;  // recorded by this step
  std::optional<double> score;     // carried by this step's event
};

enum class TerminalStatus { Running, Completed, StepBudgetExhausted, LivelockDetected };
std::string_view to_string(TerminalStatus status);

struct WitnessStep {
  std::vector<StateId> active;
  std::string context_class;
};

struct SessionTrace {
  std::vector<TraceRecord> records;
  TerminalStatus status = TerminalStatus::Running;
  std::vector<WitnessStep> livelock_witness;
  EvalContext final_context;

  /// Number of engine steps (records after the initial one).
  std::int64_t steps() const { return records.empty() ? 0 : static_cast<std::int64_t>(records.size()) - 1; }
};

/// Runs one session over a chart: one engine step per tick, internal events
/// (ExitReached, due timeouts) before learner events.
class SessionDriver {
 public:
  explicit SessionDriver(std::shared_ptr<const Statechart> chart);

  const Statechart& chart() const { return *chart_; }
  const Configuration& configuration() const { return config_; }
  const EvalContext& context() const { return ctx_; }
  const std::vector<TraceRecord>& records() const { return records_; }
  bool completed() const;

  /// Learner events currently enabled.
  std::vector<EventKind> available() const { return available_events(*chart_, config_, ctx_); }

  /// True when an internal event is waiting or a deadline falls due on the next tick.
  bool has_internal() const;
  /// Processes one internal event (one tick). Returns false, without touching
  /// any state, when nothing is pending.
  bool step_internal();
  /// Advances the clock one tick and dispatches a learner event.
  StepResult apply(const Event& event);

 private:
  void drop_stale();
  StepResult dispatch(const Event& event);

  std::shared_ptr<const Statechart> chart_;
  Configuration config_;
  EvalContext ctx_;
  std::deque<Event> pending_;
  std::vector<TraceRecord> records_;
  std::string global_final_;
};

SessionTrace run_session(const Statechart& chart, LearnerPolicy& policy, std::int64_t max_steps);

struct StatsSummary {
  std::int64_t learners = 0;
  std::int64_t completed = 0;
  std::int64_t livelocked = 0;
  std::int64_t budget_exhausted = 0;
  double completion_rate = 0.0;
  double mean_steps = 0.0;
  double median_steps = 0.0;
  double mean_attempts_per_item = 0.0;
};

using PolicyFactory = std::function<LearnerPolicy(std::uint64_t seed)>;

/// Runs one session per seed and aggregates. n_learners must equal seeds.size().
StatsSummary population_stats(const Statechart& chart, const PolicyFactory& policy_template, std::int64_t n_learners,
                              const std::vector<std::uint64_t>& seeds, std::int64_t max_steps);

Json to_json(const TraceRecord& record);
Json to_json(const StatsSummary& stats);
/// One JSON object per line: every record, then a terminal status line.
std::string trace_to_jsonl(const SessionTrace& trace);

}  // namespace seqchart
