#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "seqchart/violation.hpp"

namespace seqchart {

using StateId = std::string;
using TransitionIndex = std::size_t;

enum class StateKind { Atomic, CompoundOr, CompoundAnd, Final };

// Semantic tag attached by the sequencing compiler. The interpreter ignores it;
// strategies, the explorer and the session service use it to find anchors.
enum class StateRole { None, Cluster, Item, EntryChoice, Asset, Assessment, ExitPoint, Final };

enum class EventKind { Enter, Next, Back, Submit, AssessmentResult, Timeout, ExitReached };

enum class Outcome { Passed, Failed };

enum class Cmp { Lt, Le, Eq, Ge, Gt };

std::string_view to_string(StateKind kind);
std::string_view to_string(StateRole role);
std::string_view to_string(EventKind kind);
std::string_view to_string(Outcome outcome);
std::string_view to_string(Cmp cmp);
std::optional<StateKind> parse_state_kind(std::string_view text);
std::optional<StateRole> parse_state_role(std::string_view text);
std::optional<EventKind> parse_event_kind(std::string_view text);
std::optional<Outcome> parse_outcome(std::string_view text);
std::optional<Cmp> parse_cmp(std::string_view text);
bool compare(double lhs, Cmp cmp, double rhs);

struct StateNode {
  StateId id;
  StateKind kind = StateKind::Atomic;
  std::vector<StateId> children;  // CompoundOr / CompoundAnd
  StateId initial;                // CompoundOr
  std::optional<std::int64_t> deadline;
  StateRole role = StateRole::None;
  std::string ref;  // id of the tree node or unit this state was compiled from

  bool is_compound() const { return kind == StateKind::CompoundOr || kind == StateKind::CompoundAnd; }
  bool operator==(const StateNode&) const = default;
};

enum class GuardOp { Always, HasNextSibling, AttemptCount, LastScore, Passed, Failed, And, Or, Not };

std::string_view to_string(GuardOp op);
std::optional<GuardOp> parse_guard_op(std::string_view text);

/// Declarative guard expression. Atoms HasNextSibling and AttemptCount name a
/// subject state; AttemptCount and LastScore compare against `value`.
struct Guard {
  GuardOp op = GuardOp::Always;
  StateId subject;
  Cmp cmp = Cmp::Ge;
  double value = 0.0;
  std::vector<Guard> args;

  static Guard always() { return {}; }
  static Guard passed() { return {GuardOp::Passed}; }
  static Guard failed() { return {GuardOp::Failed}; }
  static Guard has_next_sibling(StateId state) { return {GuardOp::HasNextSibling, std::move(state)}; }
  static Guard attempt_count(StateId state, Cmp cmp, double n) {
    return {GuardOp::AttemptCount, std::move(state), cmp, n};
  }
  static Guard last_score(Cmp cmp, double r) { return {GuardOp::LastScore, {}, cmp, r}; }
  static Guard all_of(std::vector<Guard> terms) { return {GuardOp::And, {}, Cmp::Ge, 0.0, std::move(terms)}; }
  static Guard any_of(std::vector<Guard> terms) { return {GuardOp::Or, {}, Cmp::Ge, 0.0, std::move(terms)}; }
  static Guard negate(Guard term) { return {GuardOp::Not, {}, Cmp::Ge, 0.0, {std::move(term)}}; }

  bool operator==(const Guard&) const = default;
};

/// Context updates performed when a transition fires.
struct Effect {
  enum class Kind { SetOutcome, ClearOutcome, CountAttempt, ResetAttempts };
  Kind kind = Kind::ClearOutcome;
  Outcome outcome = Outcome::Passed;  // SetOutcome
  StateId subject;                    // CountAttempt / ResetAttempts

  static Effect set_outcome(Outcome o) { return {Kind::SetOutcome, o, {}}; }
  static Effect clear_outcome() { return {Kind::ClearOutcome, Outcome::Passed, {}}; }
  static Effect count_attempt(StateId s) { return {Kind::CountAttempt, Outcome::Passed, std::move(s)}; }
  static Effect reset_attempts(StateId s) { return {Kind::ResetAttempts, Outcome::Passed, std::move(s)}; }

  bool operator==(const Effect&) const = default;
};

std::string_view to_string(Effect::Kind kind);

struct Transition {
  StateId source;
  EventKind event = EventKind::Enter;
  StateId event_state;  // Timeout / ExitReached only
  Guard guard;
  StateId target;
  int priority = 1;  // lower wins
  std::vector<Effect> effects;

  bool operator==(const Transition&) const = default;
};

/// Immutable chart. Construction never fails; use check_chart to validate.
class Statechart {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  Statechart() = default;
  Statechart(StateId root, std::vector<StateNode> states, std::vector<Transition> transitions);

  const StateId& root() const { return root_; }
  const std::vector<StateNode>& states() const { return states_; }
  const std::vector<Transition>& transitions() const { return transitions_; }

  std::size_t index_of(std::string_view id) const;
  bool contains(std::string_view id) const { return index_of(id) != npos; }
  const StateNode* find(std::string_view id) const;
  /// Throws std::out_of_range for unknown ids.
  const StateNode& at(std::string_view id) const;

  /// Parent id, or nullptr for the root and detached states.
  const StateId* parent(std::string_view id) const;
  /// Distance from the root (root = 0); npos for detached states.
  std::size_t depth(std::string_view id) const;
  /// Proper ancestors, innermost first.
  std::vector<StateId> ancestors(std::string_view id) const;
  bool is_descendant(std::string_view id, std::string_view ancestor) const;

  const std::vector<TransitionIndex>& transitions_from(std::string_view source) const;

  /// First Final child of the root; the global completion state.
  const StateNode* global_final() const;

  /// Copy with a replaced transition list (states untouched).
  Statechart with_transitions(std::vector<Transition> transitions) const;

  bool operator==(const Statechart& other) const {
    return root_ == other.root_ && states_ == other.states_ && transitions_ == other.transitions_;
  }

 private:
  StateId root_;
  std::vector<StateNode> states_;
  std::vector<Transition> transitions_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> depth_;
  std::vector<std::vector<TransitionIndex>> outgoing_;
};

/// Structural well-formedness: tree-shaped hierarchy, valid initials,
/// resolvable transitions, no transition into a region root or the root.
std::vector<Violation> check_chart(const Statechart& chart);

/// Largest constant compared against an AttemptCount atom anywhere in the chart (0 if none).
double max_attempt_constant(const Statechart& chart);

/// Distinct LastScore constants appearing in guards, ascending.
std::vector<double> score_constants(const Statechart& chart);

}  // namespace seqchart
