#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "seqchart/chart_json.hpp"
#include "seqchart/engine.hpp"

namespace seqchart {

/// Outcomes the explored learner may record. Steps that would record an
/// outcome outside the alphabet are not taken.
struct OutcomeAlphabet {
  bool passed = true;
  bool failed = true;

  static OutcomeAlphabet all() { return {}; }
  static OutcomeAlphabet only(Outcome outcome) {
    return {outcome == Outcome::Passed, outcome == Outcome::Failed};
  }
  bool allows(Outcome outcome) const { return outcome == Outcome::Passed ? passed : failed; }
};

/// Parses a comma separated list of passed, failed and none ("none" adds nothing).
OutcomeAlphabet parse_outcome_alphabet(std::string_view text);

struct ExploreOptions {
  OutcomeAlphabet outcomes;
  std::size_t max_nodes = 1'000'000;
};

/// One node of a witness: active states in hierarchy order, the abstract
/// context, and the event that led here (empty for the first node).
struct ExploreStep {
  std::vector<StateId> active;
  std::string context_class;
  std::optional<std::string> via;
};

struct LivelockWitness {
  std::vector<ExploreStep> prefix;  // shortest path to the cycle, starting at the initial node
  std::vector<ExploreStep> cycle;   // closes on its first node; empty when the trap is a dead end
};

struct ReachabilityReport {
  std::set<StateId> reachable_states;
  std::set<StateId> reachable_items;
  /// Items whose exit point is never active.
  std::set<StateId> unreachable_items;
  bool completion_reachable = false;
  /// Leaf states of reachable non-final nodes without successors.
  std::set<StateId> dead_ends;
  /// Number of reachable abstract nodes that cannot reach completion.
  std::size_t trapped_nodes = 0;
  std::optional<LivelockWitness> livelock_witness;
  bool partial = false;  // node budget exhausted before the frontier emptied
  std::size_t node_count = 0;

  /// Reachable atomic and final states.
  std::set<StateId> reachable_leaves(const Statechart& chart) const;
};

/// Breadth-first search over (configuration, abstract context, pending
/// internal events). Clocks are abstracted away: any active state with a
/// deadline may time out at a rest point. Attempt counts are capped at the
/// largest AttemptCount constant plus one.
ReachabilityReport explore(const Statechart& chart, const ExploreOptions& options = {});

Json to_json(const ReachabilityReport& report);

}  // namespace seqchart
