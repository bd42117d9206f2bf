#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>

#include "seqchart/chart_json.hpp"
#include "seqchart/content_model.hpp"
#include "seqchart/statechart.hpp"

namespace seqchart {

/// Traceability between activity-tree ids and compiled states.
struct CompilationMap {
  std::map<std::string, StateId> node_state;  // every cluster and item -> its OR-state
  std::map<std::string, StateId> unit_state;  // every content unit -> its atomic state
  std::map<std::string, StateId> entry_of;    // item -> entry choice
  std::map<std::string, StateId> exit_of;     // item -> exit point
  std::map<std::string, StateId> final_of;    // every cluster and item -> its final state

  bool operator==(const CompilationMap&) const = default;
};

struct CompiledCourse {
  Statechart chart;
  CompilationMap map;
};

class InvalidTree : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Priorities of the three exit-point rules; lower fires first.
inline constexpr int kRetryPriority = 1;
inline constexpr int kAdvancePriority = 2;
inline constexpr int kLeavePriority = 3;

/// Builds the sequencing statechart for a validated activity tree.
///
/// Each item becomes an OR-state [entry, unit..., exit, final]:
///  - entry --Enter--> first unit (or straight to exit for an empty item),
///    clearing the previous outcome and counting an attempt on the item;
///  - asset --Next--> following unit or exit; asset --Back--> previous unit;
///  - assessment --Submit--> exit, recording Passed when score >= mastery and
///    Failed otherwise; a time limit adds --Timeout--> exit recording Failed;
///  - exit --Enter--> entry when Failed (retry), else --> final. Entering the
///    final emits ExitReached(item).
/// Each cluster becomes an OR-state over its children plus a final state;
/// ExitReached(child) moves to the next sibling, or to the cluster's final
/// after the last child. The curriculum's final is the global completion state.
CompiledCourse compile(const ActivityTree& tree);

/// Steps an always-passing learner needs to reach global completion:
/// per item, one Enter, one step per unit and one exit-rule step; plus one
/// ExitReached step for every non-root node.
std::int64_t course_length(const ActivityTree& tree);

/// The compiler's default routing for one item, shared with strategies that re-assert it.
/// `first` is the item's first unit state, or its exit point when the item is empty.
Transition default_entry_transition(const StateId& item, const StateId& entry, const StateId& first);
std::vector<Transition> default_exit_rules(const StateId& item, const StateId& entry, const StateId& exit,
                                           const StateId& final_state);

Json to_json(const CompilationMap& map);
CompilationMap compilation_map_from_json(const Json& doc);

}  // namespace seqchart
