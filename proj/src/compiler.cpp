#include "seqchart/compiler.hpp"

namespace seqchart {

namespace {

StateId unit_state_id(const ContentUnit& unit) {
  return std::string(unit.kind == UnitKind::Asset ? "asset:" : "assessment:") + unit.id;
}

class Compiler {
 public:
  CompiledCourse run(const ActivityTree& tree) {
    auto root = visit(tree.root());
    return {Statechart(root, std::move(states_), std::move(transitions_)), std::move(map_)};
  }

 private:
  StateId visit(const ActivityNode& node) { return node.is_item() ? visit_item(node) : visit_cluster(node); }

  StateId visit_item(const ActivityNode& item) {
    const StateId self = "item:" + item.id;
    const StateId entry = "entry:" + item.id;
    const StateId exit = "exit:" + item.id;
    const StateId final_state = "final:" + item.id;

    std::vector<StateId> unit_ids;
    for (const auto& unit : item.units) unit_ids.push_back(unit_state_id(unit));

    StateNode compound{self, StateKind::CompoundOr, {}, entry, std::nullopt, StateRole::Item, item.id};
    compound.children.push_back(entry);
    compound.children.insert(compound.children.end(), unit_ids.begin(), unit_ids.end());
    compound.children.push_back(exit);
    compound.children.push_back(final_state);
    states_.push_back(std::move(compound));
    states_.push_back({entry, StateKind::Atomic, {}, {}, std::nullopt, StateRole::EntryChoice, item.id});
    for (std::size_t i = 0; i < item.units.size(); ++i) {
      const auto& unit = item.units[i];
      const bool assessment = unit.kind == UnitKind::AssessmentAsset;
      states_.push_back({unit_ids[i], StateKind::Atomic, {}, {}, assessment ? unit.time_limit : std::nullopt,
                         assessment ? StateRole::Assessment : StateRole::Asset, unit.id});
    }
    states_.push_back({exit, StateKind::Atomic, {}, {}, std::nullopt, StateRole::ExitPoint, item.id});
    states_.push_back({final_state, StateKind::Final, {}, {}, std::nullopt, StateRole::Final, item.id});

    map_.node_state[item.id] = self;
    map_.entry_of[item.id] = entry;
    map_.exit_of[item.id] = exit;
    map_.final_of[item.id] = final_state;

    transitions_.push_back(default_entry_transition(self, entry, unit_ids.empty() ? exit : unit_ids.front()));

    for (std::size_t i = 0; i < item.units.size(); ++i) {
      const auto& unit = item.units[i];
      map_.unit_state[unit.id] = unit_ids[i];
      const StateId& following = i + 1 < unit_ids.size() ? unit_ids[i + 1] : exit;
      if (unit.kind == UnitKind::Asset) {
        add(unit_ids[i], EventKind::Next, Guard::always(), following);
        if (i > 0) add(unit_ids[i], EventKind::Back, Guard::always(), unit_ids[i - 1]);
        continue;
      }
      // A pass moves on to the next unit; a fail ends the attempt at the exit point.
      const double mastery = unit.effective_mastery();
      add(unit_ids[i], EventKind::Submit, Guard::last_score(Cmp::Ge, mastery), following, 1,
          {Effect::set_outcome(Outcome::Passed)});
      add(unit_ids[i], EventKind::Submit, Guard::last_score(Cmp::Lt, mastery), exit, 1,
          {Effect::set_outcome(Outcome::Failed)});
      if (unit.time_limit) {
        Transition timeout{unit_ids[i], EventKind::Timeout, unit_ids[i], Guard::always(), exit, 1,
                           {Effect::set_outcome(Outcome::Failed)}};
        transitions_.push_back(std::move(timeout));
      }
    }

    for (auto& rule : default_exit_rules(self, entry, exit, final_state)) transitions_.push_back(std::move(rule));
    return self;
  }

  StateId visit_cluster(const ActivityNode& cluster) {
    const StateId self = std::string(to_string(cluster.level)) + ":" + cluster.id;
    const StateId final_state = "final:" + cluster.id;
    map_.node_state[cluster.id] = self;
    map_.final_of[cluster.id] = final_state;

    const auto slot = states_.size();
    states_.push_back({self, StateKind::CompoundOr, {}, {}, std::nullopt, StateRole::Cluster, cluster.id});

    std::vector<StateId> children;
    for (const auto& child : cluster.children) children.push_back(visit(child));
    states_.push_back({final_state, StateKind::Final, {}, {}, std::nullopt, StateRole::Final, cluster.id});

    for (std::size_t i = 0; i < children.size(); ++i) {
      const StateId& following = i + 1 < children.size() ? children[i + 1] : final_state;
      Transition propagate{children[i], EventKind::ExitReached, children[i], Guard::always(), following, 1, {}};
      transitions_.push_back(std::move(propagate));
    }

    auto& compound = states_[slot];
    compound.initial = children.empty() ? final_state : children.front();
    compound.children = std::move(children);
    compound.children.push_back(final_state);
    return self;
  }

  void add(const StateId& source, EventKind event, Guard guard, const StateId& target, int priority = 1,
           std::vector<Effect> effects = {}) {
    transitions_.push_back({source, event, {}, std::move(guard), target, priority, std::move(effects)});
  }

  std::vector<StateNode> states_;
  std::vector<Transition> transitions_;
  CompilationMap map_;
};

Json map_section(const std::map<std::string, StateId>& section) {
  Json out = Json::object();
  for (const auto& [key, value] : section) out[key] = value;
  return out;
}

std::map<std::string, StateId> read_section(const Json& doc, const char* key) {
  std::map<std::string, StateId> out;
  if (!doc.contains(key)) throw ChartFormatError(std::string("compilation map lacks '") + key + "'");
  for (const auto& [k, v] : doc[key].items()) out[k] = v.get<std::string>();
  return out;
}

}  // namespace

Transition default_entry_transition(const StateId& item, const StateId& entry, const StateId& first) {
  return {entry, EventKind::Enter, {}, Guard::always(), first, 1,
          {Effect::clear_outcome(), Effect::count_attempt(item)}};
}

std::vector<Transition> default_exit_rules(const StateId& item, const StateId& entry, const StateId& exit,
                                           const StateId& final_state) {
  // Failed and "no next sibling" can both hold; retry wins on priority.
  return {
      {exit, EventKind::Enter, {}, Guard::failed(), entry, kRetryPriority, {}},
      {exit, EventKind::Enter, {}, Guard::all_of({Guard::negate(Guard::failed()), Guard::has_next_sibling(item)}),
       final_state, kAdvancePriority, {}},
      {exit, EventKind::Enter, {}, Guard::negate(Guard::has_next_sibling(item)), final_state, kLeavePriority, {}},
  };
}

CompiledCourse compile(const ActivityTree& tree) {
  auto violations = validate_tree(tree);
  if (!violations.empty()) throw InvalidTree(violations.front().message);
  return Compiler{}.run(tree);
}

std::int64_t course_length(const ActivityTree& tree) {
  std::int64_t steps = 0;
  const auto nodes = tree.nodes();
  for (const auto* node : nodes) {
    if (node->is_item()) steps += 2 + static_cast<std::int64_t>(node->units.size());
  }
  return steps + static_cast<std::int64_t>(nodes.size()) - 1;
}

Json to_json(const CompilationMap& map) {
  Json out;
  out["node_state"] = map_section(map.node_state);
  out["unit_state"] = map_section(map.unit_state);
  out["entry_of"] = map_section(map.entry_of);
  out["exit_of"] = map_section(map.exit_of);
  out["final_of"] = map_section(map.final_of);
  return out;
}

CompilationMap compilation_map_from_json(const Json& doc) {
  CompilationMap map;
  map.node_state = read_section(doc, "node_state");
  map.unit_state = read_section(doc, "unit_state");
  map.entry_of = read_section(doc, "entry_of");
  map.exit_of = read_section(doc, "exit_of");
  map.final_of = read_section(doc, "final_of");
  return map;
}

}  // namespace seqchart
