#include "seqchart/statechart.hpp"

#include <algorithm>
#include <array>
#include <deque>
#include <set>
#include <unordered_set>

namespace seqchart {

namespace {

template <typename Enum, std::size_t N>
std::optional<Enum> parse_enum(const std::array<std::string_view, N>& names, std::string_view text) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == text) return static_cast<Enum>(i);
  }
  return std::nullopt;
}

constexpr std::array<std::string_view, 4> kStateKinds = {"atomic", "or", "and", "final"};
constexpr std::array<std::string_view, 8> kRoles = {"none",       "cluster",    "item",       "entry",
                                                    "asset",      "assessment", "exit",       "final"};
constexpr std::array<std::string_view, 7> kEvents = {"enter",  "next",    "back",        "submit",
                                                     "result", "timeout", "exit_reached"};
constexpr std::array<std::string_view, 2> kOutcomes = {"passed", "failed"};
constexpr std::array<std::string_view, 5> kCmps = {"<", "<=", "=", ">=", ">"};
constexpr std::array<std::string_view, 9> kGuardOps = {"always", "has_next", "attempt_count",
                                                       "last_score", "passed", "failed",
                                                       "and",    "or",       "not"};
constexpr std::array<std::string_view, 4> kEffects = {"set_outcome", "clear_outcome", "count_attempt",
                                                      "reset_attempts"};

const std::vector<TransitionIndex> kNoTransitions;

bool is_atom(GuardOp op) {
  return op != GuardOp::And && op != GuardOp::Or && op != GuardOp::Not;
}

template <typename Visit>
void walk_guard(const Guard& guard, Visit&& visit) {
  visit(guard);
  for (const auto& arg : guard.args) walk_guard(arg, visit);
}

}  // namespace

std::string_view to_string(StateKind kind) { return kStateKinds[static_cast<std::size_t>(kind)]; }
std::string_view to_string(StateRole role) { return kRoles[static_cast<std::size_t>(role)]; }
std::string_view to_string(EventKind kind) { return kEvents[static_cast<std::size_t>(kind)]; }
std::string_view to_string(Outcome outcome) { return kOutcomes[static_cast<std::size_t>(outcome)]; }
std::string_view to_string(Cmp cmp) { return kCmps[static_cast<std::size_t>(cmp)]; }
std::string_view to_string(GuardOp op) { return kGuardOps[static_cast<std::size_t>(op)]; }
std::string_view to_string(Effect::Kind kind) { return kEffects[static_cast<std::size_t>(kind)]; }

std::optional<StateKind> parse_state_kind(std::string_view t) { return parse_enum<StateKind>(kStateKinds, t); }
std::optional<StateRole> parse_state_role(std::string_view t) { return parse_enum<StateRole>(kRoles, t); }
std::optional<EventKind> parse_event_kind(std::string_view t) { return parse_enum<EventKind>(kEvents, t); }
std::optional<Outcome> parse_outcome(std::string_view t) { return parse_enum<Outcome>(kOutcomes, t); }
std::optional<Cmp> parse_cmp(std::string_view t) { return parse_enum<Cmp>(kCmps, t); }
std::optional<GuardOp> parse_guard_op(std::string_view t) { return parse_enum<GuardOp>(kGuardOps, t); }

bool compare(double lhs, Cmp cmp, double rhs) {
  switch (cmp) {
    case Cmp::Lt: return lhs < rhs;
    case Cmp::Le: return lhs <= rhs;
    case Cmp::Eq: return lhs == rhs;
    case Cmp::Ge: return lhs >= rhs;
    case Cmp::Gt: return lhs > rhs;
  }
  return false;
}

Statechart::Statechart(StateId root, std::vector<StateNode> states, std::vector<Transition> transitions)
    : root_(std::move(root)), states_(std::move(states)), transitions_(std::move(transitions)) {
  const std::size_t n = states_.size();
  index_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) index_.try_emplace(states_[i].id, i);

  parent_.assign(n, npos);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& child : states_[i].children) {
      auto c = index_of(child);
      if (c != npos && c != i && parent_[c] == npos) parent_[c] = i;
    }
  }

  // Depth by walking down from the root along claimed parent edges; detached states stay npos.
  depth_.assign(n, npos);
  if (auto r = index_of(root_); r != npos) {
    parent_[r] = npos;
    std::deque<std::size_t> queue{r};
    depth_[r] = 0;
    while (!queue.empty()) {
      auto s = queue.front();
      queue.pop_front();
      for (const auto& child : states_[s].children) {
        auto c = index_of(child);
        if (c != npos && parent_[c] == s && depth_[c] == npos) {
          depth_[c] = depth_[s] + 1;
          queue.push_back(c);
        }
      }
    }
  }

  outgoing_.assign(n, {});
  for (TransitionIndex t = 0; t < transitions_.size(); ++t) {
    if (auto s = index_of(transitions_[t].source); s != npos) outgoing_[s].push_back(t);
  }
}

std::size_t Statechart::index_of(std::string_view id) const {
  auto it = index_.find(std::string(id));
  return it == index_.end() ? npos : it->second;
}

const StateNode* Statechart::find(std::string_view id) const {
  auto i = index_of(id);
  return i == npos ? nullptr : &states_[i];
}

const StateNode& Statechart::at(std::string_view id) const {
  auto i = index_of(id);
  if (i == npos) throw std::out_of_range("unknown state '" + std::string(id) + "'");
  return states_[i];
}

const StateId* Statechart::parent(std::string_view id) const {
  auto i = index_of(id);
  if (i == npos || parent_[i] == npos) return nullptr;
  return &states_[parent_[i]].id;
}

std::size_t Statechart::depth(std::string_view id) const {
  auto i = index_of(id);
  return i == npos ? npos : depth_[i];
}

std::vector<StateId> Statechart::ancestors(std::string_view id) const {
  std::vector<StateId> out;
  auto i = index_of(id);
  while (i != npos && parent_[i] != npos) {
    i = parent_[i];
    out.push_back(states_[i].id);
  }
  return out;
}

bool Statechart::is_descendant(std::string_view id, std::string_view ancestor) const {
  auto target = index_of(ancestor);
  auto i = index_of(id);
  if (target == npos || i == npos) return false;
  while (parent_[i] != npos) {
    i = parent_[i];
    if (i == target) return true;
  }
  return false;
}

const std::vector<TransitionIndex>& Statechart::transitions_from(std::string_view source) const {
  auto i = index_of(source);
  return i == npos ? kNoTransitions : outgoing_[i];
}

const StateNode* Statechart::global_final() const {
  const auto* root = find(root_);
  if (root == nullptr) return nullptr;
  for (const auto& child : root->children) {
    const auto* node = find(child);
    if (node != nullptr && node->kind == StateKind::Final) return node;
  }
  return nullptr;
}

Statechart Statechart::with_transitions(std::vector<Transition> transitions) const {
  return Statechart(root_, states_, std::move(transitions));
}

std::vector<Violation> check_chart(const Statechart& chart) {
  std::vector<Violation> out;
  auto add = [&](const std::string& id, std::string rule, std::string message) {
    out.push_back({id, std::move(rule), id + ": " + std::move(message)});
  };

  std::unordered_set<std::string> seen;
  for (const auto& state : chart.states()) {
    if (!seen.insert(state.id).second) add(state.id, "duplicate-state", "state declared twice");
  }

  const auto* root = chart.find(chart.root());
  if (root == nullptr) {
    add(chart.root(), "missing-root", "root state is not declared");
  } else if (root->kind != StateKind::CompoundOr) {
    add(root->id, "root-kind", "root must be an OR-state");
  }

  std::unordered_map<std::string, std::string> claimed;
  for (const auto& state : chart.states()) {
    for (const auto& child : state.children) {
      if (!chart.contains(child)) {
        add(state.id, "unknown-child", "child '" + child + "' is not declared");
        continue;
      }
      if (child == chart.root()) add(state.id, "root-as-child", "the root cannot be a child");
      auto [it, inserted] = claimed.try_emplace(child, state.id);
      if (!inserted) {
        add(child, "multiple-parents", "claimed by both '" + it->second + "' and '" + state.id + "'");
      }
    }
    switch (state.kind) {
      case StateKind::CompoundOr:
        if (state.children.empty()) {
          add(state.id, "or-empty", "OR-state without children");
        } else if (std::find(state.children.begin(), state.children.end(), state.initial) ==
                   state.children.end()) {
          add(state.id, "bad-initial", "initial '" + state.initial + "' is not a child");
        }
        break;
      case StateKind::CompoundAnd:
        if (state.children.size() < 2) add(state.id, "and-regions", "AND-state needs at least two regions");
        for (const auto& child : state.children) {
          const auto* region = chart.find(child);
          if (region != nullptr && region->kind != StateKind::CompoundOr) {
            add(child, "region-kind", "region of AND-state '" + state.id + "' must be an OR-state");
          }
        }
        break;
      case StateKind::Atomic:
      case StateKind::Final:
        if (!state.children.empty()) add(state.id, "leaf-children", "atomic/final state with children");
        break;
    }
    if (state.deadline && *state.deadline <= 0) add(state.id, "bad-deadline", "deadline must be positive");
  }

  if (root != nullptr) {
    for (const auto& state : chart.states()) {
      if (chart.depth(state.id) == Statechart::npos) {
        add(state.id, "detached-state", "not reachable from the root through the hierarchy");
      }
    }
  }

  auto is_region = [&](const StateId& id) {
    const auto* parent = chart.parent(id);
    return parent != nullptr && chart.at(*parent).kind == StateKind::CompoundAnd;
  };

  for (std::size_t t = 0; t < chart.transitions().size(); ++t) {
    const auto& tr = chart.transitions()[t];
    const std::string label = "transition #" + std::to_string(t);
    if (!chart.contains(tr.source)) add(label, "unknown-source", "source '" + tr.source + "' is not declared");
    if (!chart.contains(tr.target)) {
      add(label, "unknown-target", "target '" + tr.target + "' is not declared");
    } else {
      if (tr.target == chart.root()) add(label, "root-target", "transition targets the root");
      if (is_region(tr.target)) add(label, "region-target", "target '" + tr.target + "' is a region root");
    }
    const bool needs_state = tr.event == EventKind::Timeout || tr.event == EventKind::ExitReached;
    if (needs_state && !chart.contains(tr.event_state)) {
      add(label, "event-state", "event '" + std::string(to_string(tr.event)) + "' names unknown state '" +
                                    tr.event_state + "'");
    }
    if (!needs_state && !tr.event_state.empty()) {
      add(label, "event-state", "event '" + std::string(to_string(tr.event)) + "' carries no state");
    }
    walk_guard(tr.guard, [&](const Guard& g) {
      if (is_atom(g.op) && !g.args.empty()) add(label, "guard-arity", "guard atom with arguments");
      if (g.op == GuardOp::Not && g.args.size() != 1) add(label, "guard-arity", "'not' takes one argument");
      if ((g.op == GuardOp::HasNextSibling || g.op == GuardOp::AttemptCount) && !chart.contains(g.subject)) {
        add(label, "guard-subject", "guard names unknown state '" + g.subject + "'");
      }
    });
    for (const auto& effect : tr.effects) {
      const bool has_subject =
          effect.kind == Effect::Kind::CountAttempt || effect.kind == Effect::Kind::ResetAttempts;
      if (has_subject && !chart.contains(effect.subject)) {
        add(label, "effect-subject", "effect names unknown state '" + effect.subject + "'");
      }
    }
  }
  return out;
}

double max_attempt_constant(const Statechart& chart) {
  double best = 0.0;
  for (const auto& tr : chart.transitions()) {
    walk_guard(tr.guard, [&](const Guard& g) {
      if (g.op == GuardOp::AttemptCount) best = std::max(best, g.value);
    });
  }
  return best;
}

std::vector<double> score_constants(const Statechart& chart) {
  std::set<double> values;
  for (const auto& tr : chart.transitions()) {
    walk_guard(tr.guard, [&](const Guard& g) {
      if (g.op == GuardOp::LastScore) values.insert(g.value);
    });
  }
  return {values.begin(), values.end()};
}

}  // namespace seqchart
