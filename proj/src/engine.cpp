#include "seqchart/engine.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace seqchart {

namespace {

constexpr auto npos = Statechart::npos;

void require_valid(const Statechart& chart, const Configuration& config) {
  if (auto problem = check_configuration(chart, config)) throw InvalidConfiguration(*problem);
}

void require_valid(const Statechart& chart, const Event& event) {
  if (event.carries_score() && !(event.score >= 0.0 && event.score <= 1.0)) {
    throw InvalidEvent(describe(event) + ": score outside [0,1]");
  }
  if ((event.kind == EventKind::Timeout || event.kind == EventKind::ExitReached) && !chart.contains(event.state)) {
    throw InvalidEvent(describe(event) + ": unknown state");
  }
}

bool matches(const Transition& tr, const Event& event) {
  if (tr.event != event.kind) return false;
  if (event.kind == EventKind::Timeout || event.kind == EventKind::ExitReached) return tr.event_state == event.state;
  return true;
}

/// Innermost OR-state that is a proper ancestor of both source and target.
std::optional<StateId> transition_scope(const Statechart& chart, const Transition& tr) {
  for (const auto& ancestor : chart.ancestors(tr.source)) {
    if (chart.at(ancestor).kind != StateKind::CompoundOr) continue;
    if (chart.is_descendant(tr.target, ancestor)) return ancestor;
  }
  return std::nullopt;
}

std::vector<StateId> exit_set(const Statechart& chart, const Configuration& config, const Transition& tr) {
  auto scope = transition_scope(chart, tr);
  std::vector<StateId> out;
  for (const auto& id : config.active) {
    if (!scope || chart.is_descendant(id, *scope)) out.push_back(id);
  }
  std::sort(out.begin(), out.end(), [&](const StateId& a, const StateId& b) {
    auto da = chart.depth(a);
    auto db = chart.depth(b);
    if (da != db) return da > db;
    return chart.index_of(a) < chart.index_of(b);
  });
  return out;
}

void default_completion(const Statechart& chart, std::vector<StateId>& entering) {
  for (std::size_t i = 0; i < entering.size(); ++i) {
    const auto& node = chart.at(entering[i]);
    if (node.kind == StateKind::CompoundOr) {
      bool has_child = std::any_of(node.children.begin(), node.children.end(), [&](const StateId& c) {
        return std::find(entering.begin(), entering.end(), c) != entering.end();
      });
      if (!has_child) entering.push_back(node.initial);
    } else if (node.kind == StateKind::CompoundAnd) {
      for (const auto& region : node.children) {
        if (std::find(entering.begin(), entering.end(), region) == entering.end()) entering.push_back(region);
      }
    }
  }
}

std::vector<StateId> entry_set(const Statechart& chart, const Transition& tr) {
  auto scope = transition_scope(chart, tr);
  std::vector<StateId> path{tr.target};
  for (const auto& ancestor : chart.ancestors(tr.target)) {
    if (scope && ancestor == *scope) break;
    path.push_back(ancestor);
  }
  std::reverse(path.begin(), path.end());
  default_completion(chart, path);
  std::stable_sort(path.begin(), path.end(),
                   [&](const StateId& a, const StateId& b) { return chart.depth(a) < chart.depth(b); });
  return path;
}

bool overlaps(const std::vector<StateId>& a, const std::vector<StateId>& b) {
  return std::any_of(a.begin(), a.end(), [&](const StateId& id) { return std::find(b.begin(), b.end(), id) != b.end(); });
}

}  // namespace

std::string describe(const Event& event) {
  std::ostringstream out;
  out << to_string(event.kind);
  switch (event.kind) {
    case EventKind::Submit: out << "(" << event.score << ")"; break;
    case EventKind::AssessmentResult: out << "(" << to_string(event.outcome) << ", " << event.score << ")"; break;
    case EventKind::Timeout:
    case EventKind::ExitReached: out << "(" << event.state << ")"; break;
    default: break;
  }
  return out.str();
}

bool evaluate(const Guard& guard, const EvalContext& ctx) {
  switch (guard.op) {
    case GuardOp::Always: return true;
    case GuardOp::HasNextSibling: {
      auto it = ctx.has_next.find(guard.subject);
      return it != ctx.has_next.end() && it->second;
    }
    case GuardOp::AttemptCount: return compare(static_cast<double>(ctx.attempts(guard.subject)), guard.cmp, guard.value);
    case GuardOp::LastScore: return ctx.last_score && compare(*ctx.last_score, guard.cmp, guard.value);
    case GuardOp::Passed: return ctx.last_outcome == Outcome::Passed;
    case GuardOp::Failed: return ctx.last_outcome == Outcome::Failed;
    case GuardOp::And:
      return std::all_of(guard.args.begin(), guard.args.end(), [&](const Guard& g) { return evaluate(g, ctx); });
    case GuardOp::Or:
      return std::any_of(guard.args.begin(), guard.args.end(), [&](const Guard& g) { return evaluate(g, ctx); });
    case GuardOp::Not: return guard.args.size() == 1 && !evaluate(guard.args.front(), ctx);
  }
  return false;
}

EvalContext dispatch_context(const EvalContext& ctx, const Event& event) {
  EvalContext out = ctx;
  if (event.carries_score()) out.last_score = event.score;
  if (event.kind == EventKind::AssessmentResult) out.last_outcome = event.outcome;
  return out;
}

void apply_effects(const Transition& transition, const Event& event, EvalContext& ctx) {
  for (const auto& effect : transition.effects) {
    switch (effect.kind) {
      case Effect::Kind::SetOutcome:
        ctx.last_outcome = effect.outcome;
        if (event.carries_score()) ctx.last_score = event.score;
        break;
      case Effect::Kind::ClearOutcome:
        ctx.last_outcome.reset();
        ctx.last_score.reset();
        break;
      case Effect::Kind::CountAttempt: ++ctx.attempt_count[effect.subject]; break;
      case Effect::Kind::ResetAttempts: ctx.attempt_count[effect.subject] = 0; break;
    }
  }
}

std::map<StateId, bool> structural_has_next(const Statechart& chart) {
  std::map<StateId, bool> out;
  for (const auto& state : chart.states()) {
    for (std::size_t i = 0; i < state.children.size(); ++i) {
      bool later = false;
      for (std::size_t j = i + 1; j < state.children.size() && !later; ++j) {
        const auto* sibling = chart.find(state.children[j]);
        later = sibling != nullptr && sibling->kind != StateKind::Final;
      }
      out[state.children[i]] = later;
    }
  }
  return out;
}

EvalContext initial_context(const Statechart& chart) {
  EvalContext ctx;
  ctx.has_next = structural_has_next(chart);
  return ctx;
}

Configuration initial_configuration(const Statechart& chart, std::int64_t now) {
  auto violations = check_chart(chart);
  if (!violations.empty()) throw IllFormedChart(violations.front().message);
  std::vector<StateId> entering{chart.root()};
  default_completion(chart, entering);
  Configuration config;
  for (auto& id : entering) {
    config.entered_at[id] = now;
    config.active.insert(std::move(id));
  }
  return config;
}

Configuration configuration_at(const Statechart& chart, const StateId& state, std::int64_t now) {
  if (!chart.contains(state)) throw std::out_of_range("unknown state '" + state + "'");
  auto path = chart.ancestors(state);
  std::reverse(path.begin(), path.end());
  path.push_back(state);
  default_completion(chart, path);
  Configuration config;
  for (auto& id : path) {
    config.entered_at[id] = now;
    config.active.insert(std::move(id));
  }
  return config;
}

std::optional<std::string> check_configuration(const Statechart& chart, const Configuration& config) {
  if (!config.contains(chart.root())) return "root '" + chart.root() + "' is not active";
  for (const auto& id : config.active) {
    const auto* node = chart.find(id);
    if (node == nullptr) return "active state '" + id + "' is not declared";
    if (id != chart.root()) {
      const auto* parent = chart.parent(id);
      if (parent == nullptr || !config.contains(*parent)) return "active state '" + id + "' has an inactive parent";
    }
    if (node->kind == StateKind::CompoundOr) {
      auto count = std::count_if(node->children.begin(), node->children.end(),
                                 [&](const StateId& c) { return config.contains(c); });
      if (count != 1) return "OR-state '" + id + "' has " + std::to_string(count) + " active children";
    } else if (node->kind == StateKind::CompoundAnd) {
      for (const auto& region : node->children) {
        if (!config.contains(region)) return "region '" + region + "' of active AND-state '" + id + "' is inactive";
      }
    }
  }
  return std::nullopt;
}

std::vector<TransitionIndex> enabled_transitions(const Statechart& chart, const Configuration& config,
                                                 const Event& event, const EvalContext& ctx) {
  const EvalContext guard_ctx = dispatch_context(ctx, event);
  std::vector<TransitionIndex> candidates;
  for (const auto& source : config.active) {
    for (auto t : chart.transitions_from(source)) {
      const auto& tr = chart.transitions()[t];
      if (matches(tr, event) && evaluate(tr.guard, guard_ctx)) candidates.push_back(t);
    }
  }
  std::sort(candidates.begin(), candidates.end(), [&](TransitionIndex a, TransitionIndex b) {
    const auto& ta = chart.transitions()[a];
    const auto& tb = chart.transitions()[b];
    auto da = chart.depth(ta.source);
    auto db = chart.depth(tb.source);
    if (da != db) return da > db;
    if (ta.priority != tb.priority) return ta.priority < tb.priority;
    return a < b;
  });

  std::vector<TransitionIndex> kept;
  std::vector<std::vector<StateId>> kept_exits;
  for (auto t : candidates) {
    auto exits = exit_set(chart, config, chart.transitions()[t]);
    bool conflict = std::any_of(kept_exits.begin(), kept_exits.end(),
                                [&](const std::vector<StateId>& other) { return overlaps(exits, other); });
    if (conflict) continue;
    kept.push_back(t);
    kept_exits.push_back(std::move(exits));
  }
  return kept;
}

StepResult step(const Statechart& chart, const Configuration& config, const Event& event, const EvalContext& ctx) {
  require_valid(chart, config);
  require_valid(chart, event);

  StepResult result;
  result.configuration = config;
  result.context = ctx;
  result.fired = enabled_transitions(chart, config, event, ctx);

  for (auto t : result.fired) {
    const auto& tr = chart.transitions()[t];
    auto exits = exit_set(chart, result.configuration, tr);
    for (const auto& id : exits) {
      result.configuration.active.erase(id);
      result.configuration.entered_at.erase(id);
      result.exited.push_back(id);
    }
    for (auto& id : entry_set(chart, tr)) {
      result.configuration.active.insert(id);
      result.configuration.entered_at[id] = ctx.now;
      const auto& node = chart.at(id);
      if (node.kind == StateKind::Final) {
        if (const auto* parent = chart.parent(id)) result.emitted.push_back(Event::exit_reached(*parent));
      }
      result.entered.push_back(std::move(id));
    }
    apply_effects(tr, event, result.context);
  }
  return result;
}

std::vector<Event> advance_clock(const Statechart& chart, const Configuration& config, const EvalContext& ctx,
                                 std::int64_t new_now) {
  if (new_now < ctx.now) {
    throw ClockRegression("clock moved from " + std::to_string(ctx.now) + " back to " + std::to_string(new_now));
  }
  struct Due {
    std::int64_t deadline;
    StateId state;
  };
  std::vector<Due> due;
  for (const auto& id : config.active) {
    const auto* node = chart.find(id);
    if (node == nullptr || !node->deadline) continue;
    auto it = config.entered_at.find(id);
    std::int64_t entered = it == config.entered_at.end() ? 0 : it->second;
    std::int64_t fires_at = entered + *node->deadline;
    if (fires_at > ctx.now && fires_at <= new_now) due.push_back({*node->deadline, id});
  }
  std::sort(due.begin(), due.end(), [](const Due& a, const Due& b) {
    return a.deadline != b.deadline ? a.deadline < b.deadline : a.state < b.state;
  });
  std::vector<Event> out;
  out.reserve(due.size());
  for (auto& d : due) out.push_back(Event::timeout(std::move(d.state)));
  return out;
}

std::vector<StateId> active_in_order(const Statechart& chart, const Configuration& config) {
  std::vector<StateId> out;
  auto visit = [&](auto&& self, const StateId& id) -> void {
    if (!config.contains(id)) return;
    out.push_back(id);
    const auto* node = chart.find(id);
    if (node == nullptr) return;
    for (const auto& child : node->children) self(self, child);
  };
  visit(visit, chart.root());
  return out;
}

std::vector<StateId> active_leaves(const Statechart& chart, const Configuration& config) {
  auto all = active_in_order(chart, config);
  std::erase_if(all, [&](const StateId& id) { return chart.at(id).is_compound(); });
  return all;
}

}  // namespace seqchart
