#include "seqchart/strategy.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "seqchart/engine.hpp"

namespace seqchart {

namespace {

struct ItemAnchors {
  std::string id;
  StateId self;
  StateId entry;
  StateId exit;
  StateId final_state;
};

std::vector<ItemAnchors> item_anchors(const Statechart& chart, const CompilationMap& map) {
  std::vector<ItemAnchors> out;
  for (const auto& [id, exit] : map.exit_of) {
    ItemAnchors anchors{id, map.node_state.at(id), map.entry_of.at(id), exit, map.final_of.at(id)};
    if (!chart.contains(anchors.self) || !chart.contains(anchors.entry) || !chart.contains(anchors.exit) ||
        !chart.contains(anchors.final_state)) {
      throw std::invalid_argument("compilation map does not match chart at item '" + id + "'");
    }
    out.push_back(std::move(anchors));
  }
  // Chart order keeps rewrites deterministic and independent of map key order.
  std::sort(out.begin(), out.end(),
            [&](const ItemAnchors& a, const ItemAnchors& b) { return chart.index_of(a.self) < chart.index_of(b.self); });
  return out;
}

bool has_role(const Statechart& chart, StateRole role) {
  return std::any_of(chart.states().begin(), chart.states().end(),
                     [&](const StateNode& s) { return s.role == role; });
}

Statechart inapplicable(const Statechart& chart, const ApplyOptions& options, const std::string& message) {
  if (!options.inapplicable_as_warning) throw InapplicableStrategy(message);
  if (options.warnings != nullptr) options.warnings->push_back(message);
  return chart;
}

void rewrite_score_constants(Guard& guard, double threshold) {
  if (guard.op == GuardOp::LastScore) guard.value = threshold;
  for (auto& arg : guard.args) rewrite_score_constants(arg, threshold);
}

bool records_outcome(const Transition& tr) {
  return std::any_of(tr.effects.begin(), tr.effects.end(),
                     [](const Effect& e) { return e.kind == Effect::Kind::SetOutcome; });
}

std::string scalar_text(const Scalar& value) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::string>) return v;
        else if constexpr (std::is_same_v<T, bool>) return v ? "true" : "false";
        else return std::to_string(v);
      },
      value);
}

double number_param(const Params& params, const std::string& strategy, const std::string& key) {
  auto it = params.find(key);
  if (it == params.end()) throw InvalidStrategy(strategy + ": missing parameter '" + key + "'");
  if (const auto* d = std::get_if<double>(&it->second)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&it->second)) return static_cast<double>(*i);
  throw InvalidStrategy(strategy + ": parameter '" + key + "' must be a number");
}

void reject_unknown(const Params& params, const std::string& strategy, std::initializer_list<std::string> known) {
  for (const auto& [key, _] : params) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw InvalidStrategy(strategy + ": unknown parameter '" + key + "'");
    }
  }
}

Json scalar_json(const Scalar& value) {
  return std::visit([](const auto& v) { return Json(v); }, value);
}

Scalar scalar_from_json(const Json& value, const std::string& context) {
  if (value.is_boolean()) return value.get<bool>();
  if (value.is_number_integer()) return value.get<std::int64_t>();
  if (value.is_number()) return value.get<double>();
  if (value.is_string()) return value.get<std::string>();
  throw InvalidStrategy(context + ": parameters must be scalars");
}

}  // namespace

Strategy::Strategy(std::string name, Params params, Transform transform, std::vector<Strategy> members)
    : name_(std::move(name)), params_(std::move(params)), transform_(std::move(transform)), members_(std::move(members)) {}

Statechart apply(const Strategy& strategy, const Statechart& chart, const CompilationMap& map,
                 const ApplyOptions& options) {
  if (auto violations = check_chart(chart); !violations.empty()) {
    throw IllFormedChart(strategy.name() + ": input chart is ill-formed: " + violations.front().message);
  }
  Statechart out = strategy.transform(chart, map, options);
  if (auto violations = check_chart(out); !violations.empty()) {
    throw IllFormedChart(strategy.name() + " produced an ill-formed chart: " + violations.front().message);
  }
  return out;
}

Strategy compose(std::vector<Strategy> pipeline) {
  auto members = pipeline;
  return Strategy(
      "compose", {},
      [pipeline = std::move(pipeline)](const Statechart& chart, const CompilationMap& map, const ApplyOptions& options) {
        Statechart current = chart;
        for (const auto& strategy : pipeline) current = strategy.transform(current, map, options);
        return current;
      },
      std::move(members));
}

namespace strategies {

Strategy identity() {
  return Strategy("identity", {}, [](const Statechart& chart, const CompilationMap&, const ApplyOptions&) {
    return chart;
  });
}

Strategy linear_lock() {
  return Strategy("linear-lock", {}, [](const Statechart& chart, const CompilationMap& map, const ApplyOptions&) {
    const auto items = item_anchors(chart, map);
    std::map<StateId, std::vector<Transition>> defaults;
    for (const auto& item : items) {
      const auto& children = chart.at(item.self).children;
      // children = [entry, units..., exit, final]
      const StateId& first = children.size() > 1 ? children[1] : item.exit;
      defaults[item.entry] = {default_entry_transition(item.self, item.entry, first)};
      defaults[item.exit] = default_exit_rules(item.self, item.entry, item.exit, item.final_state);
    }
    std::vector<Transition> out;
    std::set<StateId> emitted;
    for (const auto& tr : chart.transitions()) {
      auto it = defaults.find(tr.source);
      if (it == defaults.end()) {
        out.push_back(tr);
        continue;
      }
      if (emitted.insert(tr.source).second) out.insert(out.end(), it->second.begin(), it->second.end());
    }
    for (const auto& [source, routes] : defaults) {
      if (!emitted.count(source)) out.insert(out.end(), routes.begin(), routes.end());
    }
    return chart.with_transitions(std::move(out));
  });
}

Strategy mastery_threshold(double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw InvalidStrategy("mastery-threshold: threshold must lie in [0,1], got " + std::to_string(threshold));
  }
  return Strategy("mastery-threshold", {{"threshold", threshold}},
                  [threshold](const Statechart& chart, const CompilationMap&, const ApplyOptions& options) {
                    auto transitions = chart.transitions();
                    std::size_t rewritten = 0;
                    for (auto& tr : transitions) {
                      if (tr.event != EventKind::Submit || !records_outcome(tr)) continue;
                      rewrite_score_constants(tr.guard, threshold);
                      ++rewritten;
                    }
                    if (rewritten == 0) {
                      return inapplicable(chart, options, "mastery-threshold: chart has no assessment submissions");
                    }
                    return chart.with_transitions(std::move(transitions));
                  });
}

Strategy max_attempts(std::int64_t max_attempts, FailureAction action) {
  if (max_attempts < 1) throw InvalidStrategy("max-attempts: n must be at least 1");
  Params params{{"n", max_attempts},
                {"action", std::string(action == FailureAction::Skip ? "skip" : "remediate-to-item-start")}};
  return Strategy(
      "max-attempts", std::move(params),
      [max_attempts, action](const Statechart& chart, const CompilationMap& map, const ApplyOptions& options) {
        if (!has_role(chart, StateRole::Assessment)) {
          return inapplicable(chart, options, "max-attempts: chart has no assessments to fail");
        }
        const double limit = static_cast<double>(max_attempts);
        std::map<StateId, const ItemAnchors*> by_exit;
        const auto items = item_anchors(chart, map);
        for (const auto& item : items) by_exit[item.exit] = &item;

        std::vector<Transition> out;
        std::set<StateId> capped;
        for (const auto& tr : chart.transitions()) {
          auto it = by_exit.find(tr.source);
          const bool retry = it != by_exit.end() && tr.target == it->second->entry;
          if (!retry) {
            out.push_back(tr);
            continue;
          }
          const auto& item = *it->second;
          if (capped.insert(item.exit).second) {
            Transition cap{item.exit, EventKind::Enter, {},
                           Guard::all_of({Guard::failed(), Guard::attempt_count(item.self, Cmp::Ge, limit)}),
                           action == FailureAction::Skip ? item.final_state : item.entry, 0, {}};
            if (action == FailureAction::RemediateToItemStart) cap.effects.push_back(Effect::reset_attempts(item.self));
            out.push_back(std::move(cap));
          }
          Transition limited = tr;
          limited.guard = Guard::all_of({tr.guard, Guard::attempt_count(item.self, Cmp::Lt, limit)});
          out.push_back(std::move(limited));
        }
        if (capped.empty()) return inapplicable(chart, options, "max-attempts: no retry rules to cap");
        return chart.with_transitions(std::move(out));
      });
}

Strategy skip_ahead() {
  return Strategy("skip-ahead", {}, [](const Statechart& chart, const CompilationMap& map, const ApplyOptions& options) {
    const auto items = item_anchors(chart, map);
    if (items.empty()) return inapplicable(chart, options, "skip-ahead: chart has no items");
    std::map<StateId, const ItemAnchors*> by_entry;
    for (const auto& item : items) by_entry[item.entry] = &item;

    // Insert each bypass right after the last transition leaving that entry.
    std::map<StateId, std::size_t> last_from;
    const auto& transitions = chart.transitions();
    for (std::size_t i = 0; i < transitions.size(); ++i) {
      if (by_entry.count(transitions[i].source)) last_from[transitions[i].source] = i;
    }
    std::vector<Transition> out;
    auto bypass = [](const ItemAnchors& item) {
      return Transition{item.entry, EventKind::Next, {}, Guard::passed(), item.exit, 1, {}};
    };
    for (std::size_t i = 0; i < transitions.size(); ++i) {
      out.push_back(transitions[i]);
      auto it = by_entry.find(transitions[i].source);
      if (it != by_entry.end() && last_from[it->first] == i) out.push_back(bypass(*it->second));
    }
    for (const auto& item : items) {
      if (!last_from.count(item.entry)) out.push_back(bypass(item));
    }
    return chart.with_transitions(std::move(out));
  });
}

}  // namespace strategies

Strategy make_strategy(std::string_view name, const Params& params) {
  const std::string label(name);
  if (name == "identity") {
    reject_unknown(params, label, {});
    return strategies::identity();
  }
  if (name == "linear-lock") {
    reject_unknown(params, label, {});
    return strategies::linear_lock();
  }
  if (name == "skip-ahead") {
    reject_unknown(params, label, {});
    return strategies::skip_ahead();
  }
  if (name == "mastery-threshold") {
    reject_unknown(params, label, {"threshold"});
    return strategies::mastery_threshold(number_param(params, label, "threshold"));
  }
  if (name == "max-attempts") {
    reject_unknown(params, label, {"n", "action"});
    double n = number_param(params, label, "n");
    if (std::floor(n) != n) throw InvalidStrategy("max-attempts: n must be an integer");
    FailureAction action = FailureAction::Skip;
    if (auto it = params.find("action"); it != params.end()) {
      const auto text = scalar_text(it->second);
      if (text == "skip") {
        action = FailureAction::Skip;
      } else if (text == "remediate-to-item-start") {
        action = FailureAction::RemediateToItemStart;
      } else {
        throw InvalidStrategy("max-attempts: unknown action '" + text + "'");
      }
    }
    return strategies::max_attempts(static_cast<std::int64_t>(n), action);
  }
  throw InvalidStrategy("unknown strategy '" + label + "'");
}

Strategy pipeline_from_json(const Json& doc) {
  if (!doc.is_array()) throw InvalidStrategy("strategy document must be an array of {name, params}");
  std::vector<Strategy> pipeline;
  for (const auto& entry : doc) {
    if (!entry.is_object() || !entry.contains("name") || !entry["name"].is_string()) {
      throw InvalidStrategy("strategy entries need a string 'name'");
    }
    for (const auto& [key, _] : entry.items()) {
      if (key != "name" && key != "params") throw InvalidStrategy("unknown strategy field '" + key + "'");
    }
    const auto name = entry["name"].get<std::string>();
    Params params;
    if (entry.contains("params")) {
      if (!entry["params"].is_object()) throw InvalidStrategy(name + ": params must be an object");
      for (const auto& [key, value] : entry["params"].items()) params[key] = scalar_from_json(value, name);
    }
    pipeline.push_back(make_strategy(name, params));
  }
  return compose(std::move(pipeline));
}

Json to_json(const Strategy& strategy) {
  Json out = Json::array();
  if (strategy.name() == "compose") {
    for (const auto& member : strategy.members()) {
      for (auto& entry : to_json(member)) out.push_back(std::move(entry));
    }
    return out;
  }
  Json entry;
  entry["name"] = strategy.name();
  entry["params"] = Json::object();
  for (const auto& [key, value] : strategy.params()) entry["params"][key] = scalar_json(value);
  out.push_back(std::move(entry));
  return out;
}

}  // namespace seqchart
