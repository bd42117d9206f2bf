#include "seqchart/chart_json.hpp"

#include <cmath>

namespace seqchart {

namespace {

Json number(double value) {
  if (std::floor(value) == value && std::abs(value) < 9.0e15) return static_cast<std::int64_t>(value);
  return value;
}

template <typename T>
T require(const Json& doc, std::string_view key) {
  auto it = doc.find(std::string(key));
  if (it == doc.end()) throw ChartFormatError("missing field '" + std::string(key) + "'");
  try {
    return it->template get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ChartFormatError("field '" + std::string(key) + "': " + e.what());
  }
}

template <typename T, typename Parse>
T parse_tag(const Json& doc, std::string_view key, Parse parse) {
  auto text = require<std::string>(doc, key);
  auto value = parse(text);
  if (!value) throw ChartFormatError("unknown " + std::string(key) + " '" + text + "'");
  return *value;
}

}  // namespace

Json to_json(const Guard& guard) {
  Json out;
  out["op"] = std::string(to_string(guard.op));
  Json args = Json::array();
  switch (guard.op) {
    case GuardOp::HasNextSibling: args.push_back(guard.subject); break;
    case GuardOp::AttemptCount:
      args.push_back(guard.subject);
      args.push_back(std::string(to_string(guard.cmp)));
      args.push_back(number(guard.value));
      break;
    case GuardOp::LastScore:
      args.push_back(std::string(to_string(guard.cmp)));
      args.push_back(number(guard.value));
      break;
    case GuardOp::And:
    case GuardOp::Or:
    case GuardOp::Not:
      for (const auto& arg : guard.args) args.push_back(to_json(arg));
      break;
    default: break;
  }
  out["args"] = std::move(args);
  return out;
}

Guard guard_from_json(const Json& doc) {
  if (!doc.is_object()) throw ChartFormatError("guard must be an object");
  Guard guard;
  guard.op = parse_tag<GuardOp>(doc, "op", parse_guard_op);
  const Json args = doc.contains("args") ? doc["args"] : Json::array();
  if (!args.is_array()) throw ChartFormatError("guard args must be an array");
  auto cmp_at = [&](std::size_t i) {
    if (args.size() <= i || !args[i].is_string()) throw ChartFormatError("guard comparison operator expected");
    auto cmp = parse_cmp(args[i].get<std::string>());
    if (!cmp) throw ChartFormatError("unknown comparison '" + args[i].get<std::string>() + "'");
    return *cmp;
  };
  auto number_at = [&](std::size_t i) {
    if (args.size() <= i || !args[i].is_number()) throw ChartFormatError("guard constant expected");
    return args[i].get<double>();
  };
  auto state_at = [&](std::size_t i) {
    if (args.size() <= i || !args[i].is_string()) throw ChartFormatError("guard subject state expected");
    return args[i].get<std::string>();
  };
  switch (guard.op) {
    case GuardOp::HasNextSibling: guard.subject = state_at(0); break;
    case GuardOp::AttemptCount:
      guard.subject = state_at(0);
      guard.cmp = cmp_at(1);
      guard.value = number_at(2);
      break;
    case GuardOp::LastScore:
      guard.cmp = cmp_at(0);
      guard.value = number_at(1);
      break;
    case GuardOp::And:
    case GuardOp::Or:
    case GuardOp::Not:
      for (const auto& arg : args) guard.args.push_back(guard_from_json(arg));
      break;
    default: break;
  }
  return guard;
}

Json to_json(const Effect& effect) {
  Json out;
  out["do"] = std::string(to_string(effect.kind));
  if (effect.kind == Effect::Kind::SetOutcome) out["outcome"] = std::string(to_string(effect.outcome));
  if (effect.kind == Effect::Kind::CountAttempt || effect.kind == Effect::Kind::ResetAttempts) {
    out["state"] = effect.subject;
  }
  return out;
}

Json to_json(const Transition& tr) {
  Json out;
  out["source"] = tr.source;
  out["event"] = std::string(to_string(tr.event));
  if (!tr.event_state.empty()) out["event_state"] = tr.event_state;
  out["guard"] = to_json(tr.guard);
  out["target"] = tr.target;
  out["priority"] = tr.priority;
  Json effects = Json::array();
  for (const auto& effect : tr.effects) effects.push_back(to_json(effect));
  out["effects"] = std::move(effects);
  return out;
}

Json to_json(const StateNode& state) {
  Json out;
  out["id"] = state.id;
  out["kind"] = std::string(to_string(state.kind));
  if (state.role != StateRole::None) out["role"] = std::string(to_string(state.role));
  if (!state.ref.empty()) out["ref"] = state.ref;
  if (state.is_compound() || !state.children.empty()) out["children"] = state.children;
  if (state.kind == StateKind::CompoundOr || !state.initial.empty()) out["initial"] = state.initial;
  if (state.deadline) out["deadline"] = *state.deadline;
  return out;
}

Json to_json(const Statechart& chart) {
  Json out;
  Json states = Json::array();
  for (const auto& state : chart.states()) states.push_back(to_json(state));
  Json transitions = Json::array();
  for (const auto& tr : chart.transitions()) transitions.push_back(to_json(tr));
  out["states"] = std::move(states);
  out["transitions"] = std::move(transitions);
  out["root"] = chart.root();
  return out;
}

Statechart chart_from_json(const Json& doc) {
  if (!doc.is_object()) throw ChartFormatError("chart document must be an object");
  std::vector<StateNode> states;
  for (const auto& s : require<Json>(doc, "states")) {
    StateNode node;
    node.id = require<std::string>(s, "id");
    node.kind = parse_tag<StateKind>(s, "kind", parse_state_kind);
    if (s.contains("role")) node.role = parse_tag<StateRole>(s, "role", parse_state_role);
    if (s.contains("ref")) node.ref = require<std::string>(s, "ref");
    if (s.contains("children")) node.children = require<std::vector<std::string>>(s, "children");
    if (s.contains("initial")) node.initial = require<std::string>(s, "initial");
    if (s.contains("deadline")) node.deadline = require<std::int64_t>(s, "deadline");
    states.push_back(std::move(node));
  }
  std::vector<Transition> transitions;
  for (const auto& t : require<Json>(doc, "transitions")) {
    Transition tr;
    tr.source = require<std::string>(t, "source");
    tr.event = parse_tag<EventKind>(t, "event", parse_event_kind);
    if (t.contains("event_state")) tr.event_state = require<std::string>(t, "event_state");
    if (t.contains("guard")) tr.guard = guard_from_json(t["guard"]);
    tr.target = require<std::string>(t, "target");
    if (t.contains("priority")) tr.priority = require<int>(t, "priority");
    if (t.contains("effects")) {
      for (const auto& e : t["effects"]) {
        Effect effect;
        auto kind = require<std::string>(e, "do");
        if (kind == "set_outcome") {
          effect = Effect::set_outcome(parse_tag<Outcome>(e, "outcome", parse_outcome));
        } else if (kind == "clear_outcome") {
          effect = Effect::clear_outcome();
        } else if (kind == "count_attempt") {
          effect = Effect::count_attempt(require<std::string>(e, "state"));
        } else if (kind == "reset_attempts") {
          effect = Effect::reset_attempts(require<std::string>(e, "state"));
        } else {
          throw ChartFormatError("unknown effect '" + kind + "'");
        }
        tr.effects.push_back(std::move(effect));
      }
    }
    transitions.push_back(std::move(tr));
  }
  return Statechart(require<std::string>(doc, "root"), std::move(states), std::move(transitions));
}

Json to_json(const Event& event) {
  Json out;
  out["kind"] = std::string(to_string(event.kind));
  if (event.kind == EventKind::AssessmentResult) out["outcome"] = std::string(to_string(event.outcome));
  if (event.carries_score()) out["score"] = event.score;
  if (event.kind == EventKind::Timeout || event.kind == EventKind::ExitReached) out["state"] = event.state;
  return out;
}

Event event_from_json(const Json& doc) {
  if (!doc.is_object()) throw ChartFormatError("event must be an object");
  Event event;
  event.kind = parse_tag<EventKind>(doc, "kind", parse_event_kind);
  if (event.kind == EventKind::AssessmentResult) event.outcome = parse_tag<Outcome>(doc, "outcome", parse_outcome);
  if (event.carries_score()) event.score = require<double>(doc, "score");
  if (event.kind == EventKind::Timeout || event.kind == EventKind::ExitReached) {
    event.state = require<std::string>(doc, "state");
  }
  return event;
}

Json to_json(const Configuration& config) {
  Json out;
  out["active"] = Json::array();
  for (const auto& id : config.active) out["active"].push_back(id);
  out["entered_at"] = Json::object();
  for (const auto& [id, tick] : config.entered_at) out["entered_at"][id] = tick;
  return out;
}

Configuration configuration_from_json(const Json& doc) {
  Configuration config;
  for (const auto& id : require<Json>(doc, "active")) config.active.insert(id.get<std::string>());
  const auto entered_at = require<Json>(doc, "entered_at");
  for (const auto& [id, tick] : entered_at.items()) {
    config.entered_at[id] = tick.get<std::int64_t>();
  }
  return config;
}

Json to_json(const EvalContext& ctx) {
  Json out;
  out["now"] = ctx.now;
  out["last_outcome"] = ctx.last_outcome ? Json(std::string(to_string(*ctx.last_outcome))) : Json(nullptr);
  out["last_score"] = ctx.last_score ? Json(*ctx.last_score) : Json(nullptr);
  out["attempt_count"] = Json::object();
  for (const auto& [id, n] : ctx.attempt_count) out["attempt_count"][id] = n;
  return out;
}

EvalContext context_from_json(const Json& doc) {
  EvalContext ctx;
  ctx.now = require<std::int64_t>(doc, "now");
  if (doc.contains("last_outcome") && !doc["last_outcome"].is_null()) {
    ctx.last_outcome = parse_tag<Outcome>(doc, "last_outcome", parse_outcome);
  }
  if (doc.contains("last_score") && !doc["last_score"].is_null()) ctx.last_score = doc["last_score"].get<double>();
  if (doc.contains("attempt_count")) {
    for (const auto& [id, n] : doc["attempt_count"].items()) ctx.attempt_count[id] = n.get<std::int64_t>();
  }
  return ctx;
}

std::string dump_chart(const Statechart& chart) { return to_json(chart).dump(2) + "\n"; }

Statechart parse_chart(std::string_view text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ChartFormatError(e.what());
  }
  return chart_from_json(doc);
}

}  // namespace seqchart
