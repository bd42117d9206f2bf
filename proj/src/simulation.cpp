#include "seqchart/simulation.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <numeric>
#include <sstream>

namespace seqchart {

namespace {

bool has_transition(const Statechart& chart, const Configuration& config, EventKind kind) {
  for (const auto& id : config.active) {
    for (auto t : chart.transitions_from(id)) {
      if (chart.transitions()[t].event == kind) return true;
    }
  }
  return false;
}

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = text.find(sep, start);
    out.emplace_back(text.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_number(const std::string& text, std::string_view spec) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw std::invalid_argument("policy '" + std::string(spec) + "': bad number '" + text + "'");
  }
  return value;
}

void require_unit_interval(double value, std::string_view what) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw std::invalid_argument(std::string(what) + " must lie in [0,1]");
  }
}

std::optional<Outcome> recorded_outcome(const Statechart& chart, const std::vector<TransitionIndex>& fired) {
  std::optional<Outcome> out;
  for (auto t : fired) {
    for (const auto& effect : chart.transitions()[t].effects) {
      if (effect.kind == Effect::Kind::SetOutcome) out = effect.outcome;
    }
  }
  return out;
}

std::string format_number(double value) {
  std::ostringstream out;
  out << value;
  return out.str();
}

}  // namespace

std::vector<double> score_probes(const Statechart& chart) {
  std::vector<double> points{0.0, 1.0};
  for (double c : score_constants(chart)) {
    if (c >= 0.0 && c <= 1.0) points.push_back(c);
  }
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  std::vector<double> out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    out.push_back(points[i]);
    if (i + 1 < points.size()) out.push_back((points[i] + points[i + 1]) / 2.0);
  }
  return out;
}

std::vector<EventKind> available_events(const Statechart& chart, const Configuration& config,
                                        const EvalContext& ctx) {
  std::vector<EventKind> out;
  for (auto kind : kLearnerEvents) {
    if (!has_transition(chart, config, kind)) continue;
    if (kind != EventKind::Submit) {
      if (!enabled_transitions(chart, config, Event{kind}, ctx).empty()) out.push_back(kind);
      continue;
    }
    for (double score : score_probes(chart)) {
      if (!enabled_transitions(chart, config, Event::submit(score), ctx).empty()) {
        out.push_back(kind);
        break;
      }
    }
  }
  return out;
}

std::optional<StateId> current_item(const Statechart& chart, const Configuration& config) {
  std::optional<StateId> found;
  std::size_t best_depth = 0;
  for (const auto& id : config.active) {
    const auto* node = chart.find(id);
    if (node == nullptr || node->role != StateRole::Item) continue;
    auto depth = chart.depth(id);
    if (!found || depth > best_depth) {
      found = id;
      best_depth = depth;
    }
  }
  return found;
}

std::string context_class(const Statechart& chart, const Configuration& config, const EvalContext& ctx,
                          std::int64_t attempt_cap) {
  std::ostringstream out;
  out << "outcome=" << (ctx.last_outcome ? to_string(*ctx.last_outcome) : "none");
  out << ";score=" << (ctx.last_score ? format_number(*ctx.last_score) : "none");
  out << ";attempts{";
  bool first = true;
  for (const auto& [id, n] : ctx.attempt_count) {
    auto capped = std::min(n, attempt_cap);
    if (capped == 0) continue;
    out << (first ? "" : ",") << id << "=" << capped;
    first = false;
  }
  out << "}";
  for (const auto& id : config.active) {
    const auto* node = chart.find(id);
    if (node == nullptr || !node->deadline) continue;
    auto it = config.entered_at.find(id);
    std::int64_t age = ctx.now - (it == config.entered_at.end() ? 0 : it->second);
    out << ";age[" << id << "]=" << std::min(age, *node->deadline);
  }
  return out.str();
}

LearnerPolicy::LearnerPolicy(std::string name, ScoreModel scores, std::uint64_t seed, Choice choice)
    : name_(std::move(name)), scores_(scores), seed_(seed), choice_(choice), rng_(seed) {}

LearnerPolicy LearnerPolicy::always_pass(std::uint64_t seed) {
  return LearnerPolicy("always-pass", ScoreModel::constant(1.0), seed);
}

LearnerPolicy LearnerPolicy::always_fail(std::uint64_t seed) {
  return LearnerPolicy("always-fail", ScoreModel::constant(0.0), seed);
}

LearnerPolicy LearnerPolicy::from_spec(std::string_view spec, std::uint64_t seed) {
  auto parts = split(spec, ':');
  const auto& kind = parts.front();
  std::vector<double> args;
  for (std::size_t i = 1; i < parts.size(); ++i) args.push_back(parse_number(parts[i], spec));
  auto expect = [&](std::initializer_list<std::size_t> counts) {
    if (std::find(counts.begin(), counts.end(), args.size()) == counts.end()) {
      throw std::invalid_argument("policy '" + std::string(spec) + "': wrong number of parameters");
    }
  };

  if (kind == "always-pass") {
    expect({0});
    return always_pass(seed);
  }
  if (kind == "always-fail") {
    expect({0});
    return always_fail(seed);
  }
  if (kind == "constant") {
    expect({1});
    require_unit_interval(args[0], "constant score");
    return LearnerPolicy(std::string(spec), ScoreModel::constant(args[0]), seed);
  }
  if (kind == "bernoulli") {
    expect({1, 3});
    require_unit_interval(args[0], "bernoulli probability");
    auto model = args.size() == 3 ? ScoreModel::bernoulli(args[0], args[1], args[2]) : ScoreModel::bernoulli(args[0]);
    require_unit_interval(model.pass_score, "pass score");
    require_unit_interval(model.fail_score, "fail score");
    return LearnerPolicy(std::string(spec), model, seed);
  }
  if (kind == "improving") {
    expect({3});
    require_unit_interval(args[0], "improving start");
    require_unit_interval(args[2], "improving cap");
    return LearnerPolicy(std::string(spec), ScoreModel::improving(args[0], args[1], args[2]), seed);
  }
  if (kind == "random") {
    expect({0, 1});
    double p = args.empty() ? 0.5 : args[0];
    require_unit_interval(p, "random pass probability");
    return LearnerPolicy(std::string(spec), ScoreModel::bernoulli(p), seed, Choice::Random);
  }
  throw std::invalid_argument("unknown policy '" + std::string(spec) + "'");
}

double LearnerPolicy::next_uniform() {
  return static_cast<double>(rng_() >> 11) * 0x1.0p-53;
}

double LearnerPolicy::score_for(const PolicyView& view) {
  switch (scores_.kind) {
    case ScoreModel::Kind::Constant: return scores_.value;
    case ScoreModel::Kind::Bernoulli: return next_uniform() < scores_.value ? scores_.pass_score : scores_.fail_score;
    case ScoreModel::Kind::Improving: {
      std::int64_t attempts = 1;
      if (auto item = current_item(view.chart, view.config)) attempts = std::max<std::int64_t>(1, view.ctx.attempts(*item));
      double score = scores_.start + scores_.gain * static_cast<double>(attempts - 1);
      return std::clamp(std::min(score, scores_.cap), 0.0, 1.0);
    }
  }
  return 0.0;
}

bool LearnerPolicy::deterministic() const {
  if (choice_ == Choice::Random) return false;
  if (scores_.kind == ScoreModel::Kind::Bernoulli) return scores_.value == 0.0 || scores_.value == 1.0;
  return true;
}

Event LearnerPolicy::decide(const PolicyView& view) {
  const auto& available = view.available;
  if (available.empty()) throw PolicyError(name_ + ": no events available");
  auto offered = [&](EventKind kind) { return std::find(available.begin(), available.end(), kind) != available.end(); };

  EventKind kind = available.front();
  if (choice_ == Choice::Random) {
    kind = available[rng_() % available.size()];
  } else {
    for (auto preferred : {EventKind::Submit, EventKind::Next, EventKind::Enter, EventKind::Back}) {
      if (offered(preferred)) {
        kind = preferred;
        break;
      }
    }
  }
  if (kind == EventKind::Submit) return Event::submit(score_for(view));
  return Event{kind};
}

std::optional<std::string> LearnerPolicy::fingerprint(const PolicyView& view) const {
  if (!deterministic()) return std::nullopt;
  if (scores_.kind != ScoreModel::Kind::Improving) return std::string("fixed");
  // Improving scores depend on the attempt number until they reach the cap.
  auto copy = *this;
  return "score=" + format_number(copy.score_for(view));
}

std::string_view to_string(TerminalStatus status) {
  switch (status) {
    case TerminalStatus::Running: return "running";
    case TerminalStatus::Completed: return "completed";
    case TerminalStatus::StepBudgetExhausted: return "step_budget_exhausted";
    case TerminalStatus::LivelockDetected: return "livelock_detected";
  }
  return "unknown";
}

SessionDriver::SessionDriver(std::shared_ptr<const Statechart> chart) : chart_(std::move(chart)) {
  config_ = initial_configuration(*chart_);
  ctx_ = initial_context(*chart_);
  if (const auto* final_state = chart_->global_final()) global_final_ = final_state->id;
  records_.push_back({0, active_in_order(*chart_, config_), std::nullopt, {}, std::nullopt, std::nullopt});
}

bool SessionDriver::completed() const { return !global_final_.empty() && config_.contains(global_final_); }

void SessionDriver::drop_stale() {
  while (!pending_.empty() && pending_.front().kind == EventKind::Timeout && !config_.contains(pending_.front().state)) {
    pending_.pop_front();
  }
}

bool SessionDriver::has_internal() const {
  for (const auto& event : pending_) {
    if (event.kind != EventKind::Timeout || config_.contains(event.state)) return true;
  }
  return !advance_clock(*chart_, config_, ctx_, ctx_.now + 1).empty();
}

bool SessionDriver::step_internal() {
  drop_stale();
  auto due = advance_clock(*chart_, config_, ctx_, ctx_.now + 1);
  if (pending_.empty() && due.empty()) return false;
  ctx_.now += 1;
  for (auto& event : due) pending_.push_back(std::move(event));
  Event event = std::move(pending_.front());
  pending_.pop_front();
  dispatch(event);
  return true;
}

StepResult SessionDriver::apply(const Event& event) {
  if (has_internal()) throw std::logic_error("internal events must be processed before learner events");
  ctx_.now += 1;
  return dispatch(event);
}

StepResult SessionDriver::dispatch(const Event& event) {
  auto result = step(*chart_, config_, event, ctx_);
  config_ = result.configuration;
  ctx_ = result.context;
  for (const auto& emitted : result.emitted) pending_.push_back(emitted);
  TraceRecord record;
  record.tick = ctx_.now;
  record.active = active_in_order(*chart_, config_);
  record.event = event;
  record.fired = result.fired;
  record.outcome = recorded_outcome(*chart_, result.fired);
  if (event.carries_score()) record.score = event.score;
  records_.push_back(std::move(record));
  return result;
}

SessionTrace run_session(const Statechart& chart, LearnerPolicy& policy, std::int64_t max_steps) {
  if (max_steps <= 0) throw std::invalid_argument("max_steps must be positive");
  if (auto violations = check_chart(chart); !violations.empty()) throw IllFormedChart(violations.front().message);

  SessionDriver driver(std::shared_ptr<const Statechart>(&chart, [](const Statechart*) {}));
  const auto attempt_cap = static_cast<std::int64_t>(max_attempt_constant(chart)) + 1;
  std::map<std::string, std::size_t> seen;
  std::vector<WitnessStep> decisions;

  SessionTrace trace;
  std::int64_t steps = 0;
  while (true) {
    if (driver.completed()) {
      trace.status = TerminalStatus::Completed;
      break;
    }
    if (steps >= max_steps) {
      trace.status = TerminalStatus::StepBudgetExhausted;
      break;
    }
    if (driver.step_internal()) {
      ++steps;
      continue;
    }

    const auto available = driver.available();
    PolicyView view{chart, driver.configuration(), driver.context(), available};
    const auto fingerprint = policy.fingerprint(view);
    if (fingerprint || available.empty()) {
      WitnessStep here{active_in_order(chart, driver.configuration()),
                       context_class(chart, driver.configuration(), driver.context(), attempt_cap)};
      std::ostringstream key;
      for (const auto& id : here.active) key << id << '|';
      key << here.context_class << '|' << fingerprint.value_or("stuck");
      auto [it, inserted] = seen.try_emplace(key.str(), decisions.size());
      if (!inserted || available.empty()) {
        // Deterministic learner back at an earlier decision point: it will loop forever.
        trace.status = TerminalStatus::LivelockDetected;
        std::size_t from = inserted ? decisions.size() : it->second;
        decisions.push_back(std::move(here));
        trace.livelock_witness.assign(decisions.begin() + static_cast<std::ptrdiff_t>(from), decisions.end());
        break;
      }
      decisions.push_back(std::move(here));
    }

    Event event = policy.decide(view);
    if (std::find(available.begin(), available.end(), event.kind) == available.end()) {
      throw PolicyError(policy.name() + " chose " + describe(event) + ", which is not enabled");
    }
    driver.apply(event);
    ++steps;
  }
  trace.records = driver.records();
  trace.final_context = driver.context();
  return trace;
}

StatsSummary population_stats(const Statechart& chart, const PolicyFactory& policy_template, std::int64_t n_learners,
                              const std::vector<std::uint64_t>& seeds, std::int64_t max_steps) {
  if (n_learners <= 0) throw std::invalid_argument("n_learners must be positive");
  if (static_cast<std::size_t>(n_learners) != seeds.size()) {
    throw std::invalid_argument("n_learners must equal the number of seeds");
  }
  std::vector<StateId> items;
  for (const auto& state : chart.states()) {
    if (state.role == StateRole::Item) items.push_back(state.id);
  }

  StatsSummary stats;
  stats.learners = n_learners;
  std::vector<double> steps;
  double attempts_sum = 0.0;
  for (auto seed : seeds) {
    auto policy = policy_template(seed);
    auto trace = run_session(chart, policy, max_steps);
    steps.push_back(static_cast<double>(trace.steps()));
    switch (trace.status) {
      case TerminalStatus::Completed: ++stats.completed; break;
      case TerminalStatus::LivelockDetected: ++stats.livelocked; break;
      case TerminalStatus::StepBudgetExhausted: ++stats.budget_exhausted; break;
      case TerminalStatus::Running: break;
    }
    if (!items.empty()) {
      double total = 0.0;
      for (const auto& item : items) total += static_cast<double>(trace.final_context.attempts(item));
      attempts_sum += total / static_cast<double>(items.size());
    }
  }
  const auto n = static_cast<double>(n_learners);
  stats.completion_rate = static_cast<double>(stats.completed) / n;
  stats.mean_steps = std::accumulate(steps.begin(), steps.end(), 0.0) / n;
  std::sort(steps.begin(), steps.end());
  const auto mid = steps.size() / 2;
  stats.median_steps = steps.size() % 2 == 1 ? steps[mid] : (steps[mid - 1] + steps[mid]) / 2.0;
  stats.mean_attempts_per_item = attempts_sum / n;
  return stats;
}

Json to_json(const TraceRecord& record) {
  Json out;
  out["tick"] = record.tick;
  out["active"] = record.active;
  out["event"] = record.event ? to_json(*record.event) : Json(nullptr);
  out["fired"] = record.fired;
  out["outcome"] = record.outcome ? Json(std::string(to_string(*record.outcome))) : Json(nullptr);
  out["score"] = record.score ? Json(*record.score) : Json(nullptr);
  return out;
}

Json to_json(const StatsSummary& stats) {
  Json out;
  out["learners"] = stats.learners;
  out["completed"] = stats.completed;
  out["livelocked"] = stats.livelocked;
  out["budget_exhausted"] = stats.budget_exhausted;
  out["completion_rate"] = stats.completion_rate;
  out["mean_steps"] = stats.mean_steps;
  out["median_steps"] = stats.median_steps;
  out["mean_attempts_per_item"] = stats.mean_attempts_per_item;
  return out;
}

std::string trace_to_jsonl(const SessionTrace& trace) {
  std::string out;
  for (const auto& record : trace.records) out += to_json(record).dump() + "\n";
  Json terminal;
  terminal["terminal"] = std::string(to_string(trace.status));
  terminal["steps"] = trace.steps();
  Json witness = Json::array();
  for (const auto& step : trace.livelock_witness) {
    Json entry;
    entry["active"] = step.active;
    entry["context"] = step.context_class;
    witness.push_back(std::move(entry));
  }
  terminal["witness"] = std::move(witness);
  out += terminal.dump() + "\n";
  return out;
}

}  // namespace seqchart
