#include "seqchart/explorer.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <sstream>
#include <unordered_map>

#include "seqchart/simulation.hpp"

namespace seqchart {

namespace {

struct Node {
  Configuration config;
  EvalContext ctx;
  std::deque<Event> pending;
  std::size_t parent = Statechart::npos;
  std::string via;
  bool final = false;
};

std::string key_of(const Node& node) {
  std::ostringstream out;
  for (const auto& id : node.config.active) out << id << ',';
  out << '|';
  for (const auto& [id, n] : node.ctx.attempt_count) out << id << '=' << n << ',';
  out << '|' << (node.ctx.last_outcome ? to_string(*node.ctx.last_outcome) : "-");
  out << '|';
  if (node.ctx.last_score) out << *node.ctx.last_score;
  out << '|';
  for (const auto& event : node.pending) out << describe(event) << ';';
  return out.str();
}

bool handles(const Statechart& chart, const Configuration& config, EventKind kind) {
  for (const auto& id : config.active) {
    for (auto t : chart.transitions_from(id)) {
      if (chart.transitions()[t].event == kind) return true;
    }
  }
  return false;
}

class Explorer {
 public:
  Explorer(const Statechart& chart, const ExploreOptions& options)
      : chart_(chart),
        options_(options),
        cap_(static_cast<std::int64_t>(max_attempt_constant(chart)) + 1),
        probes_(score_probes(chart)) {
    if (const auto* final_state = chart.global_final()) global_final_ = final_state->id;
  }

  ReachabilityReport run() {
    Node start;
    start.config = initial_configuration(chart_);
    start.ctx = initial_context(chart_);
    normalize(start);
    intern(std::move(start));

    ReachabilityReport report;
    for (std::size_t head = 0; head < nodes_.size(); ++head) {
      if (nodes_.size() > options_.max_nodes) {
        report.partial = true;
        break;
      }
      expand(head);
    }
    summarize(report);
    return report;
  }

 private:
  void normalize(Node& node) const {
    for (auto& [id, entered] : node.config.entered_at) entered = 0;
    for (auto it = node.ctx.attempt_count.begin(); it != node.ctx.attempt_count.end();) {
      it->second = std::min(it->second, cap_);
      it = it->second == 0 ? node.ctx.attempt_count.erase(it) : std::next(it);
    }
    node.ctx.now = 0;
    node.final = !global_final_.empty() && node.config.contains(global_final_);
  }

  std::size_t intern(Node node) {
    auto key = key_of(node);
    auto [it, inserted] = index_.try_emplace(std::move(key), nodes_.size());
    if (inserted) {
      nodes_.push_back(std::move(node));
      successors_.emplace_back();
    }
    return it->second;
  }

  void link(std::size_t from, Node next, std::string via) {
    normalize(next);
    next.parent = from;
    next.via = std::move(via);
    auto to = intern(std::move(next));
    auto& out = successors_[from];
    if (std::find(out.begin(), out.end(), to) == out.end()) out.push_back(to);
  }

  /// Steps `event` from node `from`; returns false when nothing fired or the
  /// step records an outcome outside the alphabet.
  bool try_event(std::size_t from, const Event& event, bool internal) {
    const Node& node = nodes_[from];
    auto result = step(chart_, node.config, event, node.ctx);
    if (!internal && result.fired.empty()) return false;
    for (auto t : result.fired) {
      for (const auto& effect : chart_.transitions()[t].effects) {
        if (effect.kind == Effect::Kind::SetOutcome && !options_.outcomes.allows(effect.outcome)) return false;
      }
    }
    Node next;
    next.config = std::move(result.configuration);
    next.ctx = std::move(result.context);
    next.pending = node.pending;
    if (internal) next.pending.pop_front();
    for (auto& emitted : result.emitted) next.pending.push_back(std::move(emitted));
    link(from, std::move(next), describe(event));
    return true;
  }

  void expand(std::size_t from) {
    if (nodes_[from].final) return;
    if (!nodes_[from].pending.empty()) {
      Event head = nodes_[from].pending.front();
      try_event(from, head, true);
      return;
    }
    const Configuration config = nodes_[from].config;
    for (auto kind : {EventKind::Enter, EventKind::Next, EventKind::Back}) {
      if (handles(chart_, config, kind)) try_event(from, Event{kind}, false);
    }
    if (handles(chart_, config, EventKind::Submit)) {
      for (double score : probes_) try_event(from, Event::submit(score), false);
    }
    if (handles(chart_, config, EventKind::AssessmentResult)) {
      for (auto outcome : {Outcome::Passed, Outcome::Failed}) {
        if (!options_.outcomes.allows(outcome)) continue;
        for (double score : probes_) try_event(from, Event::result(outcome, score), false);
      }
    }
    for (const auto& id : config.active) {
      if (chart_.at(id).deadline) try_event(from, Event::timeout(id), false);
    }
  }

  ExploreStep describe_node(std::size_t i) const {
    const Node& node = nodes_[i];
    return {active_in_order(chart_, node.config), context_class(chart_, node.config, node.ctx, cap_),
            node.parent == Statechart::npos ? std::nullopt : std::optional<std::string>(node.via)};
  }

  std::vector<std::size_t> path_to(std::size_t target) const {
    std::vector<std::size_t> path;
    for (auto i = target; i != Statechart::npos; i = nodes_[i].parent) path.push_back(i);
    std::reverse(path.begin(), path.end());
    return path;
  }

  /// Shortest path from `from` to any node satisfying `goal` using edges inside `allowed`.
  std::vector<std::size_t> bfs(std::size_t from, const std::function<bool(std::size_t)>& goal,
                               const std::vector<char>& allowed) const {
    std::vector<std::size_t> prev(nodes_.size(), Statechart::npos);
    std::vector<char> seen(nodes_.size(), 0);
    std::deque<std::size_t> queue{from};
    seen[from] = 1;
    while (!queue.empty()) {
      auto i = queue.front();
      queue.pop_front();
      for (auto j : successors_[i]) {
        if (!allowed[j]) continue;
        if (goal(j)) {
          std::vector<std::size_t> path{j};
          for (auto k = i; k != Statechart::npos; k = prev[k]) path.push_back(k);
          std::reverse(path.begin(), path.end());
          return path;
        }
        if (seen[j]) continue;
        seen[j] = 1;
        prev[j] = i;
        queue.push_back(j);
      }
    }
    return {};
  }

  /// Tarjan's algorithm restricted to `allowed`; returns component ids (npos outside).
  std::vector<std::size_t> components(const std::vector<char>& allowed, std::vector<char>& cyclic) const {
    const auto n = nodes_.size();
    std::vector<std::size_t> comp(n, Statechart::npos), low(n, 0), order(n, Statechart::npos);
    std::vector<char> on_stack(n, 0);
    std::vector<std::size_t> stack;
    std::size_t counter = 0, next_comp = 0;
    struct Frame {
      std::size_t node;
      std::size_t edge;
    };
    for (std::size_t root = 0; root < n; ++root) {
      if (!allowed[root] || order[root] != Statechart::npos) continue;
      std::vector<Frame> frames{{root, 0}};
      order[root] = low[root] = counter++;
      stack.push_back(root);
      on_stack[root] = 1;
      while (!frames.empty()) {
        auto& frame = frames.back();
        const auto& out = successors_[frame.node];
        if (frame.edge < out.size()) {
          auto j = out[frame.edge++];
          if (!allowed[j]) continue;
          if (order[j] == Statechart::npos) {
            order[j] = low[j] = counter++;
            stack.push_back(j);
            on_stack[j] = 1;
            frames.push_back({j, 0});
          } else if (on_stack[j]) {
            low[frame.node] = std::min(low[frame.node], order[j]);
          }
          continue;
        }
        auto v = frame.node;
        frames.pop_back();
        if (!frames.empty()) low[frames.back().node] = std::min(low[frames.back().node], low[v]);
        if (low[v] != order[v]) continue;
        std::size_t size = 0;
        std::size_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          comp[w] = next_comp;
          ++size;
        } while (w != v);
        const auto& vs = successors_[v];
        bool self_loop = std::find(vs.begin(), vs.end(), v) != vs.end();
        cyclic.push_back(size > 1 || self_loop ? 1 : 0);
        ++next_comp;
      }
    }
    return comp;
  }

  void summarize(ReachabilityReport& report) const {
    report.node_count = nodes_.size();
    for (const auto& node : nodes_) {
      report.reachable_states.insert(node.config.active.begin(), node.config.active.end());
      report.completion_reachable = report.completion_reachable || node.final;
    }

    for (const auto& state : chart_.states()) {
      if (state.role != StateRole::Item) continue;
      StateId exit;
      for (const auto& child : state.children) {
        if (chart_.at(child).role == StateRole::ExitPoint) exit = child;
      }
      bool reached = report.reachable_states.count(exit.empty() ? state.id : exit) != 0;
      (reached ? report.reachable_items : report.unreachable_items).insert(state.id);
    }

    // Backward reachability from completion over the explored graph.
    const auto n = nodes_.size();
    std::vector<std::vector<std::size_t>> predecessors(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (auto j : successors_[i]) predecessors[j].push_back(i);
    }
    std::vector<char> can_finish(n, 0);
    std::deque<std::size_t> queue;
    for (std::size_t i = 0; i < n; ++i) {
      if (nodes_[i].final) {
        can_finish[i] = 1;
        queue.push_back(i);
      }
    }
    while (!queue.empty()) {
      auto i = queue.front();
      queue.pop_front();
      for (auto p : predecessors[i]) {
        if (!can_finish[p]) {
          can_finish[p] = 1;
          queue.push_back(p);
        }
      }
    }

    // A partial graph has unexpanded frontier nodes, so nothing can be called trapped.
    if (report.partial) return;
    std::vector<char> trapped(n, 0);
    std::size_t first_trapped = Statechart::npos;
    for (std::size_t i = 0; i < n; ++i) {
      if (can_finish[i]) continue;
      trapped[i] = 1;
      ++report.trapped_nodes;
      if (first_trapped == Statechart::npos) first_trapped = i;
      if (successors_[i].empty()) {
        auto leaves = active_leaves(chart_, nodes_[i].config);
        report.dead_ends.insert(leaves.begin(), leaves.end());
      }
    }
    if (first_trapped == Statechart::npos) return;

    LivelockWitness witness;
    std::vector<char> cyclic;
    auto comp = components(trapped, cyclic);
    auto on_cycle = [&](std::size_t i) { return trapped[i] && cyclic[comp[i]] != 0; };

    std::vector<std::size_t> route = path_to(first_trapped);
    if (!on_cycle(first_trapped)) {
      auto tail = bfs(first_trapped, on_cycle, trapped);
      if (!tail.empty()) route.insert(route.end(), tail.begin() + 1, tail.end());
    }
    for (auto i : route) witness.prefix.push_back(describe_node(i));

    const auto entry = route.back();
    if (on_cycle(entry)) {
      std::vector<char> same(n, 0);
      for (std::size_t i = 0; i < n; ++i) same[i] = trapped[i] && comp[i] == comp[entry];
      auto loop = bfs(entry, [&](std::size_t i) { return i == entry; }, same);
      for (auto i : loop) witness.cycle.push_back(describe_node(i));
    }
    report.livelock_witness = std::move(witness);
  }

  const Statechart& chart_;
  ExploreOptions options_;
  std::int64_t cap_;
  std::vector<double> probes_;
  StateId global_final_;
  std::vector<Node> nodes_;
  std::vector<std::vector<std::size_t>> successors_;
  std::unordered_map<std::string, std::size_t> index_;
};

Json to_json(const ExploreStep& step) {
  Json out;
  out["active"] = step.active;
  out["context"] = step.context_class;
  out["via"] = step.via ? Json(*step.via) : Json(nullptr);
  return out;
}

}  // namespace

OutcomeAlphabet parse_outcome_alphabet(std::string_view text) {
  OutcomeAlphabet alphabet{false, false};
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find(',', start);
    if (end == std::string_view::npos) end = text.size();
    auto word = text.substr(start, end - start);
    if (word == "passed") {
      alphabet.passed = true;
    } else if (word == "failed") {
      alphabet.failed = true;
    } else if (word != "none") {
      throw std::invalid_argument("unknown outcome '" + std::string(word) + "'");
    }
    start = end + 1;
  }
  return alphabet;
}

std::set<StateId> ReachabilityReport::reachable_leaves(const Statechart& chart) const {
  std::set<StateId> out;
  for (const auto& id : reachable_states) {
    auto kind = chart.at(id).kind;
    if (kind == StateKind::Atomic || kind == StateKind::Final) out.insert(id);
  }
  return out;
}

ReachabilityReport explore(const Statechart& chart, const ExploreOptions& options) {
  if (auto violations = check_chart(chart); !violations.empty()) throw IllFormedChart(violations.front().message);
  return Explorer(chart, options).run();
}

Json to_json(const ReachabilityReport& report) {
  Json out;
  out["completion_reachable"] = report.completion_reachable;
  out["partial"] = report.partial;
  out["node_count"] = report.node_count;
  out["reachable_states"] = report.reachable_states;
  out["reachable_items"] = report.reachable_items;
  out["unreachable_items"] = report.unreachable_items;
  out["dead_ends"] = report.dead_ends;
  out["trapped_nodes"] = report.trapped_nodes;
  if (report.livelock_witness) {
    Json witness;
    witness["prefix"] = Json::array();
    for (const auto& step : report.livelock_witness->prefix) witness["prefix"].push_back(to_json(step));
    witness["cycle"] = Json::array();
    for (const auto& step : report.livelock_witness->cycle) witness["cycle"].push_back(to_json(step));
    out["livelock_witness"] = std::move(witness);
  } else {
    out["livelock_witness"] = nullptr;
  }
  return out;
}

}  // namespace seqchart
