#include "seqchart/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>

#include "seqchart/compiler.hpp"
#include "seqchart/explorer.hpp"
#include "seqchart/http_server.hpp"
#include "seqchart/simulation.hpp"
#include "seqchart/strategy.hpp"

namespace seqchart {

namespace {

constexpr int kOk = 0;
constexpr int kModelError = 1;
constexpr int kUsageError = 2;

/// Bad arguments that CLI11 cannot see (policy specs, port numbers).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Input documents that are readable but invalid.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  file << text;
  if (!file) throw UsageError("cannot write " + path);
}

struct Course {
  ActivityTree tree;
  Statechart chart;
  CompilationMap map;
};

Course load_course(const std::string& manifest, const std::string& strategy_file) {
  Course course;
  course.tree = parse_manifest(read_text(manifest));
  auto compiled = compile(course.tree);
  course.map = std::move(compiled.map);
  course.chart = std::move(compiled.chart);
  if (!strategy_file.empty()) {
    Json doc;
    try {
      doc = Json::parse(read_text(strategy_file));
    } catch (const Json::parse_error& e) {
      throw InputError(strategy_file + ": " + e.what());
    }
    course.chart = apply(pipeline_from_json(doc), course.chart, course.map);
  }
  return course;
}

LearnerPolicy make_policy(const std::string& spec, std::uint64_t seed) {
  try {
    return LearnerPolicy::from_spec(spec, seed);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

std::string env_or(const char* name, const std::string& fallback) {
  const char* value = std::getenv(name);
  return value != nullptr && *value != '\0' ? std::string(value) : fallback;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Statechart sequencing for activity-tree courses", "seqchart"};
  app.require_subcommand(1);

  std::string manifest, output, strategy_file, map_out, policy_spec = "always-pass", outcomes = "passed,failed";
  std::uint64_t seed = 0;
  std::int64_t max_steps = 10000, learners = 100;
  std::size_t max_nodes = 1'000'000;

  auto* validate = app.add_subcommand("validate", "Check a manifest; silent on success");
  validate->add_option("manifest", manifest, "Manifest file")->required();

  auto* compile_cmd = app.add_subcommand("compile", "Compile a manifest to a chart and compilation map");
  compile_cmd->add_option("manifest", manifest, "Manifest file")->required();
  compile_cmd->add_option("-o,--output", output, "Chart output file")->required();
  compile_cmd->add_option("--map-out", map_out, "Compilation map output (default: <output>.map.json)");
  compile_cmd->add_option("--strategy", strategy_file, "Strategy pipeline document");

  auto* simulate = app.add_subcommand("simulate", "Run one scripted learner session and write its trace");
  simulate->add_option("manifest", manifest, "Manifest file")->required();
  simulate->add_option("--policy", policy_spec, "Learner policy spec")->required();
  simulate->add_option("--seed", seed, "Random seed");
  simulate->add_option("--max-steps", max_steps, "Step budget")->check(CLI::PositiveNumber);
  simulate->add_option("--strategy", strategy_file, "Strategy pipeline document");
  simulate->add_option("-o,--output", output, "Trace output file (default: stdout)");

  auto* explore_cmd = app.add_subcommand("explore", "Exhaustive reachability analysis");
  explore_cmd->add_option("manifest", manifest, "Manifest file")->required();
  explore_cmd->add_option("--strategy", strategy_file, "Strategy pipeline document");
  explore_cmd->add_option("--outcomes", outcomes, "Outcomes the learner may record: passed,failed");
  explore_cmd->add_option("--max-nodes", max_nodes, "Abstract node budget")->check(CLI::PositiveNumber);
  explore_cmd->add_option("-o,--output", output, "Report output file (default: stdout)");

  auto* stats = app.add_subcommand("stats", "Population statistics over seeds seed..seed+learners-1");
  stats->add_option("manifest", manifest, "Manifest file")->required();
  stats->add_option("--policy", policy_spec, "Learner policy spec")->required();
  stats->add_option("--learners", learners, "Number of learners")->check(CLI::PositiveNumber);
  stats->add_option("--seed", seed, "First seed");
  stats->add_option("--max-steps", max_steps, "Step budget per learner")->check(CLI::PositiveNumber);
  stats->add_option("--strategy", strategy_file, "Strategy pipeline document");
  stats->add_option("-o,--output", output, "Stats output file (default: stdout)");

  std::string port_text, content_dir, snapshot_dir, host = "0.0.0.0";
  auto* serve = app.add_subcommand("serve", "Run the HTTP session service");
  serve->add_option("--port", port_text, "Port (env SEQCHART_PORT, default 8080)");
  serve->add_option("--content-dir", content_dir, "Course manifests (env SEQCHART_CONTENT_DIR)");
  serve->add_option("--snapshot-dir", snapshot_dir, "Event logs and snapshots (env SEQCHART_SNAPSHOT_DIR)");
  serve->add_option("--host", host, "Bind address");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsageError;
  }

  try {
    if (validate->parsed()) {
      auto tree = parse_manifest(read_text(manifest));
      (void)tree;
      return kOk;
    }

    if (compile_cmd->parsed()) {
      auto course = load_course(manifest, strategy_file);
      write_text(output, dump_chart(course.chart), out);
      write_text(map_out.empty() ? output + ".map.json" : map_out, to_json(course.map).dump(2) + "\n", out);
      return kOk;
    }

    if (simulate->parsed()) {
      auto course = load_course(manifest, strategy_file);
      auto policy = make_policy(policy_spec, seed);
      auto trace = run_session(course.chart, policy, max_steps);
      write_text(output, trace_to_jsonl(trace), out);
      return kOk;
    }

    if (explore_cmd->parsed()) {
      auto course = load_course(manifest, strategy_file);
      ExploreOptions options;
      try {
        options.outcomes = parse_outcome_alphabet(outcomes);
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      options.max_nodes = max_nodes;
      auto report = explore(course.chart, options);
      write_text(output, to_json(report).dump(2) + "\n", out);
      if (report.partial) err << "warning: node budget exhausted; report is partial\n";
      return kOk;
    }

    if (stats->parsed()) {
      auto course = load_course(manifest, strategy_file);
      make_policy(policy_spec, seed);
      std::vector<std::uint64_t> seeds(static_cast<std::size_t>(learners));
      std::iota(seeds.begin(), seeds.end(), seed);
      auto summary = population_stats(
          course.chart, [&](std::uint64_t s) { return LearnerPolicy::from_spec(policy_spec, s); }, learners, seeds,
          max_steps);
      write_text(output, to_json(summary).dump(2) + "\n", out);
      return kOk;
    }

    if (serve->parsed()) {
      service::ServiceOptions options;
      options.content_dir = content_dir.empty() ? env_or("SEQCHART_CONTENT_DIR", ".") : content_dir;
      auto snapshots = snapshot_dir.empty() ? env_or("SEQCHART_SNAPSHOT_DIR", "") : snapshot_dir;
      if (!snapshots.empty()) options.snapshot_dir = snapshots;
      int port = 0;
      try {
        port = std::stoi(port_text.empty() ? env_or("SEQCHART_PORT", "8080") : port_text);
      } catch (const std::exception&) {
        throw UsageError("invalid port");
      }
      if (port <= 0 || port > 65535) throw UsageError("invalid port");

      service::SessionManager manager(options);
      if (options.snapshot_dir) {
        auto report = manager.recover();
        err << "recovered " << report.recovered.size() << " sessions, quarantined " << report.quarantined.size()
            << "\n";
      }
      service::HttpServer server(manager);
      err << "listening on " << host << ":" << port << "\n";
      if (!server.listen(host, port)) {
        err << "error: cannot listen on port " << port << "\n";
        return kUsageError;
      }
      return kOk;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const ManifestError& e) {
    err << "error: " << e.what() << "\n";
    return kModelError;
  } catch (const std::exception& e) {
    // Strategy documents, chart checks and other model-level failures.
    err << "error: " << e.what() << "\n";
    return kModelError;
  }
  return kUsageError;
}

}  // namespace seqchart
