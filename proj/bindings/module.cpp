#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "seqchart/compiler.hpp"
#include "seqchart/explorer.hpp"
#include "seqchart/simulation.hpp"
#include "seqchart/strategy.hpp"

namespace py = pybind11;
using namespace seqchart;

namespace {

// Documents cross the boundary as JSON text; the Python wrapper decodes them.

Statechart chart_for(const std::string& manifest, const std::string& strategy) {
  auto tree = parse_manifest(manifest);
  auto compiled = compile(tree);
  if (strategy.empty()) return std::move(compiled.chart);
  return apply(pipeline_from_json(Json::parse(strategy)), compiled.chart, compiled.map);
}

py::list violations(const std::string& manifest) {
  py::list out;
  ActivityTree tree;
  try {
    tree = parse_manifest(manifest);
  } catch (const ModelError& e) {
    out.append(py::make_tuple(e.node_id(), e.rule(), e.what()));
    return out;
  }
  for (const auto& v : validate_tree(tree)) out.append(py::make_tuple(v.node_id, v.rule, v.message));
  return out;
}

}  // namespace

PYBIND11_MODULE(_seqchart, m) {
  m.doc() = "Statechart sequencing engine";

  py::register_exception<ManifestError>(m, "ManifestError", PyExc_ValueError);
  py::register_exception<ChartError>(m, "ChartError", PyExc_ValueError);
  py::register_exception<InapplicableStrategy>(m, "InapplicableStrategy", PyExc_ValueError);

  m.def("validate", &violations, py::arg("manifest"),
        "Violations of a manifest as (node_id, rule, message) tuples; syntax and schema errors raise.");
  m.def("normalize_manifest", [](const std::string& manifest) { return serialize_manifest(parse_manifest(manifest)); },
        py::arg("manifest"));
  m.def("course_length", [](const std::string& manifest) { return course_length(parse_manifest(manifest)); },
        py::arg("manifest"));
  m.def(
      "compile",
      [](const std::string& manifest, const std::string& strategy) {
        auto tree = parse_manifest(manifest);
        auto compiled = compile(tree);
        auto chart = strategy.empty()
                         ? compiled.chart
                         : apply(pipeline_from_json(Json::parse(strategy)), compiled.chart, compiled.map);
        return py::make_tuple(dump_chart(chart), to_json(compiled.map).dump());
      },
      py::arg("manifest"), py::arg("strategy") = "");
  m.def(
      "simulate",
      [](const std::string& manifest, const std::string& policy, std::uint64_t seed, std::int64_t max_steps,
         const std::string& strategy) {
        auto chart = chart_for(manifest, strategy);
        auto learner = LearnerPolicy::from_spec(policy, seed);
        py::gil_scoped_release release;
        return trace_to_jsonl(run_session(chart, learner, max_steps));
      },
      py::arg("manifest"), py::arg("policy"), py::arg("seed") = 0, py::arg("max_steps") = 10000,
      py::arg("strategy") = "");
  m.def(
      "explore",
      [](const std::string& manifest, const std::string& outcomes, const std::string& strategy) {
        auto chart = chart_for(manifest, strategy);
        ExploreOptions options;
        options.outcomes = parse_outcome_alphabet(outcomes);
        py::gil_scoped_release release;
        return to_json(explore(chart, options)).dump();
      },
      py::arg("manifest"), py::arg("outcomes") = "passed,failed", py::arg("strategy") = "");
}
