#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "seqchart/engine.hpp"
#include "seqchart/statechart.hpp"

namespace seqchart {

using Json = nlohmann::ordered_json;

class ChartFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Chart documents: {"states": [...], "transitions": [...], "root": id}.
// Guards are nested {"op", "args"} trees. Field order is fixed so that
// serialized charts can be compared byte for byte.
Json to_json(const Guard& guard);
Json to_json(const Effect& effect);
Json to_json(const Transition& transition);
Json to_json(const StateNode& state);
Json to_json(const Statechart& chart);
Json to_json(const Event& event);
Json to_json(const Configuration& config);
Json to_json(const EvalContext& ctx);

Guard guard_from_json(const Json& doc);
Statechart chart_from_json(const Json& doc);
Event event_from_json(const Json& doc);
Configuration configuration_from_json(const Json& doc);
/// has_next is structural and is not part of the document; callers re-derive it.
EvalContext context_from_json(const Json& doc);

std::string dump_chart(const Statechart& chart);
Statechart parse_chart(std::string_view text);

}  // namespace seqchart
