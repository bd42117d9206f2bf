#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "seqchart/chart_json.hpp"
#include "seqchart/compiler.hpp"

namespace seqchart {

using Scalar = std::variant<bool, std::int64_t, double, std::string>;
using Params = std::map<std::string, Scalar>;

/// A strategy's anchors are absent from the chart (e.g. a mastery rewrite with no assessments).
class InapplicableStrategy : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unknown strategy name or bad parameters.
class InvalidStrategy : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ApplyOptions {
  /// Report inapplicable strategies as warnings and pass the chart through unchanged.
  bool inapplicable_as_warning = false;
  std::vector<std::string>* warnings = nullptr;
};

/// A named, parameterized transformation of a compiled chart.
class Strategy {
 public:
  using Transform = std::function<Statechart(const Statechart&, const CompilationMap&, const ApplyOptions&)>;

  Strategy(std::string name, Params params, Transform transform, std::vector<Strategy> members = {});

  const std::string& name() const { return name_; }
  const Params& params() const { return params_; }
  /// Non-empty for composed strategies.
  const std::vector<Strategy>& members() const { return members_; }

  Statechart transform(const Statechart& chart, const CompilationMap& map, const ApplyOptions& options) const {
    return transform_(chart, map, options);
  }

 private:
  std::string name_;
  Params params_;
  Transform transform_;
  std::vector<Strategy> members_;
};

/// Checks the input chart, transforms it and checks the result.
/// Throws IllFormedChart when either side fails check_chart.
Statechart apply(const Strategy& strategy, const Statechart& chart, const CompilationMap& map,
                 const ApplyOptions& options = {});

/// Left-to-right composition; the empty pipeline is the identity.
Strategy compose(std::vector<Strategy> pipeline);

enum class FailureAction { Skip, RemediateToItemStart };

namespace strategies {

Strategy identity();
/// Re-asserts the compiler's default entry and exit routing for every item.
Strategy linear_lock();
/// Replaces every submit threshold with `threshold` (must lie in [0,1]).
Strategy mastery_threshold(double threshold);
/// Caps failing retries at `max_attempts` per item, then skips the item or
/// restarts it with a fresh attempt count.
Strategy max_attempts(std::int64_t max_attempts, FailureAction action);
/// Lets a learner holding a Passed outcome jump from an item's entry to its exit with Next.
Strategy skip_ahead();

}  // namespace strategies

/// Builds a built-in from its config name: identity, linear-lock,
/// mastery-threshold{threshold}, max-attempts{n, action}, skip-ahead.
Strategy make_strategy(std::string_view name, const Params& params);

/// Pipeline document: an array of {"name", "params"} objects.
Strategy pipeline_from_json(const Json& doc);
Json to_json(const Strategy& strategy);

}  // namespace seqchart
