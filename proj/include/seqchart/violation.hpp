#pragma once

#include <string>

namespace seqchart {

/// A broken invariant reported as data: offending id, rule name, readable message.
struct Violation {
  std::string node_id;
  std::string rule;
  std::string message;
  bool operator==(const Violation&) const = default;
};

}  // namespace seqchart
