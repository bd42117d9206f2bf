#pragma once

#include <ostream>

namespace seqchart {

/// Entry point of the `seqchart` tool. Returns 0 on success, 1 on
/// validation or model errors and 2 on usage errors.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace seqchart
