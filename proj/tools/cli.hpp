#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "lawkit/sim/mpm.hpp"

namespace lawkit::cli {

enum ExitCode : int {
  kOk = 0,
  kError = 1,           // I/O and anything unexpected
  kConfigError = 2,     // bad flags, specs, mismatched inputs
  kParseError = 3,      // law text does not parse or typecheck
  kSimFailure = 4,      // simulation failure or invalid law
  kOperatorError = 5,   // proposal operator unavailable
  kLocked = 6,          // run directory held by another process
};

/// Entry point used by main(); writes to `out` / `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

struct EvalColumn {
  std::string label;
  std::vector<double> chamfer;  // per frame
};

/// Fixed-width comparison table, one column per prediction, plus a mean row.
std::string format_eval_table(const std::string& gt_label, const std::vector<EvalColumn>& cols);

}  // namespace lawkit::cli
