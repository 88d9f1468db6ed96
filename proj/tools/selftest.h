#pragma once

#include <string>

#include "cli_io.h"

namespace isinglab::cli {

// Small invariant checks for one subcommand. The report carries one entry per
// check and "result": "PASS" or "FAIL".
json run_selftest(const std::string& command);

}  // namespace isinglab::cli
