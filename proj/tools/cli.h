#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace isinglab::cli {

// Runs one subcommand; args exclude the program name. Exit codes: 0 success,
// 1 validation error, 2 guard exceeded, 3 numerical fault or failed check.
// Reports go to `out` (or --out), JSON diagnostics to `err`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace isinglab::cli
