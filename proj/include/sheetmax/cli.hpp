#pragma once

#include <ostream>

namespace sheetmax {

/// Exit codes of the command-line tool.
enum ExitCode : int {
    exit_ok = 0,
    exit_internal = 1,
    exit_validation = 2,
    exit_inapplicable = 3,
};

/// Entry point of the `sheetmax` tool. JSON lines go to `out`, log messages
/// (level from SHEETMAX_LOG: error, warn, info, debug) go to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sheetmax
