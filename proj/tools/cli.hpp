#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace covtest::cli {

enum ExitCode : int {
  kSuccess = 0,
  kInputError = 2,
  kDegenerateStatistic = 3,
  kInternalError = 4,
};

/// Environment lookup, replaceable in tests.
using GetEnv = std::function<std::optional<std::string>(const std::string&)>;

std::optional<std::string> system_getenv(const std::string& name);

/// Runs the command line `args` (without the program name). JSON goes to
/// `out`, diagnostics to `err`; returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const GetEnv& getenv = system_getenv);

}  // namespace covtest::cli
