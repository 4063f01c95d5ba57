#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "fabinspect/error.hpp"

namespace fabinspect::cli {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitDegenerate = 4;
inline constexpr int kExitCorrupt = 5;

int exit_code(Errc code) noexcept;

/// Runs one command line (args[0] is the program name). Reports go to files
/// named by flags, verdicts and summaries to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fabinspect::cli
