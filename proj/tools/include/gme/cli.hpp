#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace gme::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

/// Runs one command. `args` excludes the program name. Results go to files
/// named in the arguments (or `out` for summaries); diagnostics go to `err`.
/// Returns 0 on success, 1 on usage errors, 2 on data or solver errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gme::cli
