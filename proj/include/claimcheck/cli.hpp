#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace claimcheck::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDegraded = 1;
inline constexpr int kExitFatal = 2;

// Runs the command line without the program name. Machine-readable output
// goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace claimcheck::cli
