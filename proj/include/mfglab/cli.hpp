#ifndef MFGLAB_CLI_HPP
#define MFGLAB_CLI_HPP

#include <string>
#include <vector>

namespace mfglab {

/// Command-line entry point (also used in-process by the test suites).
/// Subcommands: solve, linearize, probe, verify-asymptotics, detect,
/// experiment. Exit codes: 0 pass, 1 verification failure, 2 error.
int run_cli(const std::vector<std::string>& args);

}  // namespace mfglab

#endif  // MFGLAB_CLI_HPP
