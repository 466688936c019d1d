#ifndef PLSA_CLI_H_
#define PLSA_CLI_H_

#include <iosfwd>
#include <string>
#include <vector>

namespace plsa {

// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumerical = 4;

// Runs the tool with `args` (program name excluded). Command output goes to
// `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace plsa

#endif  // PLSA_CLI_H_
