#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace conjunctive {

enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 2,
  kExitRuntime = 3,
  kExitIo = 4,
};

/// Environment variable holding the remote backend's bearer token.
inline constexpr const char* kRemoteTokenEnv = "CONJUNCTIVE_REMOTE_TOKEN";

/// Entry point for the command-line tool. `args[0]` is the program name.
/// Subcommands: simulate, optimize, evaluate, fidelity, calibrate, report.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace conjunctive
