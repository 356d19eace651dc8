#pragma once

// The four workflows behind the command-line tool. Each writes its files into
// `out` and returns the process exit code.

#include "metamorph/config.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>

namespace metamorph {

enum ExitCode : int { exit_ok = 0, exit_invalid_input = 1, exit_numerical = 2, exit_verification = 3 };

inline constexpr const char* version_string = "0.1.0";

int cmd_simulate(const RunConfig& config, const std::filesystem::path& out, std::ostream& log);
int cmd_match(const RunConfig& config, const std::filesystem::path& out, int threads, std::ostream& log);
int cmd_uq(const RunConfig& config, const std::filesystem::path& out, int threads, std::ostream& log);
/// Without a config both structures are checked with the built-in cases.
int cmd_verify(const std::optional<RunConfig>& config, const std::optional<std::filesystem::path>& out,
               std::ostream& log);

}  // namespace metamorph
