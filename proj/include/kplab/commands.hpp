#pragma once

// Subcommands behind the kplab executable. Each returns a process exit code.

#include "config.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

namespace kplab {

enum ExitCode : int { exit_ok = 0, exit_config = 1, exit_infeasible = 2, exit_solver = 3 };

struct RunOverrides {
    std::optional<std::filesystem::path> out;
    std::optional<std::uint64_t> seed;
};

// Loads the file and applies the overrides; ConfigError on failure.
ExperimentConfig load_with_overrides(const std::filesystem::path &config, const RunOverrides &ov);

int cmd_check(const ExperimentConfig &cfg, std::ostream &log);
int cmd_minimize(const ExperimentConfig &cfg, std::ostream &log);
int cmd_dimred(const ExperimentConfig &cfg, std::ostream &log);
// Pairwise linking numbers and per-curve global radii, written as CSV to out.
int cmd_link(const std::vector<std::filesystem::path> &curves, std::ostream &out, std::ostream &log);

// Same as the cmd_* functions but starting from a config path; config errors map to exit 1.
int run_check(const std::filesystem::path &config, const RunOverrides &ov, std::ostream &log);
int run_minimize(const std::filesystem::path &config, const RunOverrides &ov, std::ostream &log);
int run_dimred(const std::filesystem::path &config, const RunOverrides &ov, std::ostream &log);

} // namespace kplab
