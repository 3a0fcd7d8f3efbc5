#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "bsvie/config.hpp"

namespace bsvie {

/// Summary lines printed by the CLI after a command has written its files.
struct CommandResult {
    std::vector<std::string> summary;
};

/// Phi and Psi tables: resolvent.csv (t,s,phi,psi) and resolvent.meta.
CommandResult cmd_resolvent(const ExperimentConfig& config, const std::filesystem::path& out);

/// Explicit Y and Z with both residual evaluators: solution.csv, z_surface.csv,
/// norms.csv, residuals.csv (plus weights.csv for stochastic F).
CommandResult cmd_solve(const ExperimentConfig& config, const std::filesystem::path& out);

/// Explicit Y against collocation and Picard (deterministic F) or LSMC
/// (stochastic F): compare.csv, picard.csv and a verdict line.
CommandResult cmd_compare(const ExperimentConfig& config, const std::filesystem::path& out);

/// Girsanov diagnostics: girsanov.csv (statistic,value,stderr).
CommandResult cmd_girsanov_check(const ExperimentConfig& config, const std::filesystem::path& out);

/// z_surface.csv and smoothness.csv.
CommandResult cmd_z_surface(const ExperimentConfig& config, const std::filesystem::path& out);

/// norms.csv.
CommandResult cmd_norms(const ExperimentConfig& config, const std::filesystem::path& out);

/// Shortest round-trip decimal form used in every CSV.
std::string format_number(double value);

}  // namespace bsvie
