#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "bsvie/delay_measure.hpp"
#include "bsvie/grid.hpp"
#include "bsvie/kernel.hpp"
#include "bsvie/oracle.hpp"
#include "bsvie/terminal.hpp"

namespace bsvie {

/// Experiment description read from a line-oriented `key = value` file with
/// dotted sections and `#` comments. Unknown keys are rejected.
class ExperimentConfig {
public:
    /// Relative paths inside the config (kernel.file) resolve against base_dir.
    static ExperimentConfig parse(const std::string& text, const std::filesystem::path& base_dir = {});
    static ExperimentConfig load(const std::filesystem::path& path);

    double horizon() const { return horizon_; }
    std::size_t intervals() const { return intervals_; }
    TimeGrid grid() const { return TimeGrid(horizon_, intervals_); }

    DelayMeasure measure() const;
    KernelSpec kernel() const;
    TerminalFamily terminal() const;

    std::size_t paths() const { return paths_; }
    std::uint64_t seed() const { return seed_; }
    Law law() const { return law_; }
    double resolvent_tolerance() const { return resolvent_tol_; }
    PicardConfig picard() const { return picard_; }
    LsmcConfig lsmc() const;
    /// c in the c * dt^2 quadrature allowance.
    double quad_slack() const { return quad_slack_; }
    double beta() const { return beta_; }
    std::string output_dir() const { return output_dir_; }

    void override_seed(std::uint64_t seed) {
        seed_ = seed;
        entries_["mc.seed"] = std::to_string(seed);
    }

    const std::map<std::string, std::string>& entries() const noexcept { return entries_; }
    std::string get(const std::string& key, const std::string& fallback = "") const;
    /// FNV-1a 64 of the sorted canonical entries, as 16 hex digits.
    std::string hash() const;

private:
    ExperimentConfig() = default;
    void interpret();
    double number(const std::string& key, double fallback) const;

    std::map<std::string, std::string> entries_;
    std::filesystem::path base_dir_;
    double horizon_ = 1.0;
    std::size_t intervals_ = 100;
    std::size_t paths_ = 10000;
    std::uint64_t seed_ = 20240601;
    Law law_ = Law::Q;
    double resolvent_tol_ = 1e-10;
    PicardConfig picard_;
    int lsmc_degree_ = 4;
    double quad_slack_ = 10.0;
    double beta_ = 0.0;
    std::string output_dir_ = "out";
};

TimeFunction parse_time_function(const std::string& spec);
LagKernel parse_lag_kernel(const std::string& spec);
StateFunction parse_state_function(const std::string& spec);

}  // namespace bsvie
