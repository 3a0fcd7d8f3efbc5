#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "bsvie/delay_measure.hpp"
#include "bsvie/grid.hpp"
#include "bsvie/kernel.hpp"

namespace bsvie {

/// Girsanov drift b(t_i) = alpha((t_i - T, 0]) g(t_i), with the running
/// left-point integral sum_{k<i} b(t_k) dt.
struct DriftFunction {
    TimeGrid grid;
    std::vector<double> values;
    std::vector<double> cumulative;
    double bound = 0.0;

    /// sum_{k >= i, k < N} b(t_k) dt, the discrete int_{t_i}^T b.
    double remaining(std::size_t i) const { return cumulative.back() - cumulative[i]; }
    bool is_zero() const;

    static DriftFunction from_values(const TimeGrid& grid, std::vector<double> values, double bound);
};

DriftFunction drift(const DelayMeasure& measure, const KernelSpec& spec, const TimeGrid& grid);

enum class Law { P, Q };

/// Read-only view of one Brownian path. W is the original P-Brownian motion;
/// W^Q = W - int b is the Q-Brownian motion.
class PathView {
public:
    PathView(std::span<const double> w, std::span<const double> drift_cumulative)
        : w_(w), drift_(drift_cumulative) {}

    std::size_t size() const noexcept { return w_.size(); }
    double W(std::size_t i) const { return w_[i]; }
    double WQ(std::size_t i) const { return w_[i] - drift_[i]; }
    /// W(t_{k+1}) - W(t_k).
    double dW(std::size_t k) const { return w_[k + 1] - w_[k]; }
    double dWQ(std::size_t k) const { return WQ(k + 1) - WQ(k); }
    double terminal() const { return w_.back(); }
    std::span<const double> values() const noexcept { return w_; }

private:
    std::span<const double> w_;
    std::span<const double> drift_;
};

/// M discretized Brownian paths with per-path random streams. Under law P
/// each path carries the density M(T); under law Q the weights are 1.
class PathEnsemble {
public:
    const TimeGrid& grid() const noexcept { return grid_; }
    Law law() const noexcept { return law_; }
    std::size_t paths() const noexcept { return weights_.size(); }
    std::uint64_t seed() const noexcept { return seed_; }
    const DriftFunction& drift() const noexcept { return drift_; }

    PathView path(std::size_t j) const {
        return PathView({w_.data() + j * grid_.size(), grid_.size()}, drift_.cumulative);
    }
    double weight(std::size_t j) const { return weights_[j]; }
    const std::vector<double>& weights() const noexcept { return weights_; }

private:
    friend PathEnsemble sample_paths(const TimeGrid&, std::size_t, std::uint64_t, Law, const DriftFunction&);
    PathEnsemble(TimeGrid grid, Law law, std::uint64_t seed, DriftFunction drift)
        : grid_(grid), law_(law), seed_(seed), drift_(std::move(drift)) {}

    TimeGrid grid_;
    Law law_;
    std::uint64_t seed_;
    DriftFunction drift_;
    std::vector<double> w_;
    std::vector<double> weights_;
};

/// Mode P: standard increments plus M(T) = exp(sum b_k dW_k - 1/2 sum b_k^2 dt).
/// Mode Q: standard W^Q increments, W = W^Q + sum_{k<i} b_k dt.
/// Path j draws from its own engine seeded by (seed, law, j).
PathEnsemble sample_paths(const TimeGrid& grid, std::size_t paths, std::uint64_t seed, Law law,
                          const DriftFunction& drift);

struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
};

/// Q-expectation of a path functional: plain mean under law Q, self-normalized
/// weighted mean under law P (delta-method standard error). Throws
/// DegenerateWeights when sum(w)/max(w) < 10.
Estimate expect_q(const PathEnsemble& ensemble, const std::function<double(const PathView&)>& functional);

/// Same estimator applied to precomputed per-path values.
Estimate expect_q(const PathEnsemble& ensemble, std::span<const double> values);

}  // namespace bsvie
