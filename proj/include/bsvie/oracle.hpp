#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bsvie/delay_measure.hpp"
#include "bsvie/explicit_solver.hpp"
#include "bsvie/kernel.hpp"
#include "bsvie/measure_change.hpp"
#include "bsvie/terminal.hpp"

namespace bsvie {

struct PicardConfig {
    std::size_t max_iterations = 200;
    double tolerance = 1e-10;        ///< sup-norm of successive differences
    double divergence_guard = 1e12;  ///< abort once the iterate exceeds this in sup-norm
};

struct PicardResult {
    std::vector<double> y;
    std::size_t iterations = 0;
    std::vector<double> sup_diffs;  ///< one entry per iteration
};

/// PicardDiverged / PicardStalled, carrying the iteration trace so far.
class PicardFailure : public Error {
public:
    PicardFailure(ErrorKind kind, const std::string& what, std::vector<double> trace)
        : Error(kind, what), trace_(std::move(trace)) {}
    const std::vector<double>& trace() const noexcept { return trace_; }

private:
    std::vector<double> trace_;
};

struct Residual {
    std::vector<double> profile;
    double sup = 0.0;
};

/// Backward implicit-trapezoid marching for Y(t) = Fbar(t) + int_t^T Phi(t,s) Y(s) ds.
std::vector<double> solve_reduced_collocation(std::span<const double> fbar, const KernelTable& phi);

/// Double quadrature int_{t_i}^T int_{[-T,0]} G(t_i+u, s+u) Y(s+u) alpha(du) ds for
/// every node. Atoms are exact; uniform parts use a 65-node trapezoid over the
/// part of [-T,0] where t_i + u >= 0 (G vanishes elsewhere). Y is linearly
/// interpolated and extended by Y(0) to negative times.
std::vector<double> delayed_generator(std::span<const double> y, const KernelSpec& spec,
                                      const DelayMeasure& measure, const TimeGrid& grid);

/// Fixed-point iteration of the delayed equation for deterministic F (Z = 0).
PicardResult solve_delayed_picard(const TerminalFamily& family, const KernelSpec& spec,
                                  const DelayMeasure& measure, const TimeGrid& grid,
                                  const PicardConfig& config = {});

/// Y - f0 - delayed generator.
Residual residual_delayed(std::span<const double> y, const TerminalFamily& family, const KernelSpec& spec,
                          const DelayMeasure& measure, const TimeGrid& grid);

/// Y - Fbar - trapezoid of Phi Y.
Residual residual_reduced(std::span<const double> y, std::span<const double> fbar, const KernelTable& phi);

/// K = 2 max(C_G^2, C_g^2) from the delayed-Lipschitz estimate.
double lipschitz_constant(const KernelSpec& spec);

struct LsmcConfig {
    PicardConfig picard{200, 1e-8, 1e12};
    int degree = 4;
    double ridge = 1e-8;
    double max_condition = 1e10;
};

struct LsmcResult {
    std::vector<double> y;  ///< paths x (N+1), fitted Y per path
    NodeStatistics y_stats;
    ZSurface z_mean;  ///< node mean of the regressed Z; column N repeats N-1
    ZSurface z_se;
    std::size_t iterations = 0;
    std::vector<double> sup_diffs;
};

/// Least-squares Monte Carlo Picard solver for the delayed equation under P.
/// Delay atoms must sit on grid lags; uniform parts are integrated with
/// trapezoid weights on the grid lags.
LsmcResult solve_delayed_lsmc(const TerminalFamily& family, const KernelSpec& spec, const DelayMeasure& measure,
                              const TimeGrid& grid, const PathEnsemble& ensemble, const LsmcConfig& config = {});

/// Pathwise residual of the delayed equation for a stochastic solution:
/// Y - F - generator(Y, Z) + sum_{k>=i} Z(t_i,t_k) dW_k, with the delay integral
/// on grid lags (atoms must sit on grid lags). Q-averaged per node.
NodeStatistics delayed_residual_paths(const TerminalFamily& family, const SolutionField& field, const ZSurface& z,
                                      const KernelSpec& spec, const DelayMeasure& measure,
                                      const PathEnsemble& ensemble);

}  // namespace bsvie
