#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bsvie/delay_measure.hpp"
#include "bsvie/kernel.hpp"
#include "bsvie/measure_change.hpp"
#include "bsvie/terminal.hpp"

namespace bsvie {

/// Z(t_i, s_j) for i <= j.
class ZSurface {
public:
    explicit ZSurface(TimeGrid grid) : grid_(grid), values_(grid.size() * grid.size(), 0.0) {}

    const TimeGrid& grid() const noexcept { return grid_; }
    double operator()(std::size_t i, std::size_t j) const { return values_[i * grid_.size() + j]; }
    double& at(std::size_t i, std::size_t j) { return values_[i * grid_.size() + j]; }

private:
    TimeGrid grid_;
    std::vector<double> values_;
};

/// Y on the grid (one profile, or one row per path for stochastic F) plus
/// the Z surface once computed.
struct SolutionField {
    TimeGrid grid;
    std::size_t paths = 0;  ///< 0 when F is deterministic
    std::vector<double> y;  ///< N+1 values, or paths x (N+1) row-major
    std::vector<double> y_mean;
    std::vector<double> y_se;
    std::optional<ZSurface> z;
    std::map<std::string, std::string> metadata;

    bool stochastic() const noexcept { return paths > 0; }
    std::span<const double> profile(std::size_t path = 0) const {
        return {y.data() + path * grid.size(), grid.size()};
    }
};

/// Squared norms, all on the same scale as sup e^{beta s} |Y|^2.
struct NormReport {
    double beta = 0.0;
    double h1 = 0.0;
    double h2 = 0.0;
    double s2 = 0.0;
};

struct SmoothnessReport {
    std::vector<double> dzdt;  ///< (N+1)^2, entries i <= j
    double integral = 0.0;     ///< trapezoid of int_0^T int_t^T (dZ/dt)^2 ds dt
    std::size_t nonfinite = 0;
};

/// Per-node Monte Carlo mean and standard error of a pathwise quantity.
struct NodeStatistics {
    std::vector<double> mean;
    std::vector<double> se;
};

/// Y(t) = E^Q[F(t) + int_t^T Psi(t,r) F(r) dr | F_t], with the conditional
/// expectations in closed form per family. Stochastic families need an ensemble.
SolutionField solve_Y(const TerminalFamily& family, const ResolventTable& psi, const DriftFunction& drift,
                      const TimeGrid& grid, const PathEnsemble* ensemble = nullptr);

/// U(t) = F(t) + int_t^T alpha-weighted G(t,r) Y(r) dr - Y(t), same layout as field.y.
/// The node weights are the reduced-kernel values, so that U is the martingale
/// part of the discrete reduced equation solved by solve_Y.
std::vector<double> compute_U(const TerminalFamily& family, const SolutionField& field, const DelayMeasure& measure,
                              const KernelSpec& spec, const TimeGrid& grid, const PathEnsemble* ensemble = nullptr);

/// Z(t,s) = E^Q[D_s F(t) + int_s^T Phi(t,r) D_s Y(r) dr | F_s]. The term
/// -U(t) int D_s g dW^Q vanishes because g is deterministic. Deterministic F
/// gives the zero surface. For h(t, W(T)) families Z depends on W(s); states
/// supplies W(s_j) per node (default: the Q-mean path).
ZSurface solve_Z(const TerminalFamily& family, const KernelTable& phi, const ResolventTable& psi,
                 const DriftFunction& drift, const TimeGrid& grid, std::span<const double> states = {});

/// The Z-formula's second term, int_s^T D_s g(r) dW^Q(r). Always 0 for the
/// deterministic g admitted here.
double malliavin_g_term(const Kernel1D& g, double s);

SmoothnessReport smoothness_diagnostics(const ZSurface& z);

/// H1 (Y extended by Y(0) on [-T,0)), H2 (Z extended by 0) and S2 norms.
/// Stochastic fields average over paths.
NormReport norms(const SolutionField& field, double beta);

/// Pathwise residual of the reduced equation
/// Y(t_i) - F(t_i) - int Phi Y + sum_{k>=i} Z(t_i,t_k) dW^Q_k, Q-averaged.
NodeStatistics reduced_residual_paths(const TerminalFamily& family, const SolutionField& field,
                                      const KernelTable& phi, const ZSurface& z, const PathEnsemble& ensemble);

/// Per-node Q-mean and standard error of a paths x (N+1) matrix.
NodeStatistics node_statistics(const PathEnsemble& ensemble, std::span<const double> matrix);

}  // namespace bsvie
