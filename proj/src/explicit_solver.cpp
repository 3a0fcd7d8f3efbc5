#include "bsvie/explicit_solver.hpp"

#include <algorithm>
#include <cmath>

#include "bsvie/parallel.hpp"

namespace bsvie {

NodeStatistics node_statistics(const PathEnsemble& ensemble, std::span<const double> matrix) {
    const std::size_t n = ensemble.grid().size();
    const std::size_t m = ensemble.paths();
    if (matrix.size() != n * m) throw Error(ErrorKind::GridMismatch, "matrix is not paths x (N+1)");
    NodeStatistics out{std::vector<double>(n), std::vector<double>(n)};
    std::vector<double> column(m);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) column[j] = matrix[j * n + i];
        const Estimate e = expect_q(ensemble, column);
        out.mean[i] = e.value;
        out.se[i] = e.std_error;
    }
    return out;
}

SolutionField solve_Y(const TerminalFamily& family, const ResolventTable& psi, const DriftFunction& drift,
                      const TimeGrid& grid, const PathEnsemble* ensemble) {
    require_same_grid(grid, psi.psi.grid(), "solve_Y: resolvent");
    require_same_grid(grid, drift.grid, "solve_Y: drift");
    const std::size_t n = grid.size();
    SolutionField field{grid, 0, {}, {}, {}, std::nullopt, {}};
    field.metadata["family"] = family.describe();
    field.metadata["resolvent_order"] = std::to_string(psi.order);

    ConditionalEngine engine(family, grid, drift);
    auto solve_path = [&](std::span<const double> table, std::span<double> y) {
        for (std::size_t i = 0; i < n; ++i) {
            double sum = table[i * n + i];
            for (std::size_t j = i; j < n; ++j) sum += grid.tail_weight(i, j) * psi.psi(i, j) * table[i * n + j];
            y[i] = sum;
        }
    };

    if (!family.is_stochastic()) {
        std::vector<double> table(n * n);
        std::vector<double> dummy(n, 0.0);
        engine.table(PathView(dummy, drift.cumulative), table);
        field.y.assign(n, 0.0);
        solve_path(table, field.y);
        field.y_mean = field.y;
        field.y_se.assign(n, 0.0);
        return field;
    }

    if (!ensemble) throw Error(ErrorKind::UnsupportedFamily, "stochastic free term needs a path ensemble");
    require_same_grid(grid, ensemble->grid(), "solve_Y: ensemble");
    const std::size_t m = ensemble->paths();
    field.paths = m;
    field.y.assign(m * n, 0.0);
    field.metadata["seed"] = std::to_string(ensemble->seed());
    field.metadata["paths"] = std::to_string(m);
    parallel_for(m, [&](std::size_t p) {
        std::vector<double> table(n * n);
        engine.table(ensemble->path(p), table);
        solve_path(table, std::span<double>(field.y.data() + p * n, n));
    });
    auto stats = node_statistics(*ensemble, field.y);
    field.y_mean = std::move(stats.mean);
    field.y_se = std::move(stats.se);
    return field;
}

std::vector<double> compute_U(const TerminalFamily& family, const SolutionField& field, const DelayMeasure& measure,
                              const KernelSpec& spec, const TimeGrid& grid, const PathEnsemble* ensemble) {
    require_same_grid(grid, field.grid, "compute_U");
    const KernelTable phi = build_phi(measure, spec, grid);
    const std::size_t n = grid.size();
    auto u_path = [&](std::span<const double> y, std::span<const double> f, std::span<double> u) {
        for (std::size_t i = 0; i < n; ++i) {
            double sum = f[i] - y[i];
            for (std::size_t j = i; j < n; ++j) sum += grid.tail_weight(i, j) * phi(i, j) * y[j];
            u[i] = sum;
        }
    };

    ConditionalEngine engine(family, grid, DriftFunction::from_values(grid, std::vector<double>(n, 0.0), 0.0));
    if (!field.stochastic()) {
        if (family.is_stochastic()) throw Error(ErrorKind::UnsupportedFamily, "field is deterministic but F is not");
        std::vector<double> f(n), u(n);
        std::vector<double> dummy(n, 0.0);
        engine.terminal_values(PathView(dummy, dummy), f);
        u_path(field.y, f, u);
        return u;
    }
    if (!ensemble || ensemble->paths() != field.paths)
        throw Error(ErrorKind::GridMismatch, "compute_U needs the ensemble the field was solved on");
    std::vector<double> u(field.paths * n);
    parallel_for(field.paths, [&](std::size_t p) {
        std::vector<double> f(n);
        engine.terminal_values(ensemble->path(p), f);
        u_path(field.profile(p), f, std::span<double>(u.data() + p * n, n));
    });
    return u;
}

double malliavin_g_term(const Kernel1D& /*g*/, double /*s*/) {
    // g is a deterministic function of time, so D_s g(r) = 0 for every r.
    return 0.0;
}

ZSurface solve_Z(const TerminalFamily& family, const KernelTable& phi, const ResolventTable& psi,
                 const DriftFunction& drift, const TimeGrid& grid, std::span<const double> states) {
    require_same_grid(grid, phi.grid(), "solve_Z: phi");
    require_same_grid(grid, psi.psi.grid(), "solve_Z: psi");
    require_same_grid(grid, drift.grid, "solve_Z: drift");
    const std::size_t n = grid.size();
    ZSurface z(grid);
    if (!family.is_stochastic()) return z;

    if (auto g = family.as<TerminalFamily::GaussianLinear>()) {
        // dy(l, j) = D_{s_j} Y(t_l) = phi(t_l, s_j) + int_{t_l}^T Psi(t_l, v) phi(v, s_j) dv, j <= l.
        std::vector<double> dy(n * n, 0.0);
        parallel_for(n, [&](std::size_t l) {
            for (std::size_t j = 0; j <= l; ++j) {
                const double s = grid.node(j);
                double sum = g->phi(grid.node(l), s);
                for (std::size_t v = l; v < n; ++v) sum += grid.tail_weight(l, v) * psi.psi(l, v) * g->phi(grid.node(v), s);
                dy[l * n + j] = sum;
            }
        });
        parallel_for(n, [&](std::size_t i) {
            const double t = grid.node(i);
            for (std::size_t j = i; j < n; ++j) {
                double sum = g->phi(t, grid.node(j));
                for (std::size_t l = j; l < n; ++l) sum += grid.tail_weight(j, l) * phi(i, l) * dy[l * n + j];
                z.at(i, j) = sum;
            }
        });
        return z;
    }

    const auto& h = family.as<TerminalFamily::TerminalFunction>()->h;
    std::vector<double> state(n);
    if (states.empty()) {
        for (std::size_t j = 0; j < n; ++j) state[j] = drift.cumulative[j];
    } else {
        if (states.size() != n) throw Error(ErrorKind::GridMismatch, "one state per grid node expected");
        std::copy(states.begin(), states.end(), state.begin());
    }
    const GaussHermite rule(64);
    const double horizon = grid.horizon();

    // D_s Y(t_l) as a function of x = W(t_l): y_l'(x).
    auto dy_state = [&](std::size_t l, double x) {
        const double mean = x + drift.remaining(l);
        const double var = horizon - grid.node(l);
        double sum = gaussian_expectation_dh(h, grid.node(l), mean, var, rule);
        for (std::size_t v = l; v < n; ++v)
            sum += grid.tail_weight(l, v) * psi.psi(l, v) * gaussian_expectation_dh(h, grid.node(v), mean, var, rule);
        return sum;
    };

    parallel_for(n, [&](std::size_t j) {
        const double x = state[j];
        // Outer layer: E^Q[y_l'(W(t_l)) | W(s_j) = x] for every l >= j.
        std::vector<double> outer(n, 0.0);
        for (std::size_t l = j; l < n; ++l) {
            const double shift = drift.cumulative[l] - drift.cumulative[j];
            const double sd = std::sqrt(grid.node(l) - grid.node(j));
            outer[l] = rule.expectation([&](double zq) { return dy_state(l, x + shift + sd * zq); });
        }
        const double mean = x + drift.remaining(j);
        const double var = horizon - grid.node(j);
        for (std::size_t i = 0; i <= j; ++i) {
            double sum = gaussian_expectation_dh(h, grid.node(i), mean, var, rule);
            for (std::size_t l = j; l < n; ++l) sum += grid.tail_weight(j, l) * phi(i, l) * outer[l];
            z.at(i, j) = sum;
        }
    });
    return z;
}

SmoothnessReport smoothness_diagnostics(const ZSurface& z) {
    const TimeGrid& grid = z.grid();
    const std::size_t n = grid.size();
    const double h = grid.step();
    SmoothnessReport out{std::vector<double>(n * n, 0.0), 0.0, 0};
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            double d = 0.0;
            if (i > 0 && i + 1 <= j)
                d = (z(i + 1, j) - z(i - 1, j)) / (2 * h);
            else if (i + 1 <= j)
                d = (z(i + 1, j) - z(i, j)) / h;
            else if (i > 0)
                d = (z(i, j) - z(i - 1, j)) / h;
            else if (n > 1)
                d = (z(1, 1) - z(0, 1)) / h;  // (0,0): reuse the nearest forward difference
            out.dzdt[i * n + j] = d;
            if (!std::isfinite(d)) ++out.nonfinite;
        }
    }
    double outer = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double inner = 0.0;
        for (std::size_t j = i; j < n; ++j) {
            const double d = out.dzdt[i * n + j];
            if (std::isfinite(d)) inner += grid.tail_weight(i, j) * d * d;
        }
        const double w = (i == 0 || i + 1 == n) ? 0.5 * h : h;
        outer += w * inner;
    }
    out.integral = outer;
    return out;
}

NormReport norms(const SolutionField& field, double beta) {
    const TimeGrid& grid = field.grid;
    const std::size_t n = grid.size();
    const double h = grid.step();
    const double horizon = grid.horizon();
    const double past_weight = beta == 0.0 ? horizon : (1.0 - std::exp(-beta * horizon)) / beta;

    auto path_norms = [&](std::span<const double> y, double& h1sq, double& s2) {
        h1sq = past_weight * y[0] * y[0];
        s2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double w = (i == 0 || i + 1 == n) ? 0.5 * h : h;
            const double e = std::exp(beta * grid.node(i)) * y[i] * y[i];
            h1sq += w * e;
            s2 = std::max(s2, e);
        }
    };

    NormReport out;
    out.beta = beta;
    const std::size_t paths = field.stochastic() ? field.paths : 1;
    double h1sum = 0.0, s2sum = 0.0;
    for (std::size_t p = 0; p < paths; ++p) {
        double a = 0.0, b = 0.0;
        path_norms(field.profile(p), a, b);
        h1sum += a;
        s2sum += b;
    }
    out.h1 = h1sum / static_cast<double>(paths);
    out.s2 = s2sum / static_cast<double>(paths);

    if (field.z) {
        const ZSurface& z = *field.z;
        double outer = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double inner = 0.0;
            for (std::size_t j = i; j < n; ++j)
                inner += grid.tail_weight(i, j) * std::exp(beta * grid.node(j)) * z(i, j) * z(i, j);
            outer += ((i == 0 || i + 1 == n) ? 0.5 * h : h) * inner;
        }
        out.h2 = outer;
    }
    return out;
}

NodeStatistics reduced_residual_paths(const TerminalFamily& family, const SolutionField& field,
                                      const KernelTable& phi, const ZSurface& z, const PathEnsemble& ensemble) {
    const TimeGrid& grid = field.grid;
    require_same_grid(grid, phi.grid(), "reduced_residual_paths");
    if (!field.stochastic() || field.paths != ensemble.paths())
        throw Error(ErrorKind::GridMismatch, "pathwise residual needs the ensemble the field was solved on");
    const std::size_t n = grid.size();
    ConditionalEngine engine(family, grid, ensemble.drift());
    std::vector<double> residual(field.paths * n);
    parallel_for(field.paths, [&](std::size_t p) {
        const PathView path = ensemble.path(p);
        const auto y = field.profile(p);
        std::vector<double> f(n);
        engine.terminal_values(path, f);
        for (std::size_t i = 0; i < n; ++i) {
            double r = y[i] - f[i];
            for (std::size_t j = i; j < n; ++j) r -= grid.tail_weight(i, j) * phi(i, j) * y[j];
            for (std::size_t k = i; k + 1 < n; ++k) r += z(i, k) * path.dWQ(k);
            residual[p * n + i] = r;
        }
    });
    return node_statistics(ensemble, residual);
}

}  // namespace bsvie
