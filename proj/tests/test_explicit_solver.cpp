#include <gtest/gtest.h>

#include <cmath>

#include "bsvie/explicit_solver.hpp"
#include "bsvie/oracle.hpp"

using namespace bsvie;

namespace {

KernelSpec spec_of(double G, double g) {
    KernelSpec spec;
    spec.G = kernels::constant(G);
    spec.g = kernels::constant_1d(g);
    return spec;
}

struct Problem {
    TimeGrid grid;
    DelayMeasure measure;
    KernelSpec spec;
    KernelTable phi;
    ResolventTable psi;
    DriftFunction b;

    Problem(double T, std::size_t n, DelayMeasure m, KernelSpec k)
        : grid(T, n),
          measure(std::move(m)),
          spec(std::move(k)),
          phi(build_phi(measure, spec, grid)),
          psi(resolvent(phi, 1e-12)),
          b(drift(measure, spec, grid)) {}
};

const TerminalFamily w_terminal =
    TerminalFamily::gaussian_linear(functions::constant(0.0), functions::lag_constant(1.0));

}  // namespace

TEST(SolveY, DeterministicExponentialProfile) {
    for (std::size_t n : {100u, 200u}) {
        Problem p(1.0, n, DelayMeasure::dirac(1.0, 0.0), spec_of(0.5, 0.0));
        const auto field = solve_Y(TerminalFamily::deterministic(functions::constant(1.0)), p.psi, p.b, p.grid);
        const double h = p.grid.step();
        for (std::size_t i = 0; i <= n; ++i)
            EXPECT_NEAR(field.y[i], std::exp(0.5 * (1.0 - p.grid.node(i))), h * h) << i;
        EXPECT_FALSE(field.stochastic());
    }
}

TEST(SolveY, ZeroKernelReturnsConditionalF) {
    Problem p(1.0, 20, DelayMeasure::uniform(1.0), spec_of(0.0, 0.0));
    const auto ens = sample_paths(p.grid, 50, 1, Law::Q, p.b);
    const auto fam = TerminalFamily::terminal_function(functions::polynomial({0.0, 1.0, 1.0}));
    const auto field = solve_Y(fam, p.psi, p.b, p.grid, &ens);
    for (std::size_t j = 0; j < 50; ++j)
        for (std::size_t i = 0; i <= 20; ++i) {
            const double w = ens.path(j).W(i);
            EXPECT_NEAR(field.profile(j)[i], w + w * w + (1.0 - p.grid.node(i)), 1e-12);
        }
}

TEST(SolveY, GaussianShiftUnderQ) {
    // G = 0 and b = gamma: Y(t) = W(t) + gamma (T - t).
    Problem p(1.0, 20, DelayMeasure::dirac(1.0, 0.0), spec_of(0.0, 0.4));
    const auto ens = sample_paths(p.grid, 40, 2, Law::Q, p.b);
    const auto field = solve_Y(w_terminal, p.psi, p.b, p.grid, &ens);
    for (std::size_t j = 0; j < 40; ++j)
        for (std::size_t i = 0; i <= 20; ++i)
            EXPECT_NEAR(field.profile(j)[i], ens.path(j).W(i) + 0.4 * (1.0 - p.grid.node(i)), 1e-12);
}

TEST(SolveY, StochasticFamilyNeedsEnsemble) {
    Problem p(1.0, 10, DelayMeasure::dirac(1.0, 0.0), spec_of(0.3, 0.0));
    EXPECT_THROW(solve_Y(w_terminal, p.psi, p.b, p.grid), Error);
}

TEST(SolveY, GridMismatch) {
    Problem p(1.0, 10, DelayMeasure::dirac(1.0, 0.0), spec_of(0.3, 0.0));
    try {
        solve_Y(TerminalFamily::deterministic(functions::constant(1.0)), p.psi, p.b, TimeGrid(1.0, 12));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::GridMismatch);
    }
}

TEST(ComputeU, DeterministicFreeTermLeavesQuadratureResidual) {
    Problem p(1.0, 100, DelayMeasure::dirac(1.0, 0.0), spec_of(0.5, 0.0));
    const auto fam = TerminalFamily::deterministic(functions::exponential(1.0, -1.0));
    const auto field = solve_Y(fam, p.psi, p.b, p.grid);
    const auto u = compute_U(fam, field, p.measure, p.spec, p.grid);
    const double h = p.grid.step();
    for (double v : u) EXPECT_LE(std::abs(v), 10.0 * h * h);
}

TEST(ComputeU, BrownianTerminalIsTheIncrement) {
    Problem p(1.0, 16, DelayMeasure::dirac(1.0, 0.0), spec_of(0.0, 0.0));
    const auto ens = sample_paths(p.grid, 20, 4, Law::Q, p.b);
    const auto field = solve_Y(w_terminal, p.psi, p.b, p.grid, &ens);
    const auto u = compute_U(w_terminal, field, p.measure, p.spec, p.grid, &ens);
    for (std::size_t j = 0; j < 20; ++j)
        for (std::size_t i = 0; i <= 16; ++i)
            EXPECT_NEAR(u[j * 17 + i], ens.path(j).terminal() - ens.path(j).W(i), 1e-12);
}

TEST(ComputeU, ZeroFreeTerm) {
    Problem p(1.0, 16, DelayMeasure::uniform(1.0), spec_of(0.8, 0.0));
    const auto fam = TerminalFamily::deterministic(functions::constant(0.0));
    const auto field = solve_Y(fam, p.psi, p.b, p.grid);
    for (double v : field.y) EXPECT_EQ(v, 0.0);
    for (double v : compute_U(fam, field, p.measure, p.spec, p.grid)) EXPECT_EQ(v, 0.0);
}

TEST(SolveZ, BrownianTerminalWithoutGenerator) {
    Problem p(1.0, 20, DelayMeasure::dirac(1.0, 0.0), spec_of(0.0, 0.0));
    const auto z = solve_Z(w_terminal, p.phi, p.psi, p.b, p.grid);
    for (std::size_t i = 0; i <= 20; ++i)
        for (std::size_t j = i; j <= 20; ++j) EXPECT_NEAR(z(i, j), 1.0, 1e-12);
}

TEST(SolveZ, DeterministicIsZero) {
    Problem p(1.0, 20, DelayMeasure::dirac(1.0, 0.0), spec_of(0.5, 0.0));
    const auto z = solve_Z(TerminalFamily::deterministic(functions::constant(1.0)), p.phi, p.psi, p.b, p.grid);
    for (std::size_t i = 0; i <= 20; ++i)
        for (std::size_t j = i; j <= 20; ++j) EXPECT_EQ(z(i, j), 0.0);
}

TEST(SolveZ, ConstantKernelClosedForm) {
    // D_s Y(r) = e^{c(T-r)}, so Z(t,s) = 1 + c int_s^T e^{c(T-r)} dr = e^{c(T-s)}.
    const double c = 0.3;
    Problem p(1.0, 200, DelayMeasure::dirac(1.0, 0.0), spec_of(c, 0.2));
    const auto z = solve_Z(w_terminal, p.phi, p.psi, p.b, p.grid);
    const double h = p.grid.step();
    for (std::size_t i = 0; i <= 200; i += 10)
        for (std::size_t j = i; j <= 200; j += 5) EXPECT_NEAR(z(i, j), std::exp(c * (1.0 - p.grid.node(j))), h * h);
}

TEST(SolveZ, TerminalFunctionAgreesWithGaussianLinear) {
    // h(t,x) = x is F = W(T); both branches must produce the same surface.
    Problem p(1.0, 20, DelayMeasure::uniform(1.0), spec_of(0.6, 0.5));
    const auto zl = solve_Z(w_terminal, p.phi, p.psi, p.b, p.grid);
    const auto zt =
        solve_Z(TerminalFamily::terminal_function(functions::state_affine(0.0, 1.0)), p.phi, p.psi, p.b, p.grid);
    for (std::size_t i = 0; i <= 20; ++i)
        for (std::size_t j = i; j <= 20; ++j) EXPECT_NEAR(zl(i, j), zt(i, j), 1e-8);
}

TEST(SolveZ, QuadraticTerminalWithoutGenerator) {
    // F = W(T)^2, G = 0, b = 0: Z(t,s) = 2 E[W(T) | W(s) = x] = 2x.
    Problem p(1.0, 10, DelayMeasure::dirac(1.0, 0.0), spec_of(0.0, 0.0));
    std::vector<double> states(11);
    for (std::size_t j = 0; j <= 10; ++j) states[j] = 0.1 * static_cast<double>(j) - 0.4;
    const auto z = solve_Z(TerminalFamily::terminal_function(functions::polynomial({0.0, 0.0, 1.0})), p.phi, p.psi,
                           p.b, p.grid, states);
    for (std::size_t i = 0; i <= 10; ++i)
        for (std::size_t j = i; j <= 10; ++j) EXPECT_NEAR(z(i, j), 2.0 * states[j], 1e-9);
}

TEST(SolveZ, StochasticGeneratorTermIsZero) {
    EXPECT_EQ(malliavin_g_term(kernels::constant_1d(0.7), 0.3), 0.0);
}

TEST(Smoothness, ConstantSurface) {
    const TimeGrid grid(1.0, 10);
    ZSurface z(grid);
    for (std::size_t i = 0; i <= 10; ++i)
        for (std::size_t j = i; j <= 10; ++j) z.at(i, j) = 1.0;
    const auto r = smoothness_diagnostics(z);
    EXPECT_EQ(r.integral, 0.0);
    EXPECT_EQ(r.nonfinite, 0u);
    for (std::size_t i = 0; i <= 10; ++i)
        for (std::size_t j = i; j <= 10; ++j) EXPECT_EQ(r.dzdt[i * 11 + j], 0.0);
}

TEST(Smoothness, ProductSurfaceIntegral) {
    // Z = t s: int_0^1 int_t^1 s^2 ds dt = 1/4.
    const TimeGrid grid(1.0, 100);
    ZSurface z(grid);
    for (std::size_t i = 0; i <= 100; ++i)
        for (std::size_t j = i; j <= 100; ++j) z.at(i, j) = grid.node(i) * grid.node(j);
    const auto r = smoothness_diagnostics(z);
    EXPECT_NEAR(r.integral, 0.25, 1e-3);
    EXPECT_NEAR(r.dzdt[40 * 101 + 70], 0.7, 1e-12);
}

TEST(Smoothness, StableUnderRefinement) {
    // Z depends on t once phi does; use phi(t,u) = e^{-(u-t)} style kernel through lag_exponential in t.
    auto surface = [](std::size_t n) {
        Problem p(1.0, n, DelayMeasure::dirac(1.0, 0.0), spec_of(0.4, 0.0));
        const auto fam = TerminalFamily::gaussian_linear(
            functions::constant(0.0),
            LagKernel{"mixed", [](double t, double u) { return 1.0 + t * std::exp(-u); }});
        return smoothness_diagnostics(solve_Z(fam, p.phi, p.psi, p.b, p.grid)).integral;
    };
    const double coarse = surface(50), fine = surface(100);
    EXPECT_GT(coarse, 0.0);
    EXPECT_LT(std::abs(coarse - fine) / fine, 0.02);
}

TEST(Smoothness, FlagsNonFinite) {
    const TimeGrid grid(1.0, 4);
    ZSurface z(grid);
    z.at(1, 2) = std::nan("");
    EXPECT_GT(smoothness_diagnostics(z).nonfinite, 0u);
}

TEST(Norms, UnitProfile) {
    const TimeGrid grid(1.0, 50);
    SolutionField field{grid, 0, std::vector<double>(51, 1.0), std::vector<double>(51, 1.0),
                        std::vector<double>(51, 0.0), ZSurface(grid), {}};
    const auto r = norms(field, 0.0);
    EXPECT_NEAR(r.h1, 2.0, 1e-12);
    EXPECT_EQ(r.h2, 0.0);
    EXPECT_NEAR(r.s2, 1.0, 1e-15);
}

TEST(Norms, ExponentialProfileSupremum) {
    Problem p(1.0, 100, DelayMeasure::dirac(1.0, 0.0), spec_of(0.5, 0.0));
    auto field = solve_Y(TerminalFamily::deterministic(functions::constant(1.0)), p.psi, p.b, p.grid);
    const auto r = norms(field, 0.0);
    EXPECT_NEAR(r.s2, std::exp(1.0), 1e-3);
    EXPECT_GE(r.h1, 0.0);
}

TEST(Residual, ReducedEquationHoldsForGaussianLinear) {
    Problem p(1.0, 40, DelayMeasure::dirac(1.0, 0.0), spec_of(0.3, 0.2));
    const auto ens = sample_paths(p.grid, 20000, 20240601, Law::Q, p.b);
    auto field = solve_Y(w_terminal, p.psi, p.b, p.grid, &ens);
    const auto z = solve_Z(w_terminal, p.phi, p.psi, p.b, p.grid);
    const auto res = reduced_residual_paths(w_terminal, field, p.phi, z, ens);
    const double h = p.grid.step();
    for (std::size_t i = 0; i <= 40; ++i) EXPECT_LE(std::abs(res.mean[i]), 10.0 * h * h + 3.0 * res.se[i]);
}

TEST(Residual, ItoIsometry) {
    Problem p(1.0, 40, DelayMeasure::uniform(1.0), spec_of(0.5, 0.4));
    const auto fam = TerminalFamily::gaussian_linear(functions::constant(0.2), functions::lag_exponential(1.0, -0.5));
    const auto ens = sample_paths(p.grid, 20000, 7, Law::Q, p.b);
    const auto field = solve_Y(fam, p.psi, p.b, p.grid, &ens);
    const auto u = compute_U(fam, field, p.measure, p.spec, p.grid, &ens);
    const auto z = solve_Z(fam, p.phi, p.psi, p.b, p.grid);
    std::vector<double> sq(u.size());
    for (std::size_t k = 0; k < u.size(); ++k) sq[k] = u[k] * u[k];
    const auto st = node_statistics(ens, sq);
    for (std::size_t i : {0u, 10u, 20u, 30u}) {
        double integral = 0.0;
        for (std::size_t j = i; j < 40; ++j) integral += 0.5 * p.grid.step() * (z(i, j) * z(i, j) + z(i, j + 1) * z(i, j + 1));
        EXPECT_LE(std::abs(st.mean[i] - integral), 3.0 * st.se[i]) << "t index " << i;
    }
}

TEST(Residual, MartingaleIncrementsAreUncorrelated) {
    // E^Q[U(0) | F_t] by regressing U(0) on the observed increments of W^Q;
    // consecutive increments of that process must be uncorrelated.
    Problem p(1.0, 10, DelayMeasure::uniform(1.0), spec_of(0.5, 0.4));
    const auto fam = TerminalFamily::gaussian_linear(functions::constant(0.0), functions::lag_exponential(1.0, -0.5));
    const std::size_t paths = 40000;
    const auto ens = sample_paths(p.grid, paths, 20240601, Law::Q, p.b);
    const auto field = solve_Y(fam, p.psi, p.b, p.grid, &ens);
    const auto u = compute_U(fam, field, p.measure, p.spec, p.grid, &ens);
    std::vector<double> coef(10);
    for (std::size_t k = 0; k < 10; ++k) {
        double sxy = 0.0, sxx = 0.0;
        for (std::size_t j = 0; j < paths; ++j) {
            const double dw = ens.path(j).dWQ(k);
            sxy += u[j * 11] * dw;
            sxx += dw * dw;
        }
        coef[k] = sxy / sxx;
    }
    for (std::size_t k = 1; k < 10; ++k) {
        double sxy = 0.0, sxx = 0.0, syy = 0.0;
        for (std::size_t j = 0; j < paths; ++j) {
            const double prev = coef[k - 1] * ens.path(j).dWQ(k - 1), next = coef[k] * ens.path(j).dWQ(k);
            sxy += prev * next;
            sxx += prev * prev;
            syy += next * next;
        }
        EXPECT_LT(std::abs(sxy / std::sqrt(sxx * syy)), 3.0 / std::sqrt(static_cast<double>(paths))) << "node " << k;
    }
}
