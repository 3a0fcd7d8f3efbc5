#include <gtest/gtest.h>

#include <cmath>

#include "bsvie/explicit_solver.hpp"
#include "bsvie/oracle.hpp"

using namespace bsvie;

namespace {

KernelSpec spec_of(double G, double g = 0.0) {
    KernelSpec spec;
    spec.G = kernels::constant(G);
    spec.g = kernels::constant_1d(g);
    return spec;
}

std::vector<double> profile(const TimeGrid& grid, double (*f)(double)) {
    std::vector<double> out(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) out[i] = f(grid.node(i));
    return out;
}

double sup_gap(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

const TerminalFamily unit = TerminalFamily::deterministic(functions::constant(1.0));

}  // namespace

TEST(Collocation, ZeroKernelReturnsFreeTerm) {
    const TimeGrid grid(1.0, 20);
    const auto fbar = profile(grid, [](double t) { return std::sin(3 * t); });
    EXPECT_EQ(solve_reduced_collocation(fbar, KernelTable(grid)), fbar);
}

TEST(Collocation, ExponentialSolution) {
    const TimeGrid grid(1.0, 200);
    const auto phi = build_phi(DelayMeasure::dirac(1.0, 0.0), spec_of(0.5), grid);
    const auto y = solve_reduced_collocation(std::vector<double>(201, 1.0), phi);
    EXPECT_NEAR(y[0], std::exp(0.5), 10.0 * grid.step() * grid.step());
}

TEST(Collocation, AgreesWithNeumannSeries) {
    const TimeGrid grid(1.0, 100);
    KernelTable phi(grid);
    for (std::size_t i = 0; i <= 100; ++i)
        for (std::size_t j = i; j <= 100; ++j) phi.at(i, j) = grid.node(j) - grid.node(i);
    phi.declared_bound = 1.0;
    const auto fbar = profile(grid, [](double t) { return std::exp(-t); });
    const auto y = solve_reduced_collocation(fbar, phi);
    const auto psi = resolvent(phi, 1e-12);
    std::vector<double> series(101);
    for (std::size_t i = 0; i <= 100; ++i) {
        series[i] = fbar[i];
        for (std::size_t j = i; j <= 100; ++j) series[i] += grid.tail_weight(i, j) * psi.psi(i, j) * fbar[j];
    }
    EXPECT_LE(sup_gap(y, series), 10.0 * grid.step() * grid.step());
}

TEST(Collocation, SingularStep) {
    const TimeGrid grid(1.0, 4);
    KernelTable phi(grid);
    for (std::size_t i = 0; i <= 4; ++i)
        for (std::size_t j = i; j <= 4; ++j) phi.at(i, j) = 8.0;  // 1 - (h/2) 8 = 0
    try {
        solve_reduced_collocation(std::vector<double>(5, 1.0), phi);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::SingularStep);
    }
}

TEST(Picard, DiracAtZeroMatchesCollocation) {
    for (std::size_t n : {50u, 100u, 200u}) {
        const TimeGrid grid(1.0, n);
        const auto m = DelayMeasure::dirac(1.0, 0.0);
        const auto spec = spec_of(0.5);
        const auto pic = solve_delayed_picard(unit, spec, m, grid);
        const auto col = solve_reduced_collocation(std::vector<double>(n + 1, 1.0), build_phi(m, spec, grid));
        const double h = grid.step();
        EXPECT_LE(sup_gap(pic.y, col), 10.0 * h * h);
        const auto psi = resolvent(build_phi(m, spec, grid), 1e-12);
        const auto explicit_y = solve_Y(unit, psi, drift(m, spec, grid), grid).y;
        EXPECT_LE(sup_gap(explicit_y, col), 10.0 * h * h);
        EXPECT_LE(sup_gap(explicit_y, pic.y), 10.0 * h * h);
    }
}

TEST(Picard, ZeroKernelConvergesImmediately) {
    const TimeGrid grid(1.0, 20);
    const auto fam = TerminalFamily::deterministic(functions::exponential(1.0, 2.0));
    const auto r = solve_delayed_picard(fam, spec_of(0.0), DelayMeasure::uniform(1.0), grid);
    EXPECT_EQ(r.iterations, 1u);
    for (std::size_t i = 0; i <= 20; ++i) EXPECT_EQ(r.y[i], std::exp(2.0 * grid.node(i)));
}

TEST(Picard, ShiftedDiracFixedPoint) {
    const TimeGrid grid(1.0, 100);
    const auto m = DelayMeasure::dirac(1.0, -0.3);
    const auto spec = spec_of(0.5);
    const auto r = solve_delayed_picard(unit, spec, m, grid, {200, 1e-12, 1e12});
    EXPECT_LT(residual_delayed(r.y, unit, spec, m, grid).sup, 1e-8);
    const auto reduced = residual_reduced(r.y, std::vector<double>(101, 1.0), build_phi(m, spec, grid));
    EXPECT_TRUE(std::isfinite(reduced.sup));
}

TEST(Picard, UniformFixedPointAndGeometricContraction) {
    const TimeGrid grid(1.0, 80);
    const auto m = DelayMeasure::uniform(1.0);
    const auto spec = spec_of(0.8);
    const auto r = solve_delayed_picard(unit, spec, m, grid, {200, 1e-12, 1e12});
    EXPECT_LT(residual_delayed(r.y, unit, spec, m, grid).sup, 1e-8);
    for (std::size_t k = 3; k + 1 < r.sup_diffs.size(); ++k)
        EXPECT_LT(r.sup_diffs[k + 1], r.sup_diffs[k]) << "iteration " << k + 1;
}

TEST(Picard, DivergenceIsDetected) {
    const TimeGrid grid(1.0, 20);
    try {
        solve_delayed_picard(unit, spec_of(60.0), DelayMeasure::dirac(1.0, 0.0), grid, {500, 1e-10, 1e6});
        FAIL();
    } catch (const PicardFailure& e) {
        EXPECT_EQ(e.kind(), ErrorKind::PicardDiverged);
        EXPECT_FALSE(e.trace().empty());
    }
}

TEST(Picard, StallIsDetected) {
    const TimeGrid grid(1.0, 20);
    try {
        solve_delayed_picard(unit, spec_of(1.0), DelayMeasure::dirac(1.0, 0.0), grid, {2, 1e-14, 1e12});
        FAIL();
    } catch (const PicardFailure& e) {
        EXPECT_EQ(e.kind(), ErrorKind::PicardStalled);
        EXPECT_EQ(e.trace().size(), 2u);
    }
}

TEST(Picard, StochasticFamilyRejected) {
    const auto fam = TerminalFamily::gaussian_linear(functions::constant(0.0), functions::lag_constant(1.0));
    EXPECT_THROW(solve_delayed_picard(fam, spec_of(0.5), DelayMeasure::dirac(1.0, 0.0), TimeGrid(1.0, 10)), Error);
}

TEST(Residuals, IdentityCases) {
    const TimeGrid grid(1.0, 10);
    const auto fbar = profile(grid, [](double t) { return 1.0 + t; });
    EXPECT_EQ(residual_reduced(fbar, fbar, KernelTable(grid)).sup, 0.0);
    const auto r = residual_delayed(std::vector<double>(11, 0.0), unit, spec_of(0.5), DelayMeasure::uniform(1.0), grid);
    for (double v : r.profile) EXPECT_EQ(v, -1.0);
}

TEST(Residuals, ExplicitSolutionSolvesDelayedEquationUnderDiracAtZero) {
    const TimeGrid grid(1.0, 100);
    const auto m = DelayMeasure::dirac(1.0, 0.0);
    const auto spec = spec_of(0.7);
    const auto psi = resolvent(build_phi(m, spec, grid), 1e-12);
    const auto y = solve_Y(unit, psi, drift(m, spec, grid), grid).y;
    const double h = grid.step();
    EXPECT_LE(residual_delayed(y, unit, spec, m, grid).sup, 10.0 * h * h);
    EXPECT_LE(residual_reduced(y, std::vector<double>(101, 1.0), build_phi(m, spec, grid)).sup, 10.0 * h * h + 1e-12);
}

TEST(Residuals, UniformDelayCrossResidualIsReported) {
    const TimeGrid grid(1.0, 50);
    const auto m = DelayMeasure::uniform(1.0);
    const auto spec = spec_of(0.5);
    const auto pic = solve_delayed_picard(unit, spec, m, grid, {200, 1e-12, 1e12});
    const auto r = residual_reduced(pic.y, std::vector<double>(51, 1.0), build_phi(m, spec, grid));
    EXPECT_TRUE(std::isfinite(r.sup));
    EXPECT_EQ(r.profile.size(), 51u);
}

TEST(Lipschitz, Constants) {
    KernelSpec a = spec_of(1.0, 0.0);
    EXPECT_DOUBLE_EQ(lipschitz_constant(a), 2.0);
    EXPECT_DOUBLE_EQ(lipschitz_constant(spec_of(0.0, 0.0)), 0.0);
    EXPECT_DOUBLE_EQ(lipschitz_constant(spec_of(2.0, 3.0)), 18.0);
}

TEST(Lsmc, BrownianTerminalWithoutGenerator) {
    const TimeGrid grid(1.0, 10);
    const auto m = DelayMeasure::dirac(1.0, 0.0);
    const auto spec = spec_of(0.0, 0.0);
    const auto b = drift(m, spec, grid);
    const auto ens = sample_paths(grid, 20000, 3, Law::P, b);
    const auto fam = TerminalFamily::gaussian_linear(functions::constant(0.0), functions::lag_constant(1.0));
    const auto r = solve_delayed_lsmc(fam, spec, m, grid, ens);
    // R^2 of the fitted Y regressed on W(t), per node.
    for (std::size_t i = 1; i <= 10; ++i) {
        double sy = 0.0, sw = 0.0, syy = 0.0, sww = 0.0, syw = 0.0;
        const double m = static_cast<double>(ens.paths());
        for (std::size_t p = 0; p < ens.paths(); ++p) {
            const double w = ens.path(p).W(i), y = r.y[p * 11 + i];
            sy += y;
            sw += w;
            syy += y * y;
            sww += w * w;
            syw += y * w;
        }
        const double cov = syw / m - sy * sw / (m * m);
        const double r2 = cov * cov / ((syy / m - sy * sy / (m * m)) * (sww / m - sw * sw / (m * m)));
        EXPECT_GT(r2, 0.999) << "node " << i;
        for (std::size_t j = i; j < 10; ++j) EXPECT_LE(std::abs(r.z_mean(i, j) - 1.0), 3.0 * r.z_se(i, j));
    }
}

TEST(Lsmc, DeterministicFreeTermHasNoMartingalePart) {
    const TimeGrid grid(1.0, 10);
    const auto m = DelayMeasure::dirac(1.0, 0.0);
    const auto spec = spec_of(0.4, 0.2);
    const auto b = drift(m, spec, grid);
    const auto ens = sample_paths(grid, 5000, 5, Law::P, b);
    const auto fam = TerminalFamily::gaussian_linear(functions::constant(1.0), functions::lag_constant(0.0));
    const auto r = solve_delayed_lsmc(fam, spec, m, grid, ens);
    for (std::size_t i = 0; i <= 10; ++i)
        for (std::size_t j = i; j < 10; ++j) EXPECT_LE(std::abs(r.z_mean(i, j)), 3.0 * r.z_se(i, j) + 1e-12);
    EXPECT_NEAR(r.y_stats.mean[0], std::exp(0.4), 10.0 * grid.step() * grid.step());
}

TEST(Lsmc, OffGridAtomsAreRejected) {
    const TimeGrid grid(1.0, 10);
    const auto m = DelayMeasure::dirac(1.0, -0.33);
    const auto spec = spec_of(0.4);
    const auto ens = sample_paths(grid, 100, 5, Law::P, drift(m, spec, grid));
    const auto fam = TerminalFamily::gaussian_linear(functions::constant(0.0), functions::lag_constant(1.0));
    try {
        solve_delayed_lsmc(fam, spec, m, grid, ens);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::UnsupportedMeasure);
    }
}

TEST(Lsmc, RequiresPEnsemble) {
    const TimeGrid grid(1.0, 10);
    const auto m = DelayMeasure::dirac(1.0, 0.0);
    const auto spec = spec_of(0.4);
    const auto ens = sample_paths(grid, 100, 5, Law::Q, drift(m, spec, grid));
    const auto fam = TerminalFamily::gaussian_linear(functions::constant(0.0), functions::lag_constant(1.0));
    EXPECT_THROW(solve_delayed_lsmc(fam, spec, m, grid, ens), Error);
}
