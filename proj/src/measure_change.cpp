#include "bsvie/measure_change.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "bsvie/parallel.hpp"

namespace bsvie {

bool DriftFunction::is_zero() const {
    return std::all_of(values.begin(), values.end(), [](double b) { return b == 0.0; });
}

DriftFunction DriftFunction::from_values(const TimeGrid& grid, std::vector<double> values, double bound) {
    if (values.size() != grid.size()) throw Error(ErrorKind::GridMismatch, "drift values do not match grid");
    DriftFunction d{grid, std::move(values), std::vector<double>(grid.size(), 0.0), bound};
    const double h = grid.step();
    for (std::size_t i = 1; i < grid.size(); ++i) d.cumulative[i] = d.cumulative[i - 1] + d.values[i - 1] * h;
    return d;
}

DriftFunction drift(const DelayMeasure& measure, const KernelSpec& spec, const TimeGrid& grid) {
    if (measure.horizon() != grid.horizon())
        throw Error(ErrorKind::HorizonMismatch, "delay measure and grid horizons differ");
    measure.require_valid();
    std::vector<double> b(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        b[i] = measure.mass_left_open(grid.lag(i)) * spec.g(grid.node(i));
    return DriftFunction::from_values(grid, std::move(b), spec.g.bound());
}

PathEnsemble sample_paths(const TimeGrid& grid, std::size_t paths, std::uint64_t seed, Law law,
                          const DriftFunction& drift) {
    if (paths == 0) throw Error(ErrorKind::Domain, "path count must be >= 1");
    require_same_grid(grid, drift.grid, "sample_paths");
    PathEnsemble ens(grid, law, seed, drift);
    const std::size_t n = grid.size();
    const double h = grid.step();
    const double sd = std::sqrt(h);
    ens.w_.assign(paths * n, 0.0);
    ens.weights_.assign(paths, 1.0);
    const auto lo = static_cast<std::uint32_t>(seed);
    const auto hi = static_cast<std::uint32_t>(seed >> 32);
    const std::uint32_t tag = law == Law::P ? 0x50u : 0x51u;

    parallel_for(paths, [&](std::size_t j) {
        std::seed_seq seq{lo, hi, tag, static_cast<std::uint32_t>(j), static_cast<std::uint32_t>(j >> 32)};
        std::mt19937_64 engine(seq);
        std::normal_distribution<double> normal(0.0, 1.0);
        double* w = ens.w_.data() + j * n;
        if (law == Law::P) {
            double exponent = 0.0;
            for (std::size_t k = 0; k + 1 < n; ++k) {
                const double dw = sd * normal(engine);
                w[k + 1] = w[k] + dw;
                exponent += drift.values[k] * dw - 0.5 * drift.values[k] * drift.values[k] * h;
            }
            ens.weights_[j] = std::exp(exponent);
        } else {
            double wq = 0.0;
            for (std::size_t k = 0; k + 1 < n; ++k) {
                wq += sd * normal(engine);
                w[k + 1] = wq + drift.cumulative[k + 1];
            }
        }
    });
    return ens;
}

Estimate expect_q(const PathEnsemble& ensemble, std::span<const double> values) {
    const std::size_t m = ensemble.paths();
    if (values.size() != m) throw Error(ErrorKind::GridMismatch, "one value per path expected");
    for (double v : values)
        if (!std::isfinite(v)) throw Error(ErrorKind::Domain, "functional is not finite on every path");

    if (ensemble.law() == Law::Q) {
        double sum = 0.0;
        for (double v : values) sum += v;
        const double mean = sum / static_cast<double>(m);
        if (m < 2) return {mean, 0.0};
        double ss = 0.0;
        for (double v : values) ss += (v - mean) * (v - mean);
        return {mean, std::sqrt(ss / static_cast<double>(m - 1) / static_cast<double>(m))};
    }

    const auto& w = ensemble.weights();
    double sw = 0.0, wmax = 0.0, swx = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        sw += w[j];
        wmax = std::max(wmax, w[j]);
        swx += w[j] * values[j];
    }
    if (!(wmax > 0.0) || sw / wmax < 10.0)
        throw Error(ErrorKind::DegenerateWeights, "effective sample size sum(w)/max(w) below 10");
    const double est = swx / sw;
    double s2 = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        const double r = w[j] * (values[j] - est);
        s2 += r * r;
    }
    return {est, std::sqrt(s2) / sw};
}

Estimate expect_q(const PathEnsemble& ensemble, const std::function<double(const PathView&)>& functional) {
    std::vector<double> values(ensemble.paths());
    parallel_for(values.size(), [&](std::size_t j) { values[j] = functional(ensemble.path(j)); });
    return expect_q(ensemble, values);
}

}  // namespace bsvie
