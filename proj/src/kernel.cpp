#include "bsvie/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "bsvie/parallel.hpp"

namespace bsvie {

namespace {
constexpr double kBoundSlack = 1e-12;
}

void KernelSpec::check_bounds(const TimeGrid& grid) const {
    auto fail = [](const std::string& what, double t, double s, double value, double bound) {
        std::ostringstream os;
        os << what << " = " << value << " at (" << t << ", " << s << ") exceeds declared bound " << bound;
        throw Error(ErrorKind::Domain, os.str());
    };
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double t = grid.node(i);
        const double gv = g(t);
        if (!std::isfinite(gv) || std::abs(gv) > g.bound() * (1 + kBoundSlack) + kBoundSlack)
            fail("g", t, t, gv, g.bound());
        for (std::size_t j = i; j < grid.size(); ++j) {
            const double s = grid.node(j);
            if (G) {
                const double v = (*G)(t, s);
                if (!std::isfinite(v) || std::abs(v) > G->bound() * (1 + kBoundSlack) + kBoundSlack)
                    fail("G", t, s, v, G->bound());
            }
            if (phi) {
                const double v = (*phi)(t, s);
                if (!std::isfinite(v) || std::abs(v) > phi->bound() * (1 + kBoundSlack) + kBoundSlack)
                    fail("Phi", t, s, v, phi->bound());
            }
        }
    }
}

const Kernel2D& KernelSpec::require_G(const char* where) const {
    if (!G)
        throw Error(ErrorKind::UnsupportedKernel,
                    std::string(where) + " needs the generator kernel G; only the reduced kernel is registered");
    return *G;
}

double KernelSpec::declared_phi_bound() const {
    if (phi) return phi->bound();
    if (G) return G->bound();
    return 0.0;
}

std::string KernelSpec::describe() const {
    std::ostringstream os;
    if (G) os << "G=" << G->name();
    if (phi) os << (G ? ";" : "") << "Phi=" << phi->name();
    os << ";g=" << g.name();
    return os.str();
}

namespace kernels {

Kernel2D constant(double c) {
    std::ostringstream name;
    name.precision(17);
    name << "constant(" << c << ")";
    return Kernel2D(name.str(), [c](double, double) { return c; }, std::abs(c));
}

Kernel2D poly_exp(double coef, int power, double rate, double horizon) {
    if (power < 0) throw Error(ErrorKind::Config, "poly_exp power must be >= 0");
    auto f = [coef, power, rate](double u) { return coef * std::pow(u, power) * std::exp(-rate * u); };
    double bound = std::max(std::abs(f(0.0)), std::abs(f(horizon)));
    if (power > 0 && rate > 0.0) {
        const double peak = power / rate;
        if (peak < horizon) bound = std::max(bound, std::abs(f(peak)));
    }
    std::ostringstream name;
    name.precision(17);
    name << "poly_exp(" << coef << "," << power << "," << rate << ")";
    return Kernel2D(name.str(), [f](double t, double s) { return f(s - t); }, bound);
}

Kernel2D tabulated(const TimeGrid& grid, std::vector<double> values) {
    const std::size_t n = grid.size();
    if (values.size() != n * n) throw Error(ErrorKind::Config, "tabulated kernel needs (N+1)^2 values");
    double bound = 0.0;
    for (double v : values) {
        if (!std::isfinite(v)) throw Error(ErrorKind::Config, "tabulated kernel has non-finite entries");
        bound = std::max(bound, std::abs(v));
    }
    auto fn = [grid, table = std::move(values), n](double t, double s) {
        const double h = grid.step();
        auto locate = [&](double x, std::size_t& k, double& frac) {
            const double pos = std::clamp(x / h, 0.0, static_cast<double>(n - 1));
            k = std::min(static_cast<std::size_t>(pos), n - 2);
            frac = pos - static_cast<double>(k);
        };
        std::size_t i = 0, j = 0;
        double a = 0.0, b = 0.0;
        locate(t, i, a);
        locate(s, j, b);
        auto v = [&](std::size_t r, std::size_t c) { return table[r * n + c]; };
        return (1 - a) * (1 - b) * v(i, j) + a * (1 - b) * v(i + 1, j) + (1 - a) * b * v(i, j + 1) +
               a * b * v(i + 1, j + 1);
    };
    return Kernel2D("tabulated", std::move(fn), bound);
}

Kernel1D constant_1d(double gamma) {
    std::ostringstream name;
    name.precision(17);
    name << "constant(" << gamma << ")";
    return Kernel1D(name.str(), [gamma](double) { return gamma; }, std::abs(gamma));
}

KernelSpec example33(double horizon) {
    KernelSpec spec;
    const double bound = poly_exp(1.0, 1, 1.0, horizon).bound();
    spec.phi = Kernel2D("example33", [](double t, double s) { return (s - t) * std::exp(-(s - t)); }, bound);
    return spec;
}

}  // namespace kernels

double KernelTable::sup_norm() const {
    double m = 0.0;
    for (std::size_t i = 0; i < size(); ++i)
        for (std::size_t j = i; j < size(); ++j) m = std::max(m, std::abs((*this)(i, j)));
    return m;
}

KernelTable build_phi(const DelayMeasure& measure, const KernelSpec& spec, const TimeGrid& grid) {
    if (measure.horizon() != grid.horizon())
        throw Error(ErrorKind::HorizonMismatch, "delay measure and grid horizons differ");
    measure.require_valid();
    spec.check_bounds(grid);
    if (!spec.G && !spec.phi) throw Error(ErrorKind::UnsupportedKernel, "kernel spec has neither G nor Phi");

    KernelTable table(grid);
    std::vector<double> mass(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) mass[j] = measure.mass_closed(grid.lag(j));
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double t = grid.node(i);
        for (std::size_t j = i; j < grid.size(); ++j) {
            const double s = grid.node(j);
            table.at(i, j) = spec.phi ? (*spec.phi)(t, s) : mass[j] * (*spec.G)(t, s);
        }
    }
    table.declared_bound = spec.declared_phi_bound();
    return table;
}

KernelTable volterra_compose(const KernelTable& a, const KernelTable& b) {
    require_same_grid(a.grid(), b.grid(), "volterra_compose");
    const TimeGrid& grid = a.grid();
    const std::size_t n = grid.size();
    const double h = grid.step();
    KernelTable out(grid);
    parallel_for(n, [&](std::size_t i) {
        const auto ai = a.row(i);
        // Interior trapezoid nodes accumulated row by row of b, so the inner loop is contiguous.
        std::vector<double> interior(n, 0.0);
        for (std::size_t k = i + 1; k + 1 < n; ++k) {
            const double w = ai[k];
            if (w == 0.0) continue;
            const auto bk = b.row(k);
            for (std::size_t j = k + 1; j < n; ++j) interior[j] += w * bk[j];
        }
        for (std::size_t j = i + 1; j < n; ++j)
            out.at(i, j) = h * (0.5 * (ai[i] * b(i, j) + ai[j] * b(j, j)) + interior[j]);
    });
    return out;
}

std::vector<KernelTable> iterated_kernels(const KernelTable& phi, std::size_t count) {
    std::vector<KernelTable> out;
    if (count == 0) return out;
    out.reserve(count);
    out.push_back(phi);
    while (out.size() < count) out.push_back(volterra_compose(out.back(), phi));
    return out;
}

double tail_bound(double c, double horizon, std::size_t n) {
    const double x = c * horizon;
    if (x == 0.0) return 0.0;
    return std::exp(static_cast<double>(n) * std::log(x) - std::lgamma(static_cast<double>(n) + 1.0));
}

double series_tail(double c, double horizon, std::size_t order) {
    const double x = c * horizon;
    if (x == 0.0) return 0.0;
    double term = tail_bound(c, horizon, order + 1);
    double sum = 0.0;
    for (std::size_t n = order + 1; n < order + 2000; ++n) {
        sum += term;
        if (n + 1 > x && term <= sum * 1e-17) break;
        term *= x / static_cast<double>(n + 1);
    }
    return sum;
}

double sharp_tail(double c, double horizon, std::size_t order) {
    // sum_{n > order} c^n T^{n-1} / (n-1)! = c * sum_{m >= order} (cT)^m / m!
    return c * (tail_bound(c, horizon, order) + series_tail(c, horizon, order));
}

ResolventTable resolvent(const KernelTable& phi, double tol, std::size_t max_order) {
    if (!(tol > 0.0)) throw Error(ErrorKind::Domain, "resolvent tolerance must be positive");
    const double measured = phi.sup_norm();
    const double c = phi.declared_bound ? std::max(*phi.declared_bound, measured) : measured;
    const double horizon = phi.grid().horizon();
    if (!std::isfinite(c * horizon)) throw Error(ErrorKind::Domain, "kernel bound times horizon is not finite");

    std::size_t order = 1;
    double tail = sharp_tail(c, horizon, order);
    while (!(tail < tol)) {
        ++order;
        if (order > max_order) {
            std::ostringstream os;
            os << "factorial tail with C*T = " << c * horizon << " needs more than " << max_order << " orders";
            throw Error(ErrorKind::ToleranceUnreachable, os.str());
        }
        tail = sharp_tail(c, horizon, order);
    }

    ResolventTable out{phi, order, tail, series_tail(c, horizon, order), c, {}};
    out.psi.declared_bound.reset();
    out.term_sup_norms.push_back(measured);
    KernelTable term = phi;
    const std::size_t n = phi.size();
    for (std::size_t k = 2; k <= order; ++k) {
        term = volterra_compose(term, phi);
        out.term_sup_norms.push_back(term.sup_norm());
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i; j < n; ++j) out.psi.at(i, j) += term(i, j);
    }
    return out;
}

std::function<double(double)> example33_reference(double /*horizon*/, Example33Variant variant) {
    if (variant == Example33Variant::Printed) return [](double u) { return 0.5 * (1.0 - std::exp(-u)); };
    return [](double u) { return 0.5 * (1.0 - std::exp(-2.0 * u)); };
}

}  // namespace bsvie
