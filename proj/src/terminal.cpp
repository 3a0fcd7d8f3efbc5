#include "bsvie/terminal.hpp"

#include <cmath>
#include <sstream>

namespace bsvie {

namespace {

std::string label(const char* kind, std::initializer_list<double> params) {
    std::ostringstream os;
    os.precision(17);
    os << kind;
    for (double p : params) os << ":" << p;
    return os.str();
}

}  // namespace

namespace functions {

TimeFunction constant(double c) {
    return {label("const", {c}), [c](double) { return c; }};
}

TimeFunction exponential(double scale, double rate) {
    return {label("exp", {scale, rate}), [scale, rate](double t) { return scale * std::exp(rate * t); }};
}

TimeFunction affine(double a, double b) {
    return {label("affine", {a, b}), [a, b](double t) { return a + b * t; }};
}

LagKernel lag_constant(double c) {
    return {label("const", {c}), [c](double, double) { return c; }};
}

LagKernel lag_exponential(double scale, double rate) {
    return {label("exp", {scale, rate}), [scale, rate](double, double u) { return scale * std::exp(rate * u); }};
}

StateFunction polynomial(std::vector<double> c) {
    std::ostringstream os;
    os.precision(17);
    os << "poly";
    double a = 0.0, factorial = 1.0;
    for (std::size_t k = 0; k < c.size(); ++k) {
        os << ":" << c[k];
        if (k > 0) factorial *= static_cast<double>(k);
        a += std::abs(c[k]) * factorial;  // |x|^k <= k! e^{|x|}
    }
    auto value = [c](double, double x) {
        double r = 0.0;
        for (std::size_t k = c.size(); k-- > 0;) r = r * x + c[k];
        return r;
    };
    auto deriv = [c](double, double x) {
        double r = 0.0;
        for (std::size_t k = c.size(); k-- > 1;) r = r * x + static_cast<double>(k) * c[k];
        return r;
    };
    return {os.str(), value, deriv, a, 1.0};
}

StateFunction state_exponential(double scale, double rate) {
    return {label("exp", {scale, rate}), [scale, rate](double, double x) { return scale * std::exp(rate * x); },
            [scale, rate](double, double x) { return scale * rate * std::exp(rate * x); }, std::abs(scale),
            std::abs(rate)};
}

StateFunction state_affine(double a, double b) {
    return {label("affine", {a, b}), [a, b](double, double x) { return a + b * x; },
            [b](double, double) { return b; }, std::abs(a) + std::abs(b), 1.0};
}

}  // namespace functions

std::string TerminalFamily::describe() const {
    if (auto d = as<Deterministic>()) return "deterministic(f0=" + d->f0.name + ")";
    if (auto g = as<GaussianLinear>()) return "gaussian_linear(f0=" + g->f0.name + ",phi=" + g->phi.name + ")";
    return "terminal_function(h=" + as<TerminalFunction>()->h.name + ")";
}

double evaluate_F(const TerminalFamily& family, double t, const PathView& path, const TimeGrid& grid) {
    if (auto d = family.as<TerminalFamily::Deterministic>()) return d->f0(t);
    if (auto g = family.as<TerminalFamily::GaussianLinear>()) {
        double sum = g->f0(t);
        for (std::size_t k = 0; k + 1 < path.size(); ++k) sum += g->phi(t, grid.node(k)) * path.dW(k);
        return sum;
    }
    return family.as<TerminalFamily::TerminalFunction>()->h.h(t, path.terminal());
}

double gaussian_expectation(const StateFunction& h, double t, double mean, double variance,
                            const GaussHermite& rule) {
    const double sd = std::sqrt(std::max(variance, 0.0));
    return rule.expectation([&](double z) {
        const double x = mean + sd * z;
        const double v = h.h(t, x);
        const double envelope = h.growth_a * std::exp(h.growth_b * std::abs(x));
        if (!std::isfinite(v) || std::abs(v) > envelope * (1 + 1e-9) + 1e-300) {
            std::ostringstream os;
            os << h.name << " leaves its growth envelope at x = " << x;
            throw Error(ErrorKind::Quadrature, os.str());
        }
        return v;
    });
}

double state_derivative(const StateFunction& h, double t, double x) {
    if (h.dh) return h.dh(t, x);
    const double step = 1e-4 * (1.0 + std::abs(x));
    return (h.h(t, x + step) - h.h(t, x - step)) / (2.0 * step);
}

double gaussian_expectation_dh(const StateFunction& h, double t, double mean, double variance,
                               const GaussHermite& rule) {
    const double sd = std::sqrt(std::max(variance, 0.0));
    return rule.expectation([&](double z) { return state_derivative(h, t, mean + sd * z); });
}

double conditional_F(const TerminalFamily& family, double t, std::size_t r, const PathView& path,
                     const DriftFunction& drift, const GaussHermite& rule) {
    const TimeGrid& grid = drift.grid;
    if (r >= grid.size()) throw Error(ErrorKind::Domain, "conditioning node outside the grid");
    if (auto d = family.as<TerminalFamily::Deterministic>()) return d->f0(t);
    const double h = grid.step();
    if (auto g = family.as<TerminalFamily::GaussianLinear>()) {
        double sum = g->f0(t);
        for (std::size_t k = 0; k < r; ++k) sum += g->phi(t, grid.node(k)) * path.dW(k);
        for (std::size_t k = r; k < grid.intervals(); ++k) sum += g->phi(t, grid.node(k)) * drift.values[k] * h;
        return sum;
    }
    const auto& tf = *family.as<TerminalFamily::TerminalFunction>();
    const double mean = path.W(r) + drift.remaining(r);
    return gaussian_expectation(tf.h, t, mean, grid.horizon() - grid.node(r), rule);
}

double malliavin_F(const TerminalFamily& family, double t, double s, const PathView& path) {
    (void)s;
    if (family.as<TerminalFamily::Deterministic>()) return 0.0;
    if (auto g = family.as<TerminalFamily::GaussianLinear>()) return g->phi(t, s);
    return state_derivative(family.as<TerminalFamily::TerminalFunction>()->h, t, path.terminal());
}

ConditionalEngine::ConditionalEngine(const TerminalFamily& family, const TimeGrid& grid,
                                     const DriftFunction& drift, std::size_t gh_points)
    : family_(family), grid_(grid), drift_(drift), rule_(gh_points) {
    require_same_grid(grid, drift.grid, "ConditionalEngine");
    const std::size_t n = grid.size();
    const double h = grid.step();
    f0_.assign(n, 0.0);
    if (auto d = family.as<TerminalFamily::Deterministic>())
        for (std::size_t j = 0; j < n; ++j) f0_[j] = d->f0(grid.node(j));
    if (auto g = family.as<TerminalFamily::GaussianLinear>()) {
        phi_.assign(n * n, 0.0);
        drift_tail_.assign(n * n, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            f0_[j] = g->f0(grid.node(j));
            for (std::size_t k = 0; k < n; ++k) phi_[j * n + k] = g->phi(grid.node(j), grid.node(k));
            double tail = 0.0;
            for (std::size_t i = n; i-- > 0;) {
                if (i < grid.intervals()) tail += phi_[j * n + i] * drift.values[i] * h;
                drift_tail_[j * n + i] = tail;
            }
        }
    }
}

void ConditionalEngine::table(const PathView& path, std::span<double> out) const {
    const std::size_t n = grid_.size();
    if (out.size() != n * n) throw Error(ErrorKind::GridMismatch, "conditional table needs (N+1)^2 slots");
    if (family_.as<TerminalFamily::Deterministic>()) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i; j < n; ++j) out[i * n + j] = f0_[j];
        return;
    }
    if (family_.as<TerminalFamily::GaussianLinear>()) {
        for (std::size_t j = 0; j < n; ++j) {
            double prefix = 0.0;
            for (std::size_t i = 0; i <= j; ++i) {
                out[i * n + j] = f0_[j] + prefix + drift_tail_[j * n + i];
                if (i + 1 < n) prefix += phi_[j * n + i] * path.dW(i);
            }
        }
        return;
    }
    const auto& h = family_.as<TerminalFamily::TerminalFunction>()->h;
    for (std::size_t i = 0; i < n; ++i) {
        const double mean = path.W(i) + drift_.remaining(i);
        const double variance = grid_.horizon() - grid_.node(i);
        for (std::size_t j = i; j < n; ++j)
            out[i * n + j] = gaussian_expectation(h, grid_.node(j), mean, variance, rule_);
    }
}

void ConditionalEngine::terminal_values(const PathView& path, std::span<double> out) const {
    const std::size_t n = grid_.size();
    if (out.size() != n) throw Error(ErrorKind::GridMismatch, "terminal values need N+1 slots");
    if (family_.as<TerminalFamily::Deterministic>()) {
        std::copy(f0_.begin(), f0_.end(), out.begin());
        return;
    }
    if (family_.as<TerminalFamily::GaussianLinear>()) {
        for (std::size_t j = 0; j < n; ++j) {
            double sum = f0_[j];
            for (std::size_t k = 0; k + 1 < n; ++k) sum += phi_[j * n + k] * path.dW(k);
            out[j] = sum;
        }
        return;
    }
    const auto& h = family_.as<TerminalFamily::TerminalFunction>()->h;
    for (std::size_t j = 0; j < n; ++j) out[j] = h.h(grid_.node(j), path.terminal());
}

}  // namespace bsvie
