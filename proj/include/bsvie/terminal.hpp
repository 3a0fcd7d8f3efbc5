#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "bsvie/gauss_hermite.hpp"
#include "bsvie/grid.hpp"
#include "bsvie/measure_change.hpp"

namespace bsvie {

struct TimeFunction {
    std::string name;
    std::function<double(double)> fn;
    double operator()(double t) const { return fn(t); }
};

/// Deterministic integrand phi(t, u) of a Gaussian linear functional.
struct LagKernel {
    std::string name;
    std::function<double(double, double)> fn;
    double operator()(double t, double u) const { return fn(t, u); }
};

/// h(t, x) with its state derivative and the growth envelope |h| <= a e^{b|x|}.
/// An empty derivative falls back to central differences.
struct StateFunction {
    std::string name;
    std::function<double(double, double)> h;
    std::function<double(double, double)> dh;
    double growth_a = 0.0;
    double growth_b = 0.0;
};

namespace functions {
TimeFunction constant(double c);
/// scale * e^{rate t}
TimeFunction exponential(double scale, double rate);
/// a + b t
TimeFunction affine(double a, double b);

LagKernel lag_constant(double c);
/// scale * e^{rate u}
LagKernel lag_exponential(double scale, double rate);

/// sum_k c_k x^k
StateFunction polynomial(std::vector<double> coefficients);
/// scale * e^{rate x}
StateFunction state_exponential(double scale, double rate);
/// a + b x
StateFunction state_affine(double a, double b);
}  // namespace functions

/// Free term F(t): deterministic, Gaussian linear f0(t) + int phi(t,u) dW(u),
/// or h(t, W(T)).
class TerminalFamily {
public:
    struct Deterministic {
        TimeFunction f0;
    };
    struct GaussianLinear {
        TimeFunction f0;
        LagKernel phi;
    };
    struct TerminalFunction {
        StateFunction h;
    };
    using Variant = std::variant<Deterministic, GaussianLinear, TerminalFunction>;

    static TerminalFamily deterministic(TimeFunction f0) { return TerminalFamily(Deterministic{std::move(f0)}); }
    static TerminalFamily gaussian_linear(TimeFunction f0, LagKernel phi) {
        return TerminalFamily(GaussianLinear{std::move(f0), std::move(phi)});
    }
    static TerminalFamily terminal_function(StateFunction h) {
        return TerminalFamily(TerminalFunction{std::move(h)});
    }

    const Variant& variant() const noexcept { return variant_; }
    bool is_stochastic() const noexcept { return !std::holds_alternative<Deterministic>(variant_); }
    template <class T>
    const T* as() const noexcept {
        return std::get_if<T>(&variant_);
    }
    std::string describe() const;

private:
    explicit TerminalFamily(Variant v) : variant_(std::move(v)) {}
    Variant variant_;
};

/// F(t) on one path. The Ito integral is the left-point sum over the grid.
double evaluate_F(const TerminalFamily& family, double t, const PathView& path, const TimeGrid& grid);

/// E^Q[F(t) | F_{t_r}] given the path up to node r.
double conditional_F(const TerminalFamily& family, double t, std::size_t r, const PathView& path,
                     const DriftFunction& drift, const GaussHermite& rule = GaussHermite(64));

/// D_s F(t) on one path.
double malliavin_F(const TerminalFamily& family, double t, double s, const PathView& path);

/// E[h(t, mean + sqrt(variance) Z)] by Gauss-Hermite; throws QuadratureError
/// when h leaves its declared growth envelope at a node.
double gaussian_expectation(const StateFunction& h, double t, double mean, double variance,
                            const GaussHermite& rule);
/// Same for the state derivative dh (analytic, or central difference with
/// step 1e-4 (1 + |x|)).
double gaussian_expectation_dh(const StateFunction& h, double t, double mean, double variance,
                               const GaussHermite& rule);
double state_derivative(const StateFunction& h, double t, double x);

/// Bulk conditional expectations for one family on one grid: for a path,
/// fills C(i, j) = E^Q[F(t_j) | F_{t_i}] for i <= j.
class ConditionalEngine {
public:
    ConditionalEngine(const TerminalFamily& family, const TimeGrid& grid, const DriftFunction& drift,
                      std::size_t gh_points = 64);

    const TimeGrid& grid() const noexcept { return grid_; }
    /// out has (N+1)^2 entries, row index = conditioning node.
    void table(const PathView& path, std::span<double> out) const;
    /// F(t_j) for every node.
    void terminal_values(const PathView& path, std::span<double> out) const;

private:
    TerminalFamily family_;
    TimeGrid grid_;
    DriftFunction drift_;
    GaussHermite rule_;
    std::vector<double> f0_;
    std::vector<double> phi_;        // phi(t_j, t_k), row j
    std::vector<double> drift_tail_;  // sum_{k>=i} phi(t_j,t_k) b_k dt, row j
};

}  // namespace bsvie
