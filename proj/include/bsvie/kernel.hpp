#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bsvie/delay_measure.hpp"
#include "bsvie/grid.hpp"

namespace bsvie {

/// Bounded kernel on D_T. Any negative argument evaluates to 0.
class Kernel2D {
public:
    using Fn = std::function<double(double, double)>;

    Kernel2D(std::string name, Fn fn, double bound)
        : name_(std::move(name)), fn_(std::move(fn)), bound_(bound) {}

    double operator()(double t, double s) const {
        if (t < 0.0 || s < 0.0) return 0.0;
        return fn_(t, s);
    }

    const std::string& name() const noexcept { return name_; }
    double bound() const noexcept { return bound_; }

private:
    std::string name_;
    Fn fn_;
    double bound_;
};

/// Bounded function of one time argument, zero for negative arguments.
class Kernel1D {
public:
    using Fn = std::function<double(double)>;

    Kernel1D(std::string name, Fn fn, double bound)
        : name_(std::move(name)), fn_(std::move(fn)), bound_(bound) {}

    double operator()(double s) const { return s < 0.0 ? 0.0 : fn_(s); }

    const std::string& name() const noexcept { return name_; }
    double bound() const noexcept { return bound_; }

private:
    std::string name_;
    Fn fn_;
    double bound_;
};

/// Generator data: the kernel G (or, when G itself is unbounded, the reduced
/// kernel supplied directly) and the Z-coefficient g.
struct KernelSpec {
    std::optional<Kernel2D> G;
    std::optional<Kernel2D> phi;
    Kernel1D g{"zero", [](double) { return 0.0; }, 0.0};

    /// |G| <= C_G and |g| <= C_g at every grid node.
    void check_bounds(const TimeGrid& grid) const;
    const Kernel2D& require_G(const char* where) const;
    double declared_phi_bound() const;
    std::string describe() const;
};

namespace kernels {

Kernel2D constant(double c);
/// coef * (s-t)^power * exp(-rate (s-t)); bound computed on [0, horizon].
Kernel2D poly_exp(double coef, int power, double rate, double horizon);
/// Values on the full (N+1)x(N+1) node square, row-major in t; bilinear in between.
Kernel2D tabulated(const TimeGrid& grid, std::vector<double> values);
Kernel1D constant_1d(double gamma);

/// Reduced kernel (s-t) e^{-(s-t)} of the uniform-delay Laplace example. The
/// generator kernel T(s-t)/(T-s) e^{-(s-t)} blows up at s = T, so only the
/// bounded product with the uniform mass is registered.
KernelSpec example33(double horizon);

}  // namespace kernels

/// Values K(t_i, t_j) for i <= j on a uniform grid (entries below the
/// diagonal are kept at zero).
class KernelTable {
public:
    explicit KernelTable(TimeGrid grid)
        : grid_(grid), values_(grid.size() * grid.size(), 0.0) {}

    const TimeGrid& grid() const noexcept { return grid_; }
    std::size_t size() const noexcept { return grid_.size(); }

    double operator()(std::size_t i, std::size_t j) const { return values_[i * size() + j]; }
    double& at(std::size_t i, std::size_t j) { return values_[i * size() + j]; }
    std::span<const double> row(std::size_t i) const { return {values_.data() + i * size(), size()}; }

    /// max over i <= j of |K(t_i, t_j)|.
    double sup_norm() const;

    std::optional<double> declared_bound;

private:
    TimeGrid grid_;
    std::vector<double> values_;
};

struct ResolventTable {
    KernelTable psi;
    std::size_t order = 0;          ///< truncation order n*
    double tail_bound = 0.0;        ///< sum_{n > n*} C^n T^(n-1) / (n-1)!, the bound the truncation uses
    double factorial_tail = 0.0;    ///< sum_{n > n*} (C T)^n / n!, reported for comparison
    double bound_used = 0.0;        ///< C in the factorial bound
    std::vector<double> term_sup_norms;  ///< sup |Phi^(n)|, n = 1..n*
};

/// Phi(t_i, t_j) = alpha([t_j - T, 0]) G(t_i, t_j).
KernelTable build_phi(const DelayMeasure& measure, const KernelSpec& spec, const TimeGrid& grid);

/// (A o B)(t_i, t_j) = trapezoid of int_{t_i}^{t_j} A(t_i, s) B(s, t_j) ds.
KernelTable volterra_compose(const KernelTable& a, const KernelTable& b);

/// Phi^(1..count) by repeated composition.
std::vector<KernelTable> iterated_kernels(const KernelTable& phi, std::size_t count);

/// Neumann series truncated at the first order whose sharp tail drops
/// below tol. Throws ToleranceUnreachable past max_order.
ResolventTable resolvent(const KernelTable& phi, double tol, std::size_t max_order = 60);

/// (C T)^n / n!.
double tail_bound(double c, double horizon, std::size_t n);
/// sum_{n > order} (C T)^n / n!.
double series_tail(double c, double horizon, std::size_t order);
/// Sharp tail sum_{n > order} C^n T^(n-1) / (n-1)!; |Phi^(n)| <= C^n T^(n-1) / (n-1)! holds on the triangle.
double sharp_tail(double c, double horizon, std::size_t order);

enum class Example33Variant { Printed, Derived };

/// Closed-form resolvent of the Laplace example as a function of u = s - t.
/// Printed: (1 - e^{-u})/2. Derived: (1 - e^{-2u})/2, the inverse transform
/// of L psi / (1 - L psi) = 1/(x(x+2)).
std::function<double(double)> example33_reference(double horizon, Example33Variant variant);

}  // namespace bsvie
