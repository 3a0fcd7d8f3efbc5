#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "bsvie/error.hpp"

namespace bsvie {

/// Probability measure on [-T, 0] weighting how much of the past enters the
/// generator. Supports point masses, the uniform law, finite atom lists and
/// convex mixtures of those.
///
/// Interval masses are exact. The closed query alpha([a,0]) feeds the reduced
/// kernel; the half-open query alpha((a,0]) feeds the Girsanov drift. They
/// differ only by the atom weight sitting exactly at a.
class DelayMeasure {
public:
    struct Atom {
        double location;
        double weight;
    };

    struct Dirac {
        double location;
    };
    struct Uniform {};
    struct Atoms {
        std::vector<Atom> atoms;
    };
    struct Component;
    struct Mixture {
        std::vector<Component> components;
    };
    using Variant = std::variant<Dirac, Uniform, Atoms, Mixture>;

    /// Atoms merged by location plus the total weight carried by uniform parts.
    struct Decomposition {
        std::vector<Atom> atoms;
        double uniform_weight = 0.0;
    };

    static DelayMeasure dirac(double horizon, double location);
    static DelayMeasure uniform(double horizon);
    /// Weights are taken as given unless normalize is set.
    static DelayMeasure atoms(double horizon, std::vector<Atom> atoms, bool normalize = false);
    static DelayMeasure mixture(double horizon, std::vector<Component> components, bool normalize = false);

    double horizon() const noexcept { return horizon_; }
    const Variant& variant() const noexcept { return variant_; }

    /// alpha([a, 0]).
    double mass_closed(double a) const;
    /// alpha((a, 0]).
    double mass_left_open(double a) const;

    /// First invariant violation (SupportError, MassError, HorizonMismatch), if any.
    std::optional<Error> validate() const;
    /// Throws the first violation found by validate().
    void require_valid() const;

    Decomposition decompose() const;
    bool has_atom_at(double a) const;

    std::string describe() const;

private:
    DelayMeasure(double horizon, Variant v) : horizon_(horizon), variant_(std::move(v)) {}

    void check_argument(double a) const;
    double closed_unchecked(double a) const;
    double open_unchecked(double a) const;
    void collect(double scale, Decomposition& out) const;

    double horizon_;
    Variant variant_;
};

struct DelayMeasure::Component {
    std::shared_ptr<const DelayMeasure> measure;
    double weight;
};

}  // namespace bsvie
