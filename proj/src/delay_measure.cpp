#include "bsvie/delay_measure.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace bsvie {

namespace {

constexpr double kWeightTolerance = 1e-12;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

DelayMeasure DelayMeasure::dirac(double horizon, double location) {
    return DelayMeasure(horizon, Dirac{location});
}

DelayMeasure DelayMeasure::uniform(double horizon) { return DelayMeasure(horizon, Uniform{}); }

DelayMeasure DelayMeasure::atoms(double horizon, std::vector<Atom> atoms, bool normalize) {
    if (normalize) {
        double total = 0.0;
        for (const auto& a : atoms) total += a.weight;
        if (total > 0.0)
            for (auto& a : atoms) a.weight /= total;
    }
    return DelayMeasure(horizon, Atoms{std::move(atoms)});
}

DelayMeasure DelayMeasure::mixture(double horizon, std::vector<Component> components, bool normalize) {
    if (normalize) {
        double total = 0.0;
        for (const auto& c : components) total += c.weight;
        if (total > 0.0)
            for (auto& c : components) c.weight /= total;
    }
    return DelayMeasure(horizon, Mixture{std::move(components)});
}

void DelayMeasure::check_argument(double a) const {
    if (!(a >= -horizon_ && a <= 0.0)) {
        std::ostringstream os;
        os << "interval endpoint " << a << " outside [-" << horizon_ << ", 0]";
        throw Error(ErrorKind::Domain, os.str());
    }
}

double DelayMeasure::mass_closed(double a) const {
    check_argument(a);
    return closed_unchecked(a);
}

double DelayMeasure::mass_left_open(double a) const {
    check_argument(a);
    return open_unchecked(a);
}

double DelayMeasure::closed_unchecked(double a) const {
    return std::visit(
        overloaded{
            [&](const Dirac& d) { return d.location >= a ? 1.0 : 0.0; },
            [&](const Uniform&) { return -a / horizon_; },
            [&](const Atoms& at) {
                double m = 0.0;
                for (const auto& atom : at.atoms)
                    if (atom.location >= a) m += atom.weight;
                return m;
            },
            [&](const Mixture& mix) {
                double m = 0.0;
                for (const auto& c : mix.components) m += c.weight * c.measure->closed_unchecked(a);
                return m;
            },
        },
        variant_);
}

double DelayMeasure::open_unchecked(double a) const {
    return std::visit(
        overloaded{
            [&](const Dirac& d) { return d.location > a ? 1.0 : 0.0; },
            [&](const Uniform&) { return -a / horizon_; },
            [&](const Atoms& at) {
                double m = 0.0;
                for (const auto& atom : at.atoms)
                    if (atom.location > a) m += atom.weight;
                return m;
            },
            [&](const Mixture& mix) {
                double m = 0.0;
                for (const auto& c : mix.components) m += c.weight * c.measure->open_unchecked(a);
                return m;
            },
        },
        variant_);
}

std::optional<Error> DelayMeasure::validate() const {
    auto in_support = [&](double u) { return u >= -horizon_ && u <= 0.0; };
    auto support_error = [&](double u) {
        std::ostringstream os;
        os << "atom at " << u << " outside [-" << horizon_ << ", 0]";
        return Error(ErrorKind::Support, os.str());
    };
    auto mass_error = [](double total) {
        std::ostringstream os;
        os.precision(17);
        os << "weights sum to " << total << " (negative weight or not 1 within 1e-12)";
        return Error(ErrorKind::Mass, os.str());
    };

    if (!(horizon_ > 0.0)) return Error(ErrorKind::Domain, "measure horizon must be positive");

    return std::visit(
        overloaded{
            [&](const Dirac& d) -> std::optional<Error> {
                if (!in_support(d.location)) return support_error(d.location);
                return std::nullopt;
            },
            [&](const Uniform&) -> std::optional<Error> { return std::nullopt; },
            [&](const Atoms& at) -> std::optional<Error> {
                double total = 0.0;
                bool negative = false;
                for (const auto& atom : at.atoms) {
                    if (!in_support(atom.location)) return support_error(atom.location);
                    negative = negative || atom.weight < 0.0;
                    total += atom.weight;
                }
                if (negative || std::abs(total - 1.0) > kWeightTolerance) return mass_error(total);
                return std::nullopt;
            },
            [&](const Mixture& mix) -> std::optional<Error> {
                double total = 0.0;
                bool negative = false;
                for (const auto& c : mix.components) {
                    if (!c.measure) return Error(ErrorKind::Config, "empty mixture component");
                    if (c.measure->horizon() != horizon_)
                        return Error(ErrorKind::HorizonMismatch, "mixture component horizon differs");
                    if (auto err = c.measure->validate()) return err;
                    negative = negative || c.weight < 0.0;
                    total += c.weight;
                }
                if (negative || std::abs(total - 1.0) > kWeightTolerance) return mass_error(total);
                return std::nullopt;
            },
        },
        variant_);
}

void DelayMeasure::require_valid() const {
    if (auto err = validate()) throw *err;
}

void DelayMeasure::collect(double scale, Decomposition& out) const {
    std::visit(overloaded{
                   [&](const Dirac& d) { out.atoms.push_back({d.location, scale}); },
                   [&](const Uniform&) { out.uniform_weight += scale; },
                   [&](const Atoms& at) {
                       for (const auto& atom : at.atoms) out.atoms.push_back({atom.location, scale * atom.weight});
                   },
                   [&](const Mixture& mix) {
                       for (const auto& c : mix.components) c.measure->collect(scale * c.weight, out);
                   },
               },
               variant_);
}

DelayMeasure::Decomposition DelayMeasure::decompose() const {
    Decomposition raw;
    collect(1.0, raw);
    std::stable_sort(raw.atoms.begin(), raw.atoms.end(),
                     [](const Atom& a, const Atom& b) { return a.location < b.location; });
    Decomposition merged;
    merged.uniform_weight = raw.uniform_weight;
    for (const auto& atom : raw.atoms) {
        if (atom.weight == 0.0) continue;
        if (!merged.atoms.empty() && merged.atoms.back().location == atom.location)
            merged.atoms.back().weight += atom.weight;
        else
            merged.atoms.push_back(atom);
    }
    return merged;
}

bool DelayMeasure::has_atom_at(double a) const {
    return closed_unchecked(a) != open_unchecked(a);
}

std::string DelayMeasure::describe() const {
    std::ostringstream os;
    os.precision(17);
    std::visit(overloaded{
                   [&](const Dirac& d) { os << "dirac(" << d.location << ")"; },
                   [&](const Uniform&) { os << "uniform"; },
                   [&](const Atoms& at) {
                       os << "atoms(";
                       for (std::size_t i = 0; i < at.atoms.size(); ++i)
                           os << (i ? "," : "") << at.atoms[i].location << ":" << at.atoms[i].weight;
                       os << ")";
                   },
                   [&](const Mixture& mix) {
                       os << "mixture(";
                       for (std::size_t i = 0; i < mix.components.size(); ++i)
                           os << (i ? "," : "") << mix.components[i].measure->describe() << "*"
                              << mix.components[i].weight;
                       os << ")";
                   },
               },
               variant_);
    return os.str();
}

}  // namespace bsvie
