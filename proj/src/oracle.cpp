#include "bsvie/oracle.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "bsvie/parallel.hpp"

namespace bsvie {

namespace {

constexpr std::size_t kUniformNodes = 65;

double interpolate(std::span<const double> y, const TimeGrid& grid, double x) {
    if (x <= 0.0) return y[0];
    const double pos = x / grid.step();
    const std::size_t n = grid.intervals();
    if (pos >= static_cast<double>(n)) return y[n];
    const auto k = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(k);
    return frac == 0.0 ? y[k] : (1 - frac) * y[k] + frac * y[k + 1];
}

std::vector<double> deterministic_profile(const TerminalFamily& family, const TimeGrid& grid, const char* where) {
    const auto* det = family.as<TerminalFamily::Deterministic>();
    if (!det) throw Error(ErrorKind::UnsupportedFamily, std::string(where) + " needs a deterministic free term");
    std::vector<double> f(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) f[i] = det->f0(grid.node(i));
    return f;
}

double sup_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace

std::vector<double> solve_reduced_collocation(std::span<const double> fbar, const KernelTable& phi) {
    const TimeGrid& grid = phi.grid();
    const std::size_t n = grid.size();
    if (fbar.size() != n) throw Error(ErrorKind::GridMismatch, "collocation right-hand side length");
    std::vector<double> y(n);
    y[n - 1] = fbar[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) {
        double rhs = fbar[i];
        for (std::size_t j = i + 1; j < n; ++j) rhs += grid.tail_weight(i, j) * phi(i, j) * y[j];
        const double diag = 1.0 - grid.tail_weight(i, i) * phi(i, i);
        if (std::abs(diag) < 1e-8) {
            std::ostringstream os;
            os << "1 - (dt/2) Phi(t_i,t_i) = " << diag << " at node " << i << "; refine the grid";
            throw Error(ErrorKind::SingularStep, os.str());
        }
        y[i] = rhs / diag;
    }
    return y;
}

std::vector<double> delayed_generator(std::span<const double> y, const KernelSpec& spec,
                                      const DelayMeasure& measure, const TimeGrid& grid) {
    if (measure.horizon() != grid.horizon())
        throw Error(ErrorKind::HorizonMismatch, "delay measure and grid horizons differ");
    if (y.size() != grid.size()) throw Error(ErrorKind::GridMismatch, "profile length");
    const Kernel2D& G = spec.require_G("delayed generator");
    const auto parts = measure.decompose();
    const std::size_t n = grid.size();
    const double horizon = grid.horizon();
    std::vector<double> out(n, 0.0);

    parallel_for(n, [&](std::size_t i) {
        const double t = grid.node(i);
        const double lower = std::max(-horizon, -t);
        double total = 0.0;
        for (std::size_t j = i; j < n; ++j) {
            const double s = grid.node(j);
            double inner = 0.0;
            for (const auto& atom : parts.atoms)
                inner += atom.weight * G(t + atom.location, s + atom.location) *
                         interpolate(y, grid, s + atom.location);
            if (parts.uniform_weight > 0.0 && lower < 0.0) {
                const double du = -lower / static_cast<double>(kUniformNodes - 1);
                double acc = 0.0;
                for (std::size_t q = 0; q < kUniformNodes; ++q) {
                    const double u = lower + du * static_cast<double>(q);
                    const double w = (q == 0 || q + 1 == kUniformNodes) ? 0.5 : 1.0;
                    acc += w * G(t + u, s + u) * interpolate(y, grid, s + u);
                }
                inner += parts.uniform_weight / horizon * du * acc;
            }
            total += grid.tail_weight(i, j) * inner;
        }
        out[i] = total;
    });
    return out;
}

PicardResult solve_delayed_picard(const TerminalFamily& family, const KernelSpec& spec,
                                  const DelayMeasure& measure, const TimeGrid& grid, const PicardConfig& config) {
    if (!(config.tolerance > 0.0) || config.max_iterations < 1)
        throw Error(ErrorKind::Config, "Picard needs tolerance > 0 and at least one iteration");
    measure.require_valid();
    spec.check_bounds(grid);
    const std::vector<double> f = deterministic_profile(family, grid, "solve_delayed_picard");
    PicardResult result{f, 0, {}};
    for (std::size_t it = 1; it <= config.max_iterations; ++it) {
        std::vector<double> next = delayed_generator(result.y, spec, measure, grid);
        double diff = 0.0;
        for (std::size_t i = 0; i < next.size(); ++i) {
            next[i] += f[i];
            diff = std::max(diff, std::abs(next[i] - result.y[i]));
        }
        result.y = std::move(next);
        result.sup_diffs.push_back(diff);
        result.iterations = it;
        if (!std::isfinite(diff) || sup_abs(result.y) > config.divergence_guard) {
            std::ostringstream os;
            os << "iterate exceeded " << config.divergence_guard << " after " << it << " iterations";
            throw PicardFailure(ErrorKind::PicardDiverged, os.str(), result.sup_diffs);
        }
        if (diff < config.tolerance) return result;
    }
    std::ostringstream os;
    os << "no convergence to " << config.tolerance << " within " << config.max_iterations << " iterations";
    throw PicardFailure(ErrorKind::PicardStalled, os.str(), result.sup_diffs);
}

Residual residual_delayed(std::span<const double> y, const TerminalFamily& family, const KernelSpec& spec,
                          const DelayMeasure& measure, const TimeGrid& grid) {
    const std::vector<double> f = deterministic_profile(family, grid, "residual_delayed");
    const std::vector<double> gen = delayed_generator(y, spec, measure, grid);
    Residual r{std::vector<double>(grid.size()), 0.0};
    for (std::size_t i = 0; i < grid.size(); ++i) r.profile[i] = y[i] - f[i] - gen[i];
    r.sup = sup_abs(r.profile);
    return r;
}

Residual residual_reduced(std::span<const double> y, std::span<const double> fbar, const KernelTable& phi) {
    const TimeGrid& grid = phi.grid();
    const std::size_t n = grid.size();
    if (y.size() != n || fbar.size() != n) throw Error(ErrorKind::GridMismatch, "profile length");
    Residual r{std::vector<double>(n), 0.0};
    for (std::size_t i = 0; i < n; ++i) {
        double v = y[i] - fbar[i];
        for (std::size_t j = i; j < n; ++j) v -= grid.tail_weight(i, j) * phi(i, j) * y[j];
        r.profile[i] = v;
    }
    r.sup = sup_abs(r.profile);
    return r;
}

double lipschitz_constant(const KernelSpec& spec) {
    const double cg = spec.G ? spec.G->bound() : spec.declared_phi_bound();
    const double cz = spec.g.bound();
    return 2.0 * std::max(cg * cg, cz * cz);
}

namespace {

/// Ridge least squares on standardized monomials of one grid node.
class NodeRegression {
public:
    NodeRegression(std::span<const double> x, std::size_t dim, double ridge, double max_condition, std::size_t node)
        : x_(x), dim_(dim) {
        const std::size_t m = x.size();
        Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
        std::vector<double> b(dim);
        for (std::size_t p = 0; p < m; ++p) {
            basis(x[p], b);
            for (std::size_t r = 0; r < dim; ++r)
                for (std::size_t c = 0; c < dim; ++c) gram(r, c) += b[r] * b[c];
        }
        gram /= static_cast<double>(m);
        gram.diagonal().array() += ridge;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
        const double lo = eig.eigenvalues().minCoeff();
        const double hi = eig.eigenvalues().maxCoeff();
        if (!(lo > 0.0) || hi / lo > max_condition) {
            std::ostringstream os;
            os << "Gram matrix at node " << node << " has condition number " << hi / lo;
            throw Error(ErrorKind::RegressionIllConditioned, os.str());
        }
        solver_.compute(gram);
    }

    std::size_t dim() const noexcept { return dim_; }

    void basis(double x, std::vector<double>& b) const {
        double v = 1.0;
        for (std::size_t r = 0; r < dim_; ++r) {
            b[r] = v;
            v *= x;
        }
    }

    std::vector<double> fit(std::span<const double> target) const {
        const std::size_t m = x_.size();
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim_));
        for (std::size_t p = 0; p < m; ++p) {
            double v = target[p];
            for (std::size_t r = 0; r < dim_; ++r) {
                rhs(static_cast<Eigen::Index>(r)) += v;
                v *= x_[p];
            }
        }
        rhs /= static_cast<double>(m);
        const Eigen::VectorXd coef = solver_.solve(rhs);
        return std::vector<double>(coef.data(), coef.data() + coef.size());
    }

    double evaluate(std::span<const double> coef, std::size_t p) const {
        double r = 0.0;
        for (std::size_t k = coef.size(); k-- > 0;) r = r * x_[p] + coef[k];
        return r;
    }

private:
    std::span<const double> x_;
    std::size_t dim_;
    Eigen::LDLT<Eigen::MatrixXd> solver_;
};

struct LagWeight {
    std::size_t lag;
    double weight;
};

std::vector<LagWeight> grid_lags(const DelayMeasure& measure, const TimeGrid& grid) {
    const auto parts = measure.decompose();
    const double h = grid.step();
    std::map<std::size_t, double> lags;
    for (const auto& atom : parts.atoms) {
        const double pos = -atom.location / h;
        const double rounded = std::round(pos);
        if (std::abs(pos - rounded) * h > 1e-9 * grid.horizon()) {
            std::ostringstream os;
            os << "delay atom at " << atom.location << " does not sit on a grid lag";
            throw Error(ErrorKind::UnsupportedMeasure, os.str());
        }
        lags[static_cast<std::size_t>(rounded)] += atom.weight;
    }
    if (parts.uniform_weight > 0.0) {
        for (std::size_t l = 0; l < grid.size(); ++l) {
            const double w = (l == 0 || l == grid.intervals()) ? 0.5 * h : h;
            lags[l] += parts.uniform_weight * w / grid.horizon();
        }
    }
    std::vector<LagWeight> out;
    for (const auto& [l, w] : lags) out.push_back({l, w});
    return out;
}

}  // namespace

LsmcResult solve_delayed_lsmc(const TerminalFamily& family, const KernelSpec& spec, const DelayMeasure& measure,
                              const TimeGrid& grid, const PathEnsemble& ensemble, const LsmcConfig& config) {
    if (!family.is_stochastic())
        throw Error(ErrorKind::UnsupportedFamily, "solve_delayed_lsmc handles stochastic free terms");
    if (ensemble.law() != Law::P) throw Error(ErrorKind::Config, "solve_delayed_lsmc regresses under P");
    if (config.degree < 0 || config.degree > 4) throw Error(ErrorKind::Config, "regression degree must be in 0..4");
    require_same_grid(grid, ensemble.grid(), "solve_delayed_lsmc");
    measure.require_valid();
    spec.check_bounds(grid);
    const Kernel2D& G = spec.require_G("solve_delayed_lsmc");

    const std::size_t n = grid.size();
    const std::size_t last = grid.intervals();
    const std::size_t m = ensemble.paths();
    const double h = grid.step();
    const auto lags = grid_lags(measure, grid);

    // Node-major standardized states, increments and free terms.
    std::vector<double> xs(n * m), dws(last * m), fs(n * m);
    {
        ConditionalEngine engine(family, grid, ensemble.drift());
        parallel_for(m, [&](std::size_t p) {
            const PathView path = ensemble.path(p);
            std::vector<double> f(n);
            engine.terminal_values(path, f);
            for (std::size_t k = 0; k < n; ++k) {
                xs[k * m + p] = k == 0 ? 0.0 : path.W(k) / std::sqrt(grid.node(k));
                fs[k * m + p] = f[k];
                if (k < last) dws[k * m + p] = path.dW(k);
            }
        });
    }
    auto node_x = [&](std::size_t k) { return std::span<const double>(xs.data() + k * m, m); };

    std::vector<NodeRegression> reg;
    reg.reserve(n);
    for (std::size_t k = 0; k < n; ++k)
        reg.emplace_back(node_x(k), k == 0 ? 1 : static_cast<std::size_t>(config.degree) + 1, config.ridge,
                         config.max_condition, k);

    // Coefficients of Y(t_k) and Z(t_a, s_b) (b < N) in the node bases.
    std::vector<std::vector<double>> y_coef(n), z_coef(n * n);
    for (std::size_t k = 0; k < n; ++k) y_coef[k].assign(reg[k].dim(), 0.0);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a; b < last; ++b) z_coef[a * n + b].assign(reg[b].dim(), 0.0);

    // Generator coefficients per (i, j): lag l contributes w_ij * weight_l *
    // [G(t_i - l h, t_j - l h) Y(t_{j-l}) + g(t_j - l h) Z(t_{i-l}, t_{j-l})].
    struct Term {
        std::size_t j, lag;
        double cy, cz;
    };
    std::vector<std::vector<Term>> terms(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j)
            for (const auto& lw : lags) {
                if (lw.lag > i) continue;
                const double t = grid.node(i - lw.lag), s = grid.node(j - lw.lag);
                const double w = grid.tail_weight(i, j) * lw.weight;
                const double cy = w * G(t, s), cz = w * spec.g(s);
                if (cy != 0.0 || cz != 0.0) terms[i].push_back({j, lw.lag, cy, cz});
            }

    LsmcResult result{std::vector<double>(m * n), {}, ZSurface(grid), ZSurface(grid), 0, {}};
    std::vector<double> y_fit(n * m);
    std::vector<std::vector<double>> new_y(n), new_z(n * n);
    std::vector<double> z_mean(n * n, 0.0), z_se(n * n, 0.0);

    auto z_values = [&](std::size_t a, std::size_t b, std::vector<double>& out) {
        const std::size_t bb = std::min(b, last - 1);
        if (a > bb) {
            std::fill(out.begin(), out.end(), 0.0);
            return;
        }
        const auto& coef = z_coef[a * n + bb];
        for (std::size_t p = 0; p < m; ++p) out[p] = reg[bb].evaluate(coef, p);
    };

    for (std::size_t it = 1; it <= config.picard.max_iterations; ++it) {
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t p = 0; p < m; ++p) y_fit[k * m + p] = reg[k].evaluate(y_coef[k], p);

        parallel_for(n, [&](std::size_t i) {
            std::vector<double> x(fs.begin() + static_cast<std::ptrdiff_t>(i * m),
                                  fs.begin() + static_cast<std::ptrdiff_t>((i + 1) * m));
            std::vector<double> zbuf(m);
            for (const Term& term : terms[i]) {
                const std::size_t j = term.j - term.lag;
                if (term.cy != 0.0)
                    for (std::size_t p = 0; p < m; ++p) x[p] += term.cy * y_fit[j * m + p];
                if (term.cz != 0.0) {
                    z_values(i - term.lag, j, zbuf);
                    for (std::size_t p = 0; p < m; ++p) x[p] += term.cz * zbuf[p];
                }
            }
            new_y[i] = reg[i].fit(x);
            std::vector<double> target(m);
            for (std::size_t j = i; j < last; ++j) {
                const double* dw = dws.data() + j * m;
                double sum = 0.0;
                for (std::size_t p = 0; p < m; ++p) {
                    target[p] = x[p] * dw[p] / h;
                    sum += target[p];
                }
                new_z[i * n + j] = reg[j].fit(target);
                const double mean = sum / static_cast<double>(m);
                double ss = 0.0;
                for (std::size_t p = 0; p < m; ++p) ss += (target[p] - mean) * (target[p] - mean);
                z_mean[i * n + j] = mean;
                z_se[i * n + j] = m > 1 ? std::sqrt(ss / static_cast<double>(m - 1) / static_cast<double>(m)) : 0.0;
            }
        });

        double diff = 0.0, size = 0.0;
        auto absorb = [&](std::vector<double>& old, const std::vector<double>& fresh) {
            for (std::size_t r = 0; r < old.size(); ++r) {
                diff = std::max(diff, std::abs(fresh[r] - old[r]));
                size = std::max(size, std::abs(fresh[r]));
            }
            old = fresh;
        };
        for (std::size_t k = 0; k < n; ++k) absorb(y_coef[k], new_y[k]);
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = a; b < last; ++b) absorb(z_coef[a * n + b], new_z[a * n + b]);
        result.sup_diffs.push_back(diff);
        result.iterations = it;
        if (!std::isfinite(diff) || size > config.picard.divergence_guard) {
            std::ostringstream os;
            os << "regression coefficients exceeded " << config.picard.divergence_guard << " after " << it
               << " iterations";
            throw PicardFailure(ErrorKind::PicardDiverged, os.str(), result.sup_diffs);
        }
        if (diff < config.picard.tolerance) break;
        if (it == config.picard.max_iterations) {
            std::ostringstream os;
            os << "LSMC Picard did not reach " << config.picard.tolerance << " within " << it << " iterations";
            throw PicardFailure(ErrorKind::PicardStalled, os.str(), result.sup_diffs);
        }
    }

    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t p = 0; p < m; ++p) result.y[p * n + k] = reg[k].evaluate(y_coef[k], p);
    result.y_stats = node_statistics(ensemble, result.y);
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a; b < n; ++b) {
            const std::size_t bb = std::min(b, last - 1);
            if (a > bb) continue;
            result.z_mean.at(a, b) = z_mean[a * n + bb];
            result.z_se.at(a, b) = z_se[a * n + bb];
        }
    }
    return result;
}

NodeStatistics delayed_residual_paths(const TerminalFamily& family, const SolutionField& field, const ZSurface& z,
                                      const KernelSpec& spec, const DelayMeasure& measure,
                                      const PathEnsemble& ensemble) {
    const TimeGrid& grid = field.grid;
    if (!field.stochastic() || field.paths != ensemble.paths())
        throw Error(ErrorKind::GridMismatch, "pathwise residual needs the ensemble the field was solved on");
    const Kernel2D& G = spec.require_G("delayed_residual_paths");
    const auto lags = grid_lags(measure, grid);
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
            for (std::size_t j = i; j < n; ++j) {
                double inner = 0.0;
                for (const auto& lw : lags) {
                    if (lw.lag > i) continue;
                    const std::size_t a = i - lw.lag, b = j - lw.lag;
                    inner += lw.weight * (G(grid.node(a), grid.node(b)) * y[b] + spec.g(grid.node(b)) * z(a, b));
                }
                r -= grid.tail_weight(i, j) * inner;
            }
            for (std::size_t k = i; k + 1 < n; ++k) r += z(i, k) * path.dW(k);
            residual[p * n + i] = r;
        }
    });
    return node_statistics(ensemble, residual);
}

}  // namespace bsvie
