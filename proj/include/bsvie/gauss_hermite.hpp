#pragma once

#include <cstddef>
#include <vector>

namespace bsvie {

/// Gauss-Hermite rule rescaled to the standard normal law:
/// E[f(Z)] ~= sum_k weight[k] * f(node[k]).
class GaussHermite {
public:
    explicit GaussHermite(std::size_t points = 64);

    std::size_t size() const noexcept { return nodes_.size(); }
    const std::vector<double>& nodes() const noexcept { return nodes_; }
    const std::vector<double>& weights() const noexcept { return weights_; }

    template <class F>
    double expectation(F&& f) const {
        double sum = 0.0;
        for (std::size_t k = 0; k < nodes_.size(); ++k) sum += weights_[k] * f(nodes_[k]);
        return sum;
    }

private:
    std::vector<double> nodes_;
    std::vector<double> weights_;
};

}  // namespace bsvie
