#pragma once

#include <cstddef>
#include <vector>

#include "bsvie/error.hpp"

namespace bsvie {

/// Uniform grid t_i = i*T/N, i = 0..N, discretizing D_T = {0 <= t <= s <= T}.
class TimeGrid {
public:
    TimeGrid(double horizon, std::size_t intervals)
        : horizon_(horizon), intervals_(intervals) {
        if (!(horizon > 0.0)) throw Error(ErrorKind::Domain, "grid horizon must be positive");
        if (intervals < 2) throw Error(ErrorKind::Domain, "grid needs N >= 2");
    }

    double horizon() const noexcept { return horizon_; }
    std::size_t intervals() const noexcept { return intervals_; }
    std::size_t size() const noexcept { return intervals_ + 1; }
    double step() const noexcept { return horizon_ / static_cast<double>(intervals_); }

    double node(std::size_t i) const noexcept {
        return horizon_ * static_cast<double>(i) / static_cast<double>(intervals_);
    }

    /// t_j - T, computed from the integer gap so that lags hit atom locations
    /// such as -0.3 without accumulated rounding.
    double lag(std::size_t j) const noexcept {
        return -horizon_ * static_cast<double>(intervals_ - j) / static_cast<double>(intervals_);
    }

    /// Composite trapezoid weight of node j on [t_i, t_N].
    double tail_weight(std::size_t i, std::size_t j) const noexcept {
        if (i == intervals_) return 0.0;
        if (j == i || j == intervals_) return 0.5 * step();
        return step();
    }

    std::vector<double> nodes() const {
        std::vector<double> out(size());
        for (std::size_t i = 0; i < size(); ++i) out[i] = node(i);
        return out;
    }

    bool operator==(const TimeGrid& other) const noexcept {
        return horizon_ == other.horizon_ && intervals_ == other.intervals_;
    }

private:
    double horizon_;
    std::size_t intervals_;
};

inline void require_same_grid(const TimeGrid& a, const TimeGrid& b, const char* where) {
    if (!(a == b)) throw Error(ErrorKind::GridMismatch, where);
}

}  // namespace bsvie
