#pragma once

#include <cstddef>
#include <functional>

namespace bsvie {

/// Caps the number of worker threads used by parallel_for (>= 1).
void set_worker_count(std::size_t workers);
std::size_t worker_count() noexcept;

/// Runs body(i) for i in [0, n) over contiguous blocks. Each index is
/// visited exactly once; callers write into preallocated slots so results
/// do not depend on the worker count. The first exception is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace bsvie
