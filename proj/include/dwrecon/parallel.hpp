#pragma once

#include <cstddef>
#include <functional>

namespace dw {

/// Worker count: min(hardware_concurrency, DWRECON_THREADS if set).
std::size_t worker_count();

/// Runs fn(i) for i in [0, n). Work is split into disjoint contiguous index
/// ranges, so writes to disjoint outputs stay race-free and results do not
/// depend on the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace dw
