#pragma once

#include <cstddef>
#include <functional>

namespace fundrv {

/// Calls body(i) for every i in [0, n) on up to `threads` workers
/// (0 = hardware concurrency). Iterations must write to disjoint slots;
/// the first exception thrown is rethrown after all workers stop.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body);

}  // namespace fundrv
