#pragma once

#include <cstddef>
#include <functional>

namespace rcwave {

/// Worker count: RCWAVE_THREADS when set and positive, otherwise the
/// hardware concurrency (at least 1).
int thread_count();

/// Runs fn(i) for i in [0, n) on up to `threads` workers with a static
/// contiguous partition. threads <= 1 runs inline. The first exception
/// thrown by any worker is rethrown after all workers join.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace rcwave
