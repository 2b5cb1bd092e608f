#pragma once

#include <cstddef>
#include <functional>

namespace fcb {

/// Worker count from FCB_WORKERS, else hardware concurrency (at least 1).
int worker_count();

/// Run body(i) for i in [0, n). Each index is processed exactly once; callers
/// write results into preallocated slots so the outcome is independent of scheduling.
/// The first exception thrown by any body is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, int workers = 0);

}  // namespace fcb
