#pragma once

#include <functional>

namespace cosma {

// Worker count: COSMA_THREADS when set to a positive integer, otherwise the
// hardware concurrency (at least 1).
int worker_count();

// Runs body(i) for i in [0, n) over contiguous chunks. Callers write results
// into per-index slots so outcomes do not depend on the thread count.
void parallel_for(int n, const std::function<void(int)>& body);

}  // namespace cosma
