#pragma once

#include <cstddef>
#include <functional>

namespace mopt {

// Worker count: THREADS environment variable if set, else hardware threads.
std::size_t worker_count();

// Runs fn(i) for i in [0, n). Units must be independent; results should be
// written to disjoint, preindexed slots so the outcome is identical for any
// worker count. Nested calls run serially inside the outer parallel region.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace mopt
