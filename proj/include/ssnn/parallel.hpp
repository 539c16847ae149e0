#ifndef SSNN_PARALLEL_HPP
#define SSNN_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace ssnn {

// Worker count: SSNN_THREADS env var > programmatic override > hardware.
int thread_count();
void set_thread_count(int n); // 0 = automatic

// Runs fn(i) for i in [0, n). Callers that accumulate floating-point results
// must write into per-index slots and reduce in index order afterwards; that
// keeps output bytes independent of the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

} // namespace ssnn

#endif
