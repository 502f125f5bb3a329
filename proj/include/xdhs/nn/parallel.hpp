#pragma once

#include <cstddef>
#include <functional>

namespace xdhs::nn {

// Worker cap from XDHS_THREADS, defaulting to the hardware concurrency.
std::size_t worker_count();

// Runs task(i) for i in [0, n). Tasks must write disjoint outputs; callers
// reduce partial results in index order so the result is independent of the
// number of workers.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& task);

} // namespace xdhs::nn
