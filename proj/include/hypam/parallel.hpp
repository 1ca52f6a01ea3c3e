#pragma once

#include <cstddef>
#include <functional>

namespace hypam {

// Worker count used by the Monte Carlo drivers; 0 means hardware_concurrency.
void set_threads(unsigned n);
unsigned threads();

// Runs fn(i) for i in [0, n) on the worker pool. Work is split into contiguous
// blocks; results must only depend on i, never on the worker.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace hypam
