#pragma once

#include <cstddef>
#include <functional>

namespace subgauss {

// Worker count used by parallel_for. Initialised from SUBGAUSS_THREADS when
// set, otherwise std::thread::hardware_concurrency(). Affects speed only:
// every parallel loop in the library writes into pre-sized slots and reduces
// serially, so results do not depend on this value.
std::size_t thread_count();
void set_thread_count(std::size_t threads);

// Runs body(i) for i in [0, count). Tasks are claimed dynamically; the first
// exception thrown by any task is rethrown on the calling thread.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace subgauss
