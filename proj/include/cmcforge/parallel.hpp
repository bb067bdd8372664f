#pragma once

#include <cstddef>
#include <functional>

namespace cmcforge {

// Global worker-count knob for sample/grid parallel loops. 0 = hardware
// concurrency. Set once at startup (CLI flag or CMCFORGE_THREADS); results
// never depend on it, only wall time does.
void set_thread_count(int n);
int thread_count();
int thread_count_from_env(); // CMCFORGE_THREADS, 0 if unset/invalid

// Runs fn(i) for i in [0, n). Work is distributed over threads; callers
// write into preallocated slot i so reductions stay in index order.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

} // namespace cmcforge
