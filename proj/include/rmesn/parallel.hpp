#pragma once

#include <cstddef>
#include <functional>

namespace rmesn {

/// Number of worker threads used by the parallel stages. 0 selects the
/// hardware concurrency.
void set_num_threads(std::size_t threads);
std::size_t num_threads();

/// Runs body(i) for i in [0, count). Work is split into contiguous chunks,
/// so callers must only write to disjoint outputs per index. Nested calls
/// run serially on the calling thread. Exceptions are rethrown on the
/// caller (the one from the lowest failing chunk).
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace rmesn
