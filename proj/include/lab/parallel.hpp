#pragma once

#include <cstddef>
#include <functional>

namespace lab {

/// --threads value if positive, else LAB_THREADS, else hardware concurrency.
int resolve_threads(int requested);

/// Calls fn(i) for i in [0, n) on up to `threads` workers. Work items are
/// claimed dynamically; callers write results into slot i so the outcome
/// never depends on scheduling. The first exception is rethrown.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace lab
