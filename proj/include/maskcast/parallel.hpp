#pragma once

#include <cstdint>
#include <functional>

namespace maskcast {

/// Number of worker threads in the shared pool (MASKCAST_THREADS overrides).
int thread_count();

/// Runs fn(begin, end) over [0, n) in chunks across the shared pool and the
/// calling thread. Chunks own disjoint index ranges, so results never depend
/// on scheduling; blocks until every chunk finished.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)> &fn,
                  std::int64_t min_chunk = 1);

} // namespace maskcast
