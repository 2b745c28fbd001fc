#pragma once

#include <cstdint>
#include <functional>

namespace frag {

// Run fn(i) for i in [0, n) on `threads` workers (0 means hardware
// concurrency). Work items must be independent; callers write results into
// per-index slots, which keeps outputs identical for any thread count. The
// first exception thrown by a worker is rethrown after all workers join.
void parallel_for(std::uint64_t n, int threads, const std::function<void(std::uint64_t)>& fn);

}  // namespace frag
