#pragma once

#include <cstddef>
#include <functional>

namespace hydrodp {

// Worker count for per-state sweeps. Defaults to the hardware concurrency,
// capped by the HYDRODP_THREADS environment variable when set.
int worker_count();

// Runs fn(begin, end) over [0, total) split into contiguous chunks, one per
// worker. Serial when total is small or only one worker is available.
// Chunks write disjoint outputs, so results do not depend on the thread count.
void parallel_for(std::size_t total, const std::function<void(std::size_t, std::size_t)>& fn);

} // namespace hydrodp
