#pragma once

#include <cstdint>
#include <functional>

namespace easter {

// Worker budget for data-parallel loops. Reads EASTER_NUM_WORKERS once; falls
// back to the hardware concurrency when unset or unparsable.
int worker_count();

// Runs body over [0, n) in contiguous chunks, one per worker. The partition
// depends only on n and the worker budget, and chunks never overlap, so
// results are identical for any worker count as long as the body writes only
// to its own index range.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& body);

}  // namespace easter
