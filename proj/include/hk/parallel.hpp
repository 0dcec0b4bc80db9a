#pragma once

#include <cstddef>
#include <functional>

namespace hk {

/// Runs body(begin, end) over contiguous chunks of [0, count) on `workers`
/// threads. Chunks never overlap, so writes to per-index slots are race free
/// and results do not depend on the worker count.
void parallel_for(std::size_t count, int workers,
                  const std::function<void(std::size_t, std::size_t)>& body);

/// Worker count used when a caller passes 0.
int default_workers();

}  // namespace hk
