#pragma once

#include <functional>

namespace spotvol {

//! Dispatches unit(0..total-1) to a worker pool (threads = 0 picks the
//! hardware concurrency). Results must land in preallocated per-index slots;
//! reductions should run afterwards in a fixed order so outputs stay
//! independent of the worker count.
void parallel_units(int total, int threads,
                    const std::function<void(int)>& unit);

} // namespace spotvol
