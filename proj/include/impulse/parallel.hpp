#pragma once

#include <cstddef>
#include <functional>

namespace impulse {

/// Worker count: `requested` if positive, else $IMPULSE_THREADS, else 1.
int resolve_threads(int requested);

/// Runs body(i) for i in [0, n) on up to `threads` workers with static striding.
/// Results must be written to per-index slots, so output never depends on scheduling.
/// The exception of the lowest failing index is rethrown.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body);

}  // namespace impulse
