#pragma once

#include <cstddef>
#include <functional>

namespace asepkpz {

// Worker count: explicit value if > 0, else ASEPKPZ_THREADS, else 1.
int resolve_threads(int requested);

// Calls body(i) for i in [0, n) on `threads` workers. Results must be written by index;
// the first exception thrown by any task is rethrown after all workers stop.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body);

}  // namespace asepkpz
