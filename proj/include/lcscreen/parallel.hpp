#pragma once

#include <cstddef>
#include <functional>

namespace lcscreen {

// Runs fn(i) for i in [0, n) on up to `threads` workers. If any call throws,
// the exception of the lowest failing index is rethrown after all workers
// finish.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace lcscreen
