#pragma once

#include <cstddef>
#include <functional>

namespace tilebench {

// Runs body(i) for i in [0, n) on up to `threads` workers. Work is handed out
// in fixed contiguous blocks, so any per-index output slot is written by a
// single worker and results never depend on completion order.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body);

}  // namespace tilebench
