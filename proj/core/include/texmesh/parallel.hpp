#pragma once

#include <cstddef>
#include <functional>

namespace texmesh {

// Runs fn over [0,n) split into contiguous chunks, one per worker thread.
// threads <= 1 executes inline. fn receives [begin, end) index ranges.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace texmesh
