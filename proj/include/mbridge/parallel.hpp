#ifndef MBRIDGE_PARALLEL_HPP
#define MBRIDGE_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace mbridge {

/// Worker cap: MBRIDGE_THREADS when set (min 1), else hardware
/// concurrency capped at 8.
unsigned worker_count();

/// Runs fn(i) for i in [0, n). Bodies must write to disjoint slots; the
/// chunked schedule keeps results identical for any worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace mbridge

#endif  // MBRIDGE_PARALLEL_HPP
