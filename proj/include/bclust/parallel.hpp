#pragma once

#include <cstddef>
#include <functional>

namespace bclust {

// Worker threads are a performance hint only: every parallel site writes to
// disjoint output slots (or merges with an order-independent rule), so
// results are identical for any thread count, including 1.

int max_threads();
void set_max_threads(int n);

/// Runs fn(i) for i in [0, n). fn must only write state owned by index i.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

/// Runs fn(begin, end) over a static partition of [0, n).
void parallel_chunks(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace bclust
