#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace overid {

/// Worker count: OVERID_THREADS if set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
unsigned default_threads();

/// Runs body(i) for i in [0, count) on up to `threads` workers (0 = default).
/// Indices are handed out dynamically; callers store results by index so the
/// outcome does not depend on scheduling. The first exception is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body,
                  unsigned threads = 0);

/// Fixed-shape pairwise summation: the tree depends only on the length.
double pairwise_sum(std::span<const double> values);

}  // namespace overid
