#pragma once

#include <tbb/blocked_range.h>
#include <tbb/parallel_for.h>

#include <cstddef>

namespace stochsplat {

/// Caps the worker pool for the rest of the process; n <= 0 restores the
/// default (all hardware threads).
void set_thread_limit(int n);
int thread_limit();

/// Runs body(i) for i in [0, n). Iterations must be independent.
template <typename Body>
void parallel_for(std::size_t n, const Body& body) {
  tbb::parallel_for(tbb::blocked_range<std::size_t>(0, n), [&](const tbb::blocked_range<std::size_t>& r) {
    for (std::size_t i = r.begin(); i != r.end(); ++i) body(i);
  });
}

}  // namespace stochsplat
