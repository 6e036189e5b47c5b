#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace tucker {

/// Number of worker threads used by the sparse kernels. Read once from
/// TUCKER_THREADS (default: hardware concurrency); set_thread_count overrides.
unsigned thread_count();
void set_thread_count(unsigned n);

namespace detail {

inline constexpr std::size_t kParallelGrain = 1 << 14;

/// Runs body(begin, end) over [0, n) in fixed-size blocks. Each block writes
/// only its own outputs, so results do not depend on the thread count.
template <class Body> void parallel_blocks(std::size_t n, Body &&body) {
  const std::size_t blocks = (n + kParallelGrain - 1) / kParallelGrain;
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(thread_count(), blocks));
  if (workers <= 1) {
    if (n > 0) body(std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t b = w; b < blocks; b += workers) {
        const std::size_t lo = b * kParallelGrain;
        body(lo, std::min(n, lo + kParallelGrain));
      }
    });
  }
  for (auto &t : pool) t.join();
}

} // namespace detail
} // namespace tucker
