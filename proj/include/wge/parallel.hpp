#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace wge {

// Runs fn(i) for i in [0, n) on up to `workers` threads. Work items must be
// independent; callers that need randomness derive a per-index seed with
// mix_seed so the result is identical for every worker count.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  if (n == 0) return;
  const std::size_t nw =
      std::min<std::size_t>(std::max(workers, 1), n);
  if (nw <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(nw);
  for (std::size_t t = 0; t < nw; ++t) {
    pool.emplace_back([t, n, nw, &fn] {
      for (std::size_t i = t; i < n; i += nw) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

inline int default_workers() {
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

}  // namespace wge
