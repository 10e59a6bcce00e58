// Copyright (c) 2026 The hmr Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef HMR_PARALLEL_HPP
#define HMR_PARALLEL_HPP

#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace hmr {

// Runs f(i) for i in [0,n). Work items must be independent; results should
// be written to preallocated slots so the output is order-independent.
inline void parallel_for(int n, int threads,
                         const std::function<void(int)> &f) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i)
      f(i);
    return;
  }
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n)
        return;
      f(i);
    }
  };
  std::vector<std::thread> pool;
  const int nt = std::min(threads, n);
  pool.reserve(nt);
  for (int t = 0; t < nt; ++t)
    pool.emplace_back(worker);
  for (auto &th : pool)
    th.join();
}

} // namespace hmr

#endif // HMR_PARALLEL_HPP
