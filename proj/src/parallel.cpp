// Copyright 2026 recip contributors
// SPDX-License-Identifier: Apache-2.0
#include "recip/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace recip {

namespace {
std::atomic<int> g_max_threads{1};
}

void set_max_threads(int n) noexcept {
  g_max_threads.store(n < 1 ? 1 : n, std::memory_order_relaxed);
}

int max_threads() noexcept { return g_max_threads.load(std::memory_order_relaxed); }

void parallel_for(std::size_t n, std::size_t min_chunk,
                  const std::function<void(std::size_t, std::size_t)>& body) {
  if (n == 0) return;
  if (min_chunk == 0) min_chunk = 1;

  // Chunking is a pure function of n so results cannot depend on threads.
  const std::size_t n_chunks = std::max<std::size_t>(1, (n + min_chunk - 1) / min_chunk);
  const int workers = std::min<int>(max_threads(), static_cast<int>(n_chunks));

  if (workers <= 1) {
    for (std::size_t c = 0; c < n_chunks; ++c) {
      const std::size_t beg = c * min_chunk;
      const std::size_t end = std::min(n, beg + min_chunk);
      if (beg < end) body(beg, end);
    }
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  auto run = [&] {
    for (;;) {
      const std::size_t c = next.fetch_add(1, std::memory_order_relaxed);
      if (c >= n_chunks || failed.load(std::memory_order_relaxed)) return;
      const std::size_t beg = c * min_chunk;
      const std::size_t end = std::min(n, beg + min_chunk);
      if (beg >= end) continue;
      try {
        body(beg, end);
      } catch (...) {
        if (!failed.exchange(true)) first_error = std::current_exception();
        return;
      }
    }
  };
  for (int i = 0; i < workers; ++i) pool.emplace_back(run);
  for (auto& t : pool) t.join();
  if (failed.load()) std::rethrow_exception(first_error);
}

}  // namespace recip
