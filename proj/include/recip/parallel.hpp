// Copyright 2026 recip contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>

namespace recip {

// Process-wide worker cap for parallel_for. 0 or 1 runs everything inline.
void set_max_threads(int n) noexcept;
int max_threads() noexcept;

// Splits [0, n) into contiguous chunks and runs `body(begin, end)` on each.
// Chunk boundaries depend only on n, never on the thread count, so any
// result assembled per-chunk and merged in chunk order is identical for
// every thread count. Exceptions from workers are rethrown on the caller.
void parallel_for(std::size_t n, std::size_t min_chunk,
                  const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace recip
