// Copyright 2026 recip contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Deterministic random generation.
//
// All artifacts must be byte-identical across runs, platforms, and thread
// counts, so nothing here uses <random>: the standard distributions are
// implementation-defined. State is a single splitmix64 stream; every
// transform below is pinned by this file.

#include <cstdint>
#include <string_view>
#include <vector>

namespace recip {

std::uint64_t splitmix64(std::uint64_t& state) noexcept;

// FNV-1a, used to derive stable sub-stream ids from names.
std::uint64_t fnv1a64(std::string_view s) noexcept;

// Stream derivation: decorrelates (seed, stream) pairs.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next_u64() noexcept { return splitmix64(state_); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() noexcept;
  double uniform(double lo, double hi) noexcept;

  // Uniform integer on [0, n), n > 0; rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t n) noexcept;

  bool bernoulli(double p) noexcept { return uniform01() < p; }

  // Standard normal via Box-Muller (cosine branch; two uniforms per call).
  double normal() noexcept;
  double normal(double mean, double sd) noexcept { return mean + sd * normal(); }

  double exponential(double rate) noexcept;
  double lognormal(double mu, double sigma) noexcept;

  // Exponential-gap counting for small means, normal approximation above 256.
  std::uint64_t poisson(double mean) noexcept;

 private:
  std::uint64_t state_;
};

// Fisher-Yates with Rng::below.
template <class T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.below(i));
    using std::swap;
    swap(v[i - 1], v[j]);
  }
}

}  // namespace recip
