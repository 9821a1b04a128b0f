// Copyright 2026 recip contributors
// SPDX-License-Identifier: Apache-2.0
#include "recip/rng.hpp"

#include <cmath>

namespace recip {

std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a64(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  std::uint64_t s = seed ^ (0x9e3779b97f4a7c15ULL + (stream << 6) + (stream >> 2));
  // Two warm-up rounds so nearby (seed, stream) pairs diverge.
  splitmix64(s);
  return splitmix64(s);
}

double Rng::uniform01() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) noexcept {
  return lo + (hi - lo) * uniform01();
}

std::uint64_t Rng::below(std::uint64_t n) noexcept {
  if (n <= 1) return 0;
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  for (;;) {
    const std::uint64_t v = next_u64();
    if (v < limit) return v % n;
  }
}

double Rng::normal() noexcept {
  // Box-Muller; u clamped away from 0 so log() stays finite.
  double u = uniform01();
  if (u < 0x1.0p-60) u = 0x1.0p-60;
  const double v = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u));
  return r * std::cos(6.283185307179586476925286766559 * v);
}

double Rng::exponential(double rate) noexcept {
  double u = uniform01();
  if (u < 0x1.0p-60) u = 0x1.0p-60;
  return -std::log(u) / rate;
}

double Rng::lognormal(double mu, double sigma) noexcept {
  return std::exp(mu + sigma * normal());
}

std::uint64_t Rng::poisson(double mean) noexcept {
  if (!(mean > 0.0)) return 0;
  if (mean <= 256.0) {
    // Count exponential gaps within a unit budget.
    std::uint64_t k = 0;
    double budget = mean;
    for (;;) {
      budget -= exponential(1.0);
      if (budget < 0.0) return k;
      ++k;
    }
  }
  const double z = normal();
  const double v = mean + std::sqrt(mean) * z;
  return v <= 0.0 ? 0 : static_cast<std::uint64_t>(v + 0.5);
}

}  // namespace recip
