#pragma once

#include <cstdint>
#include <random>

namespace ccn {

/// splitmix64 step; used to derive independent per-seed substreams from one
/// base seed in counter mode, so experiment seeds are reproducible and
/// order-independent.
[[nodiscard]] constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Substream seed number `index` of the stream rooted at `base`.
[[nodiscard]] constexpr std::uint64_t substream(std::uint64_t base,
                                                std::uint64_t index) {
  return splitmix64(base ^ splitmix64(index + 0x243F6A8885A308D3ull));
}

/// Deterministic engine for a given substream seed.
[[nodiscard]] inline std::mt19937_64 make_rng(std::uint64_t seed) {
  return std::mt19937_64(splitmix64(seed));
}

[[nodiscard]] inline double uniform(std::mt19937_64& rng, double lo,
                                    double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace ccn
