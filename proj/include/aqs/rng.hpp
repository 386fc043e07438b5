#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace aqs {

// Distributions are hand-rolled from raw mt19937_64 draws; the engine output
// is pinned by the standard, so seeded runs reproduce bit-for-bit everywhere.

inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_range(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

// Box-Muller; draws two uniforms per call.
double gaussian(std::mt19937_64& rng);

// splitmix64 step, used to derive independent seed streams.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

// Seeded Fisher-Yates permutation of 0..n-1.
std::vector<std::size_t> shuffled_indices(std::size_t n, std::mt19937_64& rng);

}  // namespace aqs
