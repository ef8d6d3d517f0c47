/**
 * @file random.hpp
 * @brief Counter-based seed derivation for reproducible parallel streams.
 *
 * Every independent stream (a scan point, a chunk of slots, a bootstrap
 * resample) gets its own engine seeded from the master seed and the stream's
 * coordinates. Results therefore do not depend on how work is split across
 * threads.
 */
#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace homdip {

inline constexpr const char* kSeedScheme = "splitmix64-counter/v1";

using RandomEngine = std::mt19937_64;

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Mixes the master seed with a list of stream coordinates.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> coords) {
  std::uint64_t h = splitmix64(master);
  for (std::uint64_t c : coords) h = splitmix64(h ^ splitmix64(c + 0x632be59bd9b4e019ULL));
  return h;
}

inline RandomEngine make_engine(std::uint64_t master, std::initializer_list<std::uint64_t> coords) {
  return RandomEngine(derive_seed(master, coords));
}

/// Uniform double in [0, 1).
inline double uniform01(RandomEngine& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Poisson(mean) conditioned on a result >= 1, by CDF inversion.
inline std::uint64_t zero_truncated_poisson(RandomEngine& rng, double mean) {
  const double u = uniform01(rng);
  double p = mean / std::expm1(mean); // P(k=1 | k>=1)
  double cum = p;
  std::uint64_t k = 1;
  while (u >= cum && p > 0.0) {
    ++k;
    p *= mean / static_cast<double>(k);
    cum += p;
  }
  return k;
}

} // namespace homdip
