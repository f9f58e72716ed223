#pragma once

#include <cmath>
#include <cstdint>

namespace lfuw {

// Counter-based pseudo-random generation. Every draw is a pure function of
// (seed, counters...), so per-pixel parallel evaluation cannot change results
// and the same seed reproduces byte-identical output on any platform.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
  return splitmix64(h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
}

// Uniform double in [0, 1) from up to four counters.
inline double hash_uniform(std::uint64_t seed, std::uint64_t c0 = 0,
                           std::uint64_t c1 = 0, std::uint64_t c2 = 0,
                           std::uint64_t c3 = 0) {
  std::uint64_t h = splitmix64(seed);
  h = hash_combine(h, c0);
  h = hash_combine(h, c1);
  h = hash_combine(h, c2);
  h = hash_combine(h, c3);
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// Uniform double in [lo, hi).
inline double hash_uniform_in(double lo, double hi, std::uint64_t seed,
                              std::uint64_t c0 = 0, std::uint64_t c1 = 0,
                              std::uint64_t c2 = 0) {
  return lo + (hi - lo) * hash_uniform(seed, c0, c1, c2);
}

// Standard normal via Box-Muller on two counter-derived uniforms.
inline double hash_normal(std::uint64_t seed, std::uint64_t c0 = 0,
                          std::uint64_t c1 = 0, std::uint64_t c2 = 0,
                          std::uint64_t c3 = 0) {
  const double u1 = 1.0 - hash_uniform(seed, c0, c1, c2, 2 * c3);      // (0, 1]
  const double u2 = hash_uniform(seed, c0, c1, c2, 2 * c3 + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
}

}  // namespace lfuw
