#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "smile/types.hpp"

namespace smile {

/// splitmix64 step; the workhorse behind all counter-based randomness.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hashKey(std::uint64_t seed, std::uint64_t a) {
  return splitmix64(splitmix64(seed) ^ a);
}

inline std::uint64_t hashKey(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return splitmix64(hashKey(seed, a) ^ splitmix64(b + 0x632BE59BD9B4E019ULL));
}

/// Uniform in (0,1), never exactly 0 or 1.
inline double uniformFromBits(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * (1.0 / 9007199254740992.0);
}

/// Complex Gaussian with E|z|^2 = 1 (std 1/sqrt(2) per component), computed
/// from the key alone. Order- and thread-independent by construction.
inline Cx gaussianAt(std::uint64_t key) {
  const std::uint64_t b1 = splitmix64(key);
  const std::uint64_t b2 = splitmix64(b1 ^ 0xD1B54A32D192ED03ULL);
  const double u1 = uniformFromBits(b1);
  const double u2 = uniformFromBits(b2);
  const double r = std::sqrt(-std::log(u1));  // includes the 1/sqrt(2) factor
  const double a = 6.283185307179586476925286766559 * u2;
  return {r * std::cos(a), r * std::sin(a)};
}

/// Sequential RNG for generators that draw a variable number of values
/// (phantoms, masks, GA). Seeded deterministically.
inline std::mt19937_64 sequentialRng(std::uint64_t seed) {
  return std::mt19937_64(splitmix64(seed ^ 0x8BADF00DULL));
}

}  // namespace smile
