#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace tilebench {

// FNV-1a; stable across platforms and standard libraries, unlike std::hash.
constexpr std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  return splitmix64(seed ^ splitmix64(salt));
}

constexpr std::uint64_t mix_seed(std::uint64_t seed, std::string_view salt) {
  return mix_seed(seed, fnv1a64(salt));
}

using Rng = std::mt19937_64;

// Uniform double in [0, 1) with 53 random bits; std::uniform_real_distribution
// output is implementation-defined, this is not.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Uniform integer in [0, n) by rejection; independent of the standard library.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t r;
  do {
    r = rng();
  } while (r >= limit);
  return r % n;
}

// Box-Muller on uniform01.
double standard_normal(Rng& rng);

}  // namespace tilebench
