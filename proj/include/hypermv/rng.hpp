#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace hypermv::rng {

// mt19937_64 output is pinned by the standard; the transforms below avoid
// std::uniform_*_distribution, whose mapping is implementation-defined.
// Everything that must reproduce bit-identically across builds goes through
// these helpers.

inline double uniform01(std::mt19937_64& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;  // [0,1)
}

inline double uniform(std::mt19937_64& g, double lo, double hi) {
  return lo + (hi - lo) * uniform01(g);
}

inline int uniform_int(std::mt19937_64& g, int n) {
  return static_cast<int>(g() % static_cast<std::uint64_t>(n));  // n > 0, small
}

// splitmix64 finalizer, used to derive independent seeds.
inline std::uint64_t mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

template <typename T>
void shuffle(std::vector<T>& v, std::mt19937_64& g) {
  // Fisher-Yates; std::shuffle's draw sequence is implementation-defined.
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = g() % i;
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace hypermv::rng
