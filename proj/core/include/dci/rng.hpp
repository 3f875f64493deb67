#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <string_view>
#include <vector>

// Deterministic randomness helpers.
//
// Golden-trace tests require that every random draw in this project is
// reproducible bit-for-bit across compilers and standard libraries.
// std::mt19937_64 has a fully specified output sequence, but the standard
// distributions (<random>'s uniform_int/uniform_real, std::shuffle) do not,
// so the mappings from engine output to values live here instead.

namespace dci::rng {

inline constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

/// 64-bit FNV-1a over a byte string.
inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = kFnvOffset) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

/// FNV-1a over the 8 little-endian bytes of an integer.
inline std::uint64_t fnv1a_u64(std::uint64_t v, std::uint64_t h = kFnvOffset) {
  for (int i = 0; i < 8; ++i) {
    h ^= static_cast<unsigned char>(v >> (8 * i));
    h *= kFnvPrime;
  }
  return h;
}

inline std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  return fnv1a_u64(b, fnv1a_u64(a));
}

inline std::uint64_t mix(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return fnv1a_u64(c, mix(a, b));
}

/// Uniform double in [0, 1) from the top 53 bits of one engine draw.
inline double uniform01(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

/// Unbiased integer in [0, n) via rejection sampling. n must be > 0.
inline std::uint64_t bounded(std::mt19937_64& gen, std::uint64_t n) {
  constexpr std::uint64_t kMax = std::numeric_limits<std::uint64_t>::max();
  const std::uint64_t rem = (kMax % n + 1) % n;  // 2^64 mod n
  if (rem == 0) {
    return gen() % n;
  }
  const std::uint64_t last_ok = kMax - rem;
  for (;;) {
    const std::uint64_t x = gen();
    if (x <= last_ok) {
      return x % n;
    }
  }
}

/// Fisher-Yates shuffle with the bounded() mapping above.
template <typename T>
void shuffle(std::vector<T>& values, std::mt19937_64& gen) {
  for (std::size_t i = values.size(); i > 1; --i) {
    std::swap(values[i - 1], values[bounded(gen, i)]);
  }
}

}  // namespace dci::rng
