#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

#include "cfmimo/types.hpp"

namespace cfmimo {

using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Stable seed for (master seed, key, index). Does not depend on anything
/// but its arguments, so it survives reordering of the campaign.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view key,
                                 std::uint64_t index) {
  return splitmix64(splitmix64(master ^ fnv1a64(key)) + index);
}

/// Independent sub-stream of a seed, tagged by small integers.
inline Rng make_stream(std::uint64_t seed,
                       std::initializer_list<std::uint64_t> tags) {
  std::uint64_t s = splitmix64(seed);
  for (auto t : tags) s = splitmix64(s ^ (t + 0x632be59bd9b4e019ULL));
  return Rng(s);
}

/// Circularly-symmetric complex Gaussian, unit variance.
inline cplx complex_gaussian(Rng& rng) {
  std::normal_distribution<double> n(0.0, std::sqrt(0.5));
  const double re = n(rng);
  const double im = n(rng);
  return {re, im};
}

/// Unit-power QPSK symbol.
inline cplx qpsk_symbol(Rng& rng) {
  constexpr double a = 0.70710678118654752440;
  const auto bits = rng();
  return {(bits & 1) ? a : -a, (bits & 2) ? a : -a};
}

}  // namespace cfmimo
