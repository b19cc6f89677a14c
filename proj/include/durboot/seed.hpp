#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace durboot {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// 64-bit FNV-1a of a label.
constexpr std::uint64_t fnv1a64(std::string_view label) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char ch : label) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// Sub-seed for stream `label`, replicate `index`, under master `seed`:
///   splitmix64(splitmix64(seed ^ fnv1a64(label)) + index)
/// This derivation is part of the output contract; changing it changes
/// every CSV the harness writes.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view label,
                                    std::uint64_t index = 0) noexcept {
  return splitmix64(splitmix64(seed ^ fnv1a64(label)) + index);
}

/// Uniform on the open interval (0, 1).
inline double open_uniform(Rng& rng) {
  // 53 random bits, shifted by half an ulp so neither endpoint is reachable.
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace durboot
