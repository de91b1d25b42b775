#pragma once

// Portable seeded randomness. std::mt19937_64 output is fixed by the
// standard, but the std distributions are not, so bounded draws are done here.

#include <cstdint>
#include <random>
#include <string_view>

namespace taxoforge::rng {

inline constexpr std::uint64_t fnv1a64(std::string_view s,
                                       std::uint64_t h = 0xcbf29ce484222325ULL) noexcept {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Mixes a base seed with a string key, e.g. a table id.
inline constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view key) noexcept {
  std::uint64_t s = seed ^ fnv1a64(key);
  return splitmix64(s);
}

// Uniform integer in [0, bound) by rejection; bound > 0.
template <typename Engine>
std::uint64_t uniform_below(Engine& eng, std::uint64_t bound) {
  static_assert(Engine::min() == 0 && Engine::max() == ~std::uint64_t{0},
                "needs a full-range 64-bit engine");
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
  std::uint64_t x;
  do {
    x = eng();
  } while (x >= limit);
  return x % bound;
}

// Exact double in [0, 1) from the top 53 bits.
inline constexpr double unit_double(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace taxoforge::rng
