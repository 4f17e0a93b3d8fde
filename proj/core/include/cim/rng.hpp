#pragma once

#include <cstdint>

namespace cim {

/// SplitMix64 finalizer. Used as a counter-based generator: the output for a
/// given (key, counter) pair is a pure function of its inputs, so draws do not
/// depend on evaluation order, thread count or platform.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Counter-based draw: the `counter`-th 64-bit word of stream `key`.
constexpr std::uint64_t counter_draw(std::uint64_t key, std::uint64_t counter) noexcept {
  return splitmix64(splitmix64(key) ^ (counter * 0xD1B54A32D192ED03ULL));
}

/// Child seed for sub-task `index` of a run seeded with `seed` (trajectory,
/// grid point, ...).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return counter_draw(seed ^ 0x5EED5EED5EED5EEDULL, index);
}

}  // namespace cim
