#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace ascf {

/// SplitMix64 finalizer. Used as the seed mixing function everywhere a child
/// seed is derived, so derived streams are identical across platforms.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// derive_seed(s, a, b, ...) = mix(mix(s, a), b) ... with
/// mix(s, i) = splitmix64(s ^ splitmix64(i)).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

template <typename... Streams>
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t first, Streams... rest) noexcept {
  if constexpr (sizeof...(rest) == 0) {
    return derive_seed(seed, first);
  } else {
    return derive_seed(derive_seed(seed, first), static_cast<std::uint64_t>(rest)...);
  }
}

/// Seeded generator. The standard distributions are implementation-defined,
/// so bounded integers and unit reals are drawn here directly from the
/// mt19937_64 output, which the standard does pin down.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, n). n must be positive.
  std::size_t uniform_index(std::size_t n);

  /// Uniform real in [0, 1) with 53 random bits.
  double uniform01();

  template <typename T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::size_t j = uniform_index(i);
      using std::swap;
      swap(values[i - 1], values[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ascf
