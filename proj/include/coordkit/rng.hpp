#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>

namespace coordkit {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives an independent stream key from a parent key and a list of labels.
constexpr std::uint64_t derive_seed(std::uint64_t key, std::uint64_t a) noexcept {
  return mix64(mix64(key) ^ (a * 0xd1b54a32d192ed03ULL + 0x8cb92ba72f3d8dd7ULL));
}
constexpr std::uint64_t derive_seed(std::uint64_t key, std::uint64_t a, std::uint64_t b) noexcept {
  return derive_seed(derive_seed(key, a), b);
}
constexpr std::uint64_t derive_seed(std::uint64_t key, std::uint64_t a, std::uint64_t b,
                                    std::uint64_t c) noexcept {
  return derive_seed(derive_seed(key, a, b), c);
}

/// Counter-based generator: output i is a pure function of (key, i), so any
/// stream can be reproduced without replaying its neighbours. Satisfies
/// UniformRandomBitGenerator. Sampling helpers below avoid the standard
/// distributions so results are identical across standard libraries.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit constexpr CounterRng(std::uint64_t key) noexcept : key_(key) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept {
    return mix64(key_ ^ mix64(counter_++ * 0x9e3779b97f4a7c15ULL));
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1].
  double uniform_open_zero() noexcept { return 1.0 - uniform(); }

  double exponential() noexcept { return -std::log(uniform_open_zero()); }

  /// Inverse-CDF draw from a finite distribution. Zero-mass cells are never
  /// returned.
  std::size_t categorical(std::span<const double> probs) noexcept {
    const double r = uniform();
    double acc = 0.0;
    std::size_t last = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (probs[i] <= 0.0) continue;
      acc += probs[i];
      last = i;
      if (r < acc) return i;
    }
    return last;
  }

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace coordkit
