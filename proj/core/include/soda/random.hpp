#pragma once

#include <cstdint>

namespace soda {

/// Counter-based SplitMix64 generator.
///
/// Output i of the stream keyed by `key` is
///   mix64(key + (i + 1) * 0x9E3779B97F4A7C15)
/// where mix64 is the SplitMix64 finalizer. Values depend only on (key, i),
/// never on call order or platform, so any draw can be addressed directly.
/// Independent sub-streams come from split(), which hashes the parent key
/// together with a stream id.
class CounterRng {
 public:
  explicit constexpr CounterRng(std::uint64_t key) noexcept : key_(key) {}

  static constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  constexpr std::uint64_t key() const noexcept { return key_; }

  constexpr std::uint64_t bits(std::uint64_t counter) const noexcept {
    return mix64(key_ + (counter + 1) * kGolden);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  constexpr double uniform(std::uint64_t counter) const noexcept {
    return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
  }

  constexpr CounterRng split(std::uint64_t stream) const noexcept {
    return CounterRng(mix64(key_ ^ mix64(stream + kGolden)));
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
  std::uint64_t key_;
};

/// Sequential view over a CounterRng: draw i reads counter i.
class RngStream {
 public:
  explicit RngStream(CounterRng rng) noexcept : rng_(rng) {}
  explicit RngStream(std::uint64_t key) noexcept : rng_(key) {}

  std::uint64_t next_bits() noexcept { return rng_.bits(counter_++); }
  double uniform() noexcept { return rng_.uniform(counter_++); }
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n) by rejection; n must be positive.
  std::uint64_t below(std::uint64_t n) noexcept;

  /// Standard normal draw (Box-Muller, one value per two uniforms).
  double normal() noexcept;

  bool bernoulli(double p) noexcept { return uniform() < p; }

  std::uint64_t position() const noexcept { return counter_; }

 private:
  CounterRng rng_;
  std::uint64_t counter_ = 0;
};

}  // namespace soda
