#pragma once

#include <cstdint>
#include <limits>

namespace crrl {

/// Counter-based generator. Draw n of a stream is mix(key + n * gamma), so a
/// stream is fully described by its key and position, and independent streams
/// are obtained by hashing (seed, role, index) into fresh keys.
///
/// Satisfies UniformRandomBitGenerator and can drive <random> distributions.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t key = 0) noexcept : key_(key) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept { return mix(key_ + (++counter_) * kGamma); }

  /// Child stream keyed by (this key, role, index). Does not advance this stream.
  Rng derive(std::uint64_t role, std::uint64_t index = 0) const noexcept;

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n) noexcept;
  bool bernoulli(double p) noexcept { return uniform() < p; }

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t position() const noexcept { return counter_; }

  static std::uint64_t mix(std::uint64_t z) noexcept;

 private:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Roles used to key the per-run streams.
enum class StreamRole : std::uint64_t {
  environment = 1,
  adversary = 2,
  estall = 3,
  scheduler = 4,
  learner = 5,
};

/// Root stream of a run: every consumer derives from make_stream(seed, role, index).
Rng make_stream(std::uint64_t seed, StreamRole role, std::uint64_t index = 0) noexcept;

}  // namespace crrl
