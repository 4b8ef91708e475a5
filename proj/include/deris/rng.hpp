#pragma once

#include <cstdint>
#include <string_view>

namespace deris {

/// SplitMix64 finalizer. Bijective on 64-bit words.
std::uint64_t mix64(std::uint64_t x);

/// Combine a key into a seed: mix64(seed ^ mix64(key + 0x9E3779B97F4A7C15)).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t key);

/// 64-bit FNV-1a over raw bytes.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t basis = 0xCBF29CE484222325ULL);

/// Deterministic SplitMix64 generator.
///
/// The stream is fully defined by integer arithmetic:
///   state += 0x9E3779B97F4A7C15
///   next   = mix64(state)
/// uniform() takes the top 53 bits of next() scaled by 2^-53, and below(n)
/// uses rejection on `next() < (2^64 - n) mod n` followed by `% n`. No
/// floating-point library calls are involved, so streams are identical on
/// every IEEE-754 platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), state_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next();
  /// Uniform in [0, 1).
  double uniform();
  /// Uniform in [lo, hi).
  double uniform(double lo, double hi);
  /// Uniform integer in [0, n). Requires n > 0.
  std::uint64_t below(std::uint64_t n);
  /// Uniform integer in [lo, hi] inclusive.
  std::int64_t between(std::int64_t lo, std::int64_t hi);
  bool bernoulli(double p);

  /// Independent generator keyed off this generator's seed (not its state).
  Rng child(std::uint64_t key) const { return Rng(derive_seed(seed_, key)); }

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
};

}  // namespace deris
