#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace fimest {

/// Seedable, splittable pseudo-random stream.
///
/// Every randomized operation takes its stream explicitly; streams are never
/// shared between concurrent consumers. Independent sub-streams come either
/// from `split()` (advances the parent) or from `derive()` (a pure function of
/// a seed and a path of integer keys, which is what makes common-random-number
/// pairing across estimator variants possible).
class Rng {
 public:
  using engine_type = std::mt19937_64;

  explicit Rng(std::uint64_t seed);

  static Rng derive(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

  Rng split();

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1).
  double uniform();
  double uniform(double lo, double hi);
  double normal();
  /// Fair coin.
  bool coin() { return (engine_() >> 63) != 0; }

  engine_type& engine() { return engine_; }

 private:
  engine_type engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// SplitMix64 finalizer; used to decorrelate seeds and path keys.
std::uint64_t mix64(std::uint64_t x);

/// Stable 64-bit key for a label (FNV-1a), for use in Rng::derive paths.
std::uint64_t label_key(std::string_view label);

}  // namespace fimest
