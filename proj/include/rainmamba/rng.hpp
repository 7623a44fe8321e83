#pragma once

#include <cstdint>
#include <random>

namespace rainmamba {

/// Seeded generator with a platform-independent stream.
///
/// Raw bits come from std::mt19937_64, whose output sequence is fixed by the
/// standard. The conversions to doubles and bounded integers are done here
/// rather than through <random> distributions, whose algorithms differ
/// between standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n);
  /// Uniform integer in [lo, hi] (inclusive).
  std::int64_t between(std::int64_t lo, std::int64_t hi);
  bool coin() { return (next_u64() >> 63) != 0; }

  /// Derives an independent child stream; used to give each parameter group
  /// its own generator so adding a group does not shift the others.
  Rng fork(std::uint64_t salt);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace rainmamba
