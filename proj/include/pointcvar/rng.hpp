#pragma once

#include <cstdint>
#include <random>

#include "pointcvar/core.hpp"

namespace pcvar {

/// Seeded random stream.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. The real-valued transforms below are written out by hand rather
/// than taken from <random> distributions, whose algorithms are unspecified,
/// so a seed reproduces the same values on every standard library.
class Rng {
 public:
  static constexpr const char* kAlgorithm = "mt19937_64";

  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t n);

  /// Standard normal via Box-Muller (one value per call, no caching).
  double normal();

  /// Uniform direction on the unit sphere.
  Point3 unit_vector();

  /// Uniform in the closed ball of the given radius around the origin.
  Point3 in_ball(double radius);

  /// Independent child stream; deterministic in the parent state.
  Rng split() { return Rng(engine_()); }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace pcvar
