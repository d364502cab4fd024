#pragma once

#include <cstdint>
#include <random>

namespace lrsmooth {

/// Seeded pseudo-random source.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard for a given seed. Distributions are implemented here rather than
/// with <random> distributions, whose algorithms are implementation-defined:
///   uniform01: top 53 bits of one engine draw scaled by 2^-53, in [0, 1).
///   gaussian:  Box-Muller on two uniform01 draws, returning the cosine branch
///              only (no cached second variate), so every call consumes
///              exactly two engine outputs.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_{seed}, engine_{seed} {}

  std::uint64_t seed() const { return seed_; }

  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi);
  double gaussian(double mean, double std);

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

} // namespace lrsmooth
