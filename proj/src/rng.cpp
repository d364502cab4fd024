#include "lrsmooth/numerics/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "lrsmooth/errors.hpp"

namespace lrsmooth {

double Rng::uniform(double lo, double hi) {
  if (!(lo < hi)) throw ArgumentError("Rng::uniform requires lo < hi");
  return lo + (hi - lo) * uniform01();
}

double Rng::gaussian(double mean, double std) {
  if (std < 0) throw ArgumentError("Rng::gaussian requires std >= 0");
  // 1 - u keeps the log argument in (0, 1].
  double const u1 = 1.0 - uniform01();
  double const u2 = uniform01();
  if (std == 0) return mean;
  double const z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  return mean + std * z;
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw ArgumentError("Rng::below requires n > 0");
  // Rejection sampling removes modulo bias.
  std::uint64_t const limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

} // namespace lrsmooth
