#pragma once

#include <cmath>
#include <complex>
#include <concepts>

#include "lrsmooth/errors.hpp"

namespace lrsmooth {

inline constexpr double kComplexStep = 1e-20;

/// Derivative of a real-analytic f at x as Im(f(x + ih)) / h.
///
/// f must accept std::complex<double>; a callable that only accepts double is
/// rejected at compile time, and one returning a non-finite imaginary part is
/// rejected at run time.
template <class F>
  requires std::invocable<F &, std::complex<double>>
double complex_step(F &&f, double x, double h = kComplexStep) {
  if (!(h > 0)) throw ArgumentError("complex_step: h must be positive");
  std::complex<double> const fx = f(std::complex<double>{x, h});
  double const d = fx.imag() / h;
  if (!std::isfinite(d)) throw NumericalError("complex_step: function is not evaluable in complex arithmetic at x");
  return d;
}

} // namespace lrsmooth
