#pragma once

#include <stdexcept>
#include <string>

namespace lrsmooth {

/// Shapes of two operands do not agree.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// An argument is outside its documented domain.
struct ArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A factorization or iteration broke down.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed input file or configuration.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

} // namespace lrsmooth
