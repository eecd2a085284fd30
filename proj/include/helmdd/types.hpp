#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace helmdd {

using Complex = std::complex<double>;
using ComplexVector = std::vector<Complex>;

/// Spatial point; unused trailing components are zero in 2D.
using Point = std::array<double, 3>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr Complex kI{0.0, 1.0};

/// Thrown for inputs that violate an operation's preconditions.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when an internal consistency check fails (mesh/spec mismatch etc).
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace helmdd
