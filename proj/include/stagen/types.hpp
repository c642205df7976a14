#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace stagen {

using cplx = std::complex<double>;
using cvec = std::vector<cplx>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr cplx kI{0.0, 1.0};

// Linear frequency (Hz) to angular (rad/s) and back. All internal rates are angular.
inline constexpr double angular_from_hz(double hz) { return kTwoPi * hz; }
inline constexpr double hz_from_angular(double w) { return w / kTwoPi; }

/// Raised when an integration or factorization loses the accuracy it promises
/// (norm/trace drift, singular constraints, non-PSD input).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised for malformed or inconsistent experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace stagen
