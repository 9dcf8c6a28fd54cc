#pragma once

#include <cmath>
#include <numbers>

namespace ppmp {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Wraps an angle into (-pi, pi]. -pi maps to +pi.
inline double wrap_angle(double radians) {
  double r = std::remainder(radians, kTwoPi);
  if (r <= -kPi) r += kTwoPi;
  return r;
}

// Signed shortest difference a - b on the circle, in (-pi, pi].
inline double wrap_difference(double a, double b) { return wrap_angle(a - b); }

// Unsigned distance on the circle for angles already wrapped into (-pi, pi].
// Kept branch-for-branch identical to the SIMD kernels so results agree bitwise.
inline double circular_distance(double a, double b) {
  const double d = std::fabs(a - b);
  return d > kPi ? kTwoPi - d : d;
}

// A phase on the unit circle. Always stored wrapped into (-pi, pi].
class PhaseAngle {
 public:
  constexpr PhaseAngle() = default;
  explicit PhaseAngle(double radians) : value_(wrap_angle(radians)) {}

  [[nodiscard]] double radians() const { return value_; }
  [[nodiscard]] double degrees() const { return value_ * 180.0 / kPi; }

  friend bool operator==(PhaseAngle a, PhaseAngle b) = default;

 private:
  double value_ = 0.0;
};

inline double deg_to_rad(double degrees) { return degrees * kPi / 180.0; }

}  // namespace ppmp
