#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

namespace dci {

struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  double scale = 1.0;        // sigma in pixels
  double orientation = 0.0;  // radians in [0, 2pi)
  double response = 0.0;

  friend bool operator==(const Keypoint&, const Keypoint&) = default;
};

/// Wraps an angle into [0, 2pi).
inline double normalize_angle(double radians) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double a = std::fmod(radians, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  if (a >= kTwoPi) a = 0.0;
  return a;
}

/// Smallest absolute difference between two angles, in [0, pi].
inline double angle_distance(double a, double b) {
  const double d = normalize_angle(a - b);
  return std::min(d, 2.0 * std::numbers::pi - d);
}

}  // namespace dci
