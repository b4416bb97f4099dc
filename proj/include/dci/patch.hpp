#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "dci/image.hpp"
#include "dci/keypoint.hpp"

namespace dci {

inline constexpr int kDefaultPatchSide = 31;
inline constexpr double kDefaultMagnification = 3.0;

/// Square resampled neighbourhood of a keypoint.
struct Patch {
  GrayImage pixels;
  Keypoint source;

  int side() const { return pixels.width(); }
};

/// Bilinear sample with replicate-border extension.
inline double sample_bilinear(const GrayImage& image, double x, double y) {
  // Clamping the coordinate is equivalent to replicating the border pixels.
  x = std::clamp(x, 0.0, static_cast<double>(image.width() - 1));
  y = std::clamp(y, 0.0, static_cast<double>(image.height() - 1));
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const int ix = static_cast<int>(fx);
  const int iy = static_cast<int>(fy);
  const double ax = x - fx;
  const double ay = y - fy;
  // a + t * (b - a) keeps constant regions exactly constant.
  const double p00 = image.clamped(ix, iy);
  const double p10 = image.clamped(ix + 1, iy);
  const double p01 = image.clamped(ix, iy + 1);
  const double p11 = image.clamped(ix + 1, iy + 1);
  const double top = p00 + ax * (p10 - p00);
  const double bottom = p01 + ax * (p11 - p01);
  return top + ay * (bottom - top);
}

/// Samples a side x side grid over a square of half-width
/// magnification * keypoint.scale centred on the keypoint. The patch +x axis
/// follows keypoint.orientation in the image, so image structure at that
/// angle appears at angle 0 in the patch.
inline Patch extract_patch(const GrayImage& image, const Keypoint& keypoint,
                           int side = kDefaultPatchSide,
                           double magnification = kDefaultMagnification) {
  if (side < 3 || side % 2 == 0) {
    throw InputError("patch side must be odd and >= 3, got " +
                     std::to_string(side));
  }
  if (!(magnification > 0.0) || !std::isfinite(magnification)) {
    throw InputError("magnification must be positive");
  }
  if (!std::isfinite(keypoint.x) || !std::isfinite(keypoint.y) ||
      !std::isfinite(keypoint.scale) || !std::isfinite(keypoint.orientation)) {
    throw InputError("keypoint has non-finite coordinates");
  }
  if (!(keypoint.scale > 0.0)) throw InputError("keypoint scale must be > 0");
  if (image.empty()) throw DimensionError("cannot sample an empty image");

  const int half = side / 2;
  const double spacing = magnification * keypoint.scale / half;
  const double c = std::cos(keypoint.orientation);
  const double s = std::sin(keypoint.orientation);

  Patch patch{GrayImage(side, side), keypoint};
  for (int i = 0; i < side; ++i) {
    const double v = (i - half) * spacing;
    for (int j = 0; j < side; ++j) {
      const double u = (j - half) * spacing;
      const double x = keypoint.x + c * u - s * v;
      const double y = keypoint.y + s * u + c * v;
      patch.pixels(j, i) = sample_bilinear(image, x, y);
    }
  }
  return patch;
}

}  // namespace dci
