#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "dci/image.hpp"
#include "dci/keypoint.hpp"

namespace dci {

struct DetectorParams {
  int num_scales = 9;
  double sigma_min = 1.6;
  double sigma_step = 1.2599210498948732;  // 2^(1/3)
  double response_threshold = 0.03;        // on [0,1]-scaled intensities

  void validate() const {
    if (num_scales < 3) throw InputError("num_scales must be >= 3");
    if (!(sigma_min > 0.0)) throw InputError("sigma_min must be > 0");
    if (!(sigma_step > 1.0)) throw InputError("sigma_step must be > 1");
    if (!(response_threshold >= 0.0)) {
      throw InputError("response_threshold must be >= 0");
    }
  }
  double sigma(int level) const {
    return sigma_min * std::pow(sigma_step, level);
  }
};

inline int gaussian_radius(double sigma) {
  return static_cast<int>(std::ceil(3.0 * sigma));
}

/// Separable Gaussian smoothing, replicate border, kernel radius ceil(3 sigma).
inline GrayImage gaussian_blur(const GrayImage& image, double sigma) {
  const int radius = gaussian_radius(sigma);
  std::vector<double> kernel(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    sum += kernel[i + radius];
  }
  for (double& k : kernel) k /= sum;

  const int w = image.width();
  const int h = image.height();
  GrayImage tmp(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        acc += kernel[i + radius] * image.clamped(x + i, y);
      }
      tmp(x, y) = acc;
    }
  }
  GrayImage out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        acc += kernel[i + radius] * tmp.clamped(x, y + i);
      }
      out(x, y) = acc;
    }
  }
  return out;
}

/// sigma^2 * Laplacian(G_sigma * I) on [0,1]-scaled intensities.
inline ScalarField scale_normalized_log(const GrayImage& image, double sigma) {
  require_min_size(image);
  const GrayImage smooth =
      gaussian_blur(affine_intensity(image, 1.0 / 255.0, 0.0), sigma);
  ScalarField out(image.width(), image.height());
  const double norm = sigma * sigma;
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      out(x, y) = norm * ((smooth.clamped(x + 1, y) + smooth.clamped(x - 1, y)) +
                          (smooth.clamped(x, y + 1) + smooth.clamped(x, y - 1)) -
                          4.0 * smooth(x, y));
    }
  }
  return out;
}

namespace detail {
/// Vertex offset of the parabola through (-1, l), (0, c), (1, r), clamped
/// to half a sample.
inline double parabola_offset(double l, double c, double r) {
  const double denom = l - 2.0 * c + r;
  if (denom == 0.0) return 0.0;
  return std::clamp(0.5 * (l - r) / denom, -0.5, 0.5);
}
}  // namespace detail

/// Scale-space extrema of the scale-normalized LoG. Bright and dark blobs
/// are treated alike: only |response| is thresholded. Returned keypoints
/// have orientation 0 and are sorted by descending |response|, then y, x.
inline std::vector<Keypoint> detect_log(const GrayImage& image,
                                        const DetectorParams& params = {}) {
  params.validate();
  require_min_size(image);
  const int max_radius = gaussian_radius(params.sigma(params.num_scales - 1));
  if (std::min(image.width(), image.height()) < 2 * max_radius + 1) {
    throw InputError("image " + std::to_string(image.width()) + "x" +
                     std::to_string(image.height()) +
                     " is too small for the largest detector scale");
  }

  std::vector<ScalarField> stack;
  stack.reserve(params.num_scales);
  for (int k = 0; k < params.num_scales; ++k) {
    stack.push_back(scale_normalized_log(image, params.sigma(k)));
  }

  std::vector<Keypoint> keypoints;
  const int w = image.width();
  const int h = image.height();
  for (int k = 1; k + 1 < params.num_scales; ++k) {
    const ScalarField& cur = stack[k];
    for (int y = 1; y + 1 < h; ++y) {
      for (int x = 1; x + 1 < w; ++x) {
        const double v = cur(x, y);
        if (!(std::abs(v) > params.response_threshold)) continue;
        bool extremum = true;
        for (int dk = -1; dk <= 1 && extremum; ++dk) {
          const ScalarField& layer = stack[k + dk];
          for (int dy = -1; dy <= 1 && extremum; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
              if (dk == 0 && dy == 0 && dx == 0) continue;
              const double n = layer(x + dx, y + dy);
              if (v > 0.0 ? !(v > n) : !(v < n)) {
                extremum = false;
                break;
              }
            }
          }
        }
        if (!extremum) continue;
        Keypoint kp;
        kp.x = x + detail::parabola_offset(cur(x - 1, y), v, cur(x + 1, y));
        kp.y = y + detail::parabola_offset(cur(x, y - 1), v, cur(x, y + 1));
        kp.scale = params.sigma(k);
        kp.response = v;
        keypoints.push_back(kp);
      }
    }
  }

  std::sort(keypoints.begin(), keypoints.end(),
            [](const Keypoint& a, const Keypoint& b) {
              const double ra = std::abs(a.response);
              const double rb = std::abs(b.response);
              if (ra != rb) return ra > rb;
              if (a.y != b.y) return a.y < b.y;
              return a.x < b.x;
            });
  return keypoints;
}

struct OrientationEstimate {
  double radians = 0.0;
  bool degenerate = false;
};

inline constexpr int kOrientationHistogramBins = 36;

/// 36-bin gradient orientation histogram over a Gaussian window
/// (sigma = 1.5 * scale, radius 3 sigma), circularly smoothed, with a
/// parabola-refined peak. Ties go to the lowest bin.
inline OrientationEstimate dominant_orientation(const GrayImage& image,
                                                const Keypoint& keypoint) {
  require_min_size(image);
  if (!(keypoint.x >= 0.0 && keypoint.y >= 0.0 &&
        keypoint.x <= image.width() - 1.0 &&
        keypoint.y <= image.height() - 1.0)) {
    throw InputError("keypoint lies outside the image");
  }
  if (!(keypoint.scale > 0.0)) throw InputError("keypoint scale must be > 0");

  constexpr int kBins = kOrientationHistogramBins;
  const double sigma = 1.5 * keypoint.scale;
  const int radius = std::max(1, static_cast<int>(std::lround(3.0 * sigma)));
  const int cx = static_cast<int>(std::lround(keypoint.x));
  const int cy = static_cast<int>(std::lround(keypoint.y));

  std::array<double, kBins> hist{};
  double mass = 0.0;
  for (int y = std::max(0, cy - radius);
       y <= std::min(image.height() - 1, cy + radius); ++y) {
    for (int x = std::max(0, cx - radius);
         x <= std::min(image.width() - 1, cx + radius); ++x) {
      const double dx = x - keypoint.x;
      const double dy = y - keypoint.y;
      const double r2 = dx * dx + dy * dy;
      if (r2 > static_cast<double>(radius) * radius) continue;
      const double gx = 0.5 * (image.clamped(x + 1, y) - image.clamped(x - 1, y));
      const double gy = 0.5 * (image.clamped(x, y + 1) - image.clamped(x, y - 1));
      const double magnitude = std::hypot(gx, gy);
      if (magnitude == 0.0) continue;
      const double weight = magnitude * std::exp(-r2 / (2.0 * sigma * sigma));
      double t = normalize_angle(std::atan2(gy, gx)) * kBins /
                 (2.0 * std::numbers::pi);
      if (t >= kBins) t = 0.0;
      const int b0 = static_cast<int>(t);
      const double f = t - b0;
      hist[b0] += weight * (1.0 - f);
      hist[(b0 + 1) % kBins] += weight * f;
      mass += weight;
    }
  }
  if (!(mass > 1e-12)) return {0.0, true};

  for (int pass = 0; pass < 2; ++pass) {
    std::array<double, kBins> smoothed{};
    for (int b = 0; b < kBins; ++b) {
      smoothed[b] = 0.25 * hist[(b + kBins - 1) % kBins] + 0.5 * hist[b] +
                    0.25 * hist[(b + 1) % kBins];
    }
    hist = smoothed;
  }

  int peak = 0;
  for (int b = 1; b < kBins; ++b) {
    if (hist[b] > hist[peak]) peak = b;
  }
  const double offset = detail::parabola_offset(
      hist[(peak + kBins - 1) % kBins], hist[peak], hist[(peak + 1) % kBins]);
  return {normalize_angle((peak + offset) * 2.0 * std::numbers::pi / kBins),
          false};
}

/// Fills in each keypoint's dominant orientation (0 when degenerate).
inline void assign_orientations(const GrayImage& image,
                                std::vector<Keypoint>& keypoints) {
  for (Keypoint& kp : keypoints) {
    kp.orientation = dominant_orientation(image, kp).radians;
  }
}

}  // namespace dci
