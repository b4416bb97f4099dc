#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "dci/differential.hpp"
#include "dci/image.hpp"
#include "dci/keypoint.hpp"
#include "dci/patch.hpp"

namespace dci {

inline constexpr int kGridCells = 4;
inline constexpr int kOrientationBins = 8;
inline constexpr int kDescriptorSize =
    kGridCells * kGridCells * kOrientationBins;  // 128
inline constexpr double kDegenerateMass = 1e-12;
inline constexpr double kHogClamp = 0.2;

/// Which bin permutation undoes a contrast inversion.
///   Upright:  patches are not rotated; inversion shifts every orientation
///             by pi, i.e. four bins.
///   Oriented: patches follow the dominant orientation, which itself moves
///             by pi under inversion; the aligned patch turns 180 degrees
///             and the cells swap point-symmetrically.
enum class FlipMode { Upright, Oriented };

enum class DescriptorKind { Dci, Hog };

inline std::string to_string(FlipMode mode) {
  return mode == FlipMode::Upright ? "upright" : "oriented";
}
inline std::string to_string(DescriptorKind kind) {
  return kind == DescriptorKind::Dci ? "dci" : "hog";
}
inline FlipMode parse_flip_mode(const std::string& s) {
  if (s == "upright") return FlipMode::Upright;
  if (s == "oriented") return FlipMode::Oriented;
  throw InputError("unknown mode '" + s + "' (expected upright|oriented)");
}
inline DescriptorKind parse_descriptor_kind(const std::string& s) {
  if (s == "dci") return DescriptorKind::Dci;
  if (s == "hog") return DescriptorKind::Hog;
  throw InputError("unknown descriptor kind '" + s + "' (expected dci|hog)");
}

/// 4x4 cells of 8 orientation bins. Flattened cell-major (cells row-major),
/// bin-minor; bin k is centred on angle k * 45 degrees.
struct HistogramGrid {
  std::array<double, kDescriptorSize> values{};

  static constexpr int index(int row, int col, int bin) {
    return (row * kGridCells + col) * kOrientationBins + bin;
  }
  double& at(int row, int col, int bin) { return values[index(row, col, bin)]; }
  double at(int row, int col, int bin) const {
    return values[index(row, col, bin)];
  }
  double total() const {
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum;
  }
  /// Sum over all cells, one value per orientation bin.
  std::array<double, kOrientationBins> collapse_cells() const {
    std::array<double, kOrientationBins> out{};
    for (int c = 0; c < kGridCells * kGridCells; ++c) {
      for (int b = 0; b < kOrientationBins; ++b) {
        out[b] += values[c * kOrientationBins + b];
      }
    }
    return out;
  }

  friend bool operator==(const HistogramGrid&, const HistogramGrid&) = default;
};

struct Descriptor {
  std::array<double, kDescriptorSize> values{};
  bool degenerate = false;

  static Descriptor zero() {
    Descriptor d;
    d.degenerate = true;
    return d;
  }
};

struct DescriptorParams {
  int side = kDefaultPatchSide;
  double magnification = kDefaultMagnification;
};

/// Gaussian window over the patch, sigma = side / 2, centred on the middle
/// pixel.
inline double spatial_weight(int side, int x, int y) {
  const double centre = 0.5 * (side - 1);
  const double sigma = 0.5 * side;
  const double dx = x - centre;
  const double dy = y - centre;
  return std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
}

/// Continuous coordinate of angle `radians` on the circular bin axis,
/// in [0, bins).
inline double orientation_bin_position(double radians, int bins) {
  const double t = normalize_angle(radians) * bins / (2.0 * std::numbers::pi);
  return t >= bins ? 0.0 : t;
}

/// Soft-bins every vector of `field` into the 4x4x8 grid: weight |v| times
/// the Gaussian window, linear interpolation across the two nearest
/// orientation bins and bilinear across the nearest cells (clamped at the
/// grid edge, so no mass is lost).
inline HistogramGrid accumulate_grid(const VectorField& field) {
  const int side = field.width();
  if (side != field.height()) throw InputError("field must be square");
  if (side < 2 * kGridCells) {
    throw DimensionError("patch side must be >= 8 for a 4x4 grid");
  }

  HistogramGrid grid;
  const double cells_per_pixel = static_cast<double>(kGridCells) / side;
  for (int y = 0; y < side; ++y) {
    const double cy = std::clamp((y + 0.5) * cells_per_pixel - 0.5, 0.0,
                                 kGridCells - 1.0);
    const int r0 = std::min(static_cast<int>(cy), kGridCells - 2);
    const double fr = cy - r0;
    for (int x = 0; x < side; ++x) {
      const Vec2 v = field(x, y);
      const double magnitude = std::hypot(v.x, v.y);
      if (magnitude == 0.0) continue;
      const double weight = magnitude * spatial_weight(side, x, y);

      const double cx = std::clamp((x + 0.5) * cells_per_pixel - 0.5, 0.0,
                                   kGridCells - 1.0);
      const int c0 = std::min(static_cast<int>(cx), kGridCells - 2);
      const double fc = cx - c0;

      const double t =
          orientation_bin_position(std::atan2(v.y, v.x), kOrientationBins);
      const int b0 = static_cast<int>(t);
      const int b1 = (b0 + 1) % kOrientationBins;
      const double fb = t - b0;

      const double row_w[2] = {1.0 - fr, fr};
      const double col_w[2] = {1.0 - fc, fc};
      const double bin_w[2] = {1.0 - fb, fb};
      const int bins[2] = {b0, b1};
      for (int dr = 0; dr < 2; ++dr) {
        for (int dc = 0; dc < 2; ++dc) {
          const double wrc = weight * row_w[dr] * col_w[dc];
          for (int db = 0; db < 2; ++db) {
            grid.at(r0 + dr, c0 + dc, bins[db]) += wrc * bin_w[db];
          }
        }
      }
    }
  }
  return grid;
}

/// Histogram of Laplace gradient of a patch.
inline HistogramGrid build_holg(const Patch& patch) {
  return accumulate_grid(laplace_of_field(gradient(patch.pixels)));
}

/// Histogram of first-order gradient of a patch (the SIFT-style baseline).
inline HistogramGrid build_hog(const Patch& patch) {
  return accumulate_grid(gradient(patch.pixels));
}

namespace detail {
inline PixelRect patch_interior(const Patch& patch) {
  require_min_size(patch.pixels);
  return {1, 1, patch.side() - 2, patch.side() - 2};
}
}  // namespace detail

/// Surface integral of div g over the patch: the Laplacian summed over
/// every pixel that has a full 4-neighbourhood inside the patch. Negative
/// for bright-centred patches, positive for dark-centred ones.
inline double divergence_phi(const Patch& patch) {
  return interior_laplacian_sum(patch.pixels, detail::patch_interior(patch));
}

/// The same quantity as divergence_phi, evaluated as outward flux of the
/// first differences across the boundary of the interior region.
inline double divergence_phi_boundary(const Patch& patch) {
  return boundary_flux(patch.pixels, detail::patch_interior(patch));
}

/// Canonicalizes bin order against contrast inversion. No-op when phi >= 0.
inline HistogramGrid canonical_flip(const HistogramGrid& grid, double phi,
                                    FlipMode mode) {
  if (!(phi < 0.0)) return grid;
  HistogramGrid out;
  constexpr int last = kGridCells - 1;
  for (int r = 0; r < kGridCells; ++r) {
    for (int c = 0; c < kGridCells; ++c) {
      for (int b = 0; b < kOrientationBins; ++b) {
        if (mode == FlipMode::Upright) {
          out.at(r, c, (b + kOrientationBins / 2) % kOrientationBins) =
              grid.at(r, c, b);
        } else {
          out.at(last - r, last - c, b) = grid.at(r, c, b);
        }
      }
    }
  }
  return out;
}

namespace detail {
inline void require_nonnegative(const HistogramGrid& grid) {
  for (double v : grid.values) {
    if (v < 0.0 || std::isnan(v)) {
      throw InvariantError("histogram bin is negative or NaN");
    }
  }
}
}  // namespace detail

/// L1 normalization followed by an elementwise square root. The result has
/// unit L2 norm because the normalized bins sum to one.
inline Descriptor finalize(const HistogramGrid& grid) {
  detail::require_nonnegative(grid);
  const double mass = grid.total();
  if (mass < kDegenerateMass) return Descriptor::zero();
  Descriptor d;
  for (int i = 0; i < kDescriptorSize; ++i) {
    d.values[i] = std::sqrt(grid.values[i] / mass);
  }
  return d;
}

/// SIFT post-processing: L2 normalize, clamp at 0.2, renormalize.
inline Descriptor finalize_hog(const HistogramGrid& grid) {
  detail::require_nonnegative(grid);
  if (grid.total() < kDegenerateMass) return Descriptor::zero();
  Descriptor d;
  d.values = grid.values;
  auto normalize = [&d] {
    double sq = 0.0;
    for (double v : d.values) sq += v * v;
    const double inv = 1.0 / std::sqrt(sq);
    for (double& v : d.values) v *= inv;
  };
  normalize();
  for (double& v : d.values) v = std::min(v, kHogClamp);
  normalize();
  return d;
}

namespace detail {
inline Patch describe_patch(const GrayImage& image, const Keypoint& keypoint,
                            FlipMode mode, const DescriptorParams& params) {
  if (!(keypoint.x >= 0.0 && keypoint.y >= 0.0 &&
        keypoint.x <= image.width() - 1.0 &&
        keypoint.y <= image.height() - 1.0)) {
    throw InputError("keypoint centre lies outside the image");
  }
  Keypoint frame = keypoint;
  if (mode == FlipMode::Upright) frame.orientation = 0.0;
  return extract_patch(image, frame, params.side, params.magnification);
}
}  // namespace detail

/// Full DCI pipeline for one keypoint: aligned patch, HoLG, divergence
/// flip, rooted L1 normalization.
inline Descriptor describe(const GrayImage& image, const Keypoint& keypoint,
                           FlipMode mode, const DescriptorParams& params = {}) {
  const Patch patch = detail::describe_patch(image, keypoint, mode, params);
  const HistogramGrid grid =
      canonical_flip(build_holg(patch), divergence_phi(patch), mode);
  return finalize(grid);
}

/// SIFT-like baseline: gradient histograms, no flip, clamped L2
/// normalization. `mode` only selects whether the patch is rotated.
inline Descriptor describe_hog_baseline(const GrayImage& image,
                                        const Keypoint& keypoint,
                                        FlipMode mode = FlipMode::Oriented,
                                        const DescriptorParams& params = {}) {
  const Patch patch = detail::describe_patch(image, keypoint, mode, params);
  return finalize_hog(build_hog(patch));
}

inline Descriptor describe(DescriptorKind kind, const GrayImage& image,
                           const Keypoint& keypoint, FlipMode mode,
                           const DescriptorParams& params = {}) {
  return kind == DescriptorKind::Dci
             ? describe(image, keypoint, mode, params)
             : describe_hog_baseline(image, keypoint, mode, params);
}

struct MeanHistograms {
  std::array<double, kOrientationBins> hog{};
  std::array<double, kOrientationBins> holg{};
  std::size_t count = 0;  // keypoints that contributed
};

struct CorpusImage {
  const GrayImage* image = nullptr;
  std::vector<Keypoint> keypoints;
};

/// Per keypoint, one 8-bin histogram over the whole oriented patch (HoG and
/// HoLG), L1-normalized, then averaged over the corpus. Keypoints whose
/// patch carries no gradient mass are skipped.
inline MeanHistograms mean_histograms(std::span<const CorpusImage> corpus,
                                      const DescriptorParams& params = {}) {
  MeanHistograms out;
  auto add_normalized = [](std::array<double, kOrientationBins>& acc,
                           const std::array<double, kOrientationBins>& h) {
    double sum = 0.0;
    for (double v : h) sum += v;
    for (int b = 0; b < kOrientationBins; ++b) acc[b] += h[b] / sum;
  };
  for (const CorpusImage& entry : corpus) {
    if (entry.image == nullptr) throw InputError("corpus entry has no image");
    for (const Keypoint& kp : entry.keypoints) {
      const Patch patch = extract_patch(*entry.image, kp, params.side,
                                        params.magnification);
      const auto hog = build_hog(patch).collapse_cells();
      const auto holg = build_holg(patch).collapse_cells();
      double hog_mass = 0.0, holg_mass = 0.0;
      for (int b = 0; b < kOrientationBins; ++b) {
        hog_mass += hog[b];
        holg_mass += holg[b];
      }
      if (hog_mass < kDegenerateMass || holg_mass < kDegenerateMass) continue;
      add_normalized(out.hog, hog);
      add_normalized(out.holg, holg);
      ++out.count;
    }
  }
  if (out.count == 0) {
    throw InputError("corpus has no usable keypoints");
  }
  for (int b = 0; b < kOrientationBins; ++b) {
    out.hog[b] /= static_cast<double>(out.count);
    out.holg[b] /= static_cast<double>(out.count);
  }
  return out;
}

}  // namespace dci
