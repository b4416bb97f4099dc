#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dci {

/// Bad caller input: malformed files, out-of-range parameters, empty sets.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raster too small for the requested operation.
class DimensionError : public InputError {
 public:
  using InputError::InputError;
};

/// An internal invariant was broken (e.g. a negative histogram bin).
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
  friend bool operator==(Vec2 a, Vec2 b) = default;
};

/// Row-major width x height grid. The tag keeps semantically different
/// rasters (intensities, Laplacian responses) from mixing silently.
template <typename T, typename Tag>
class Raster {
 public:
  using value_type = T;

  Raster() = default;
  Raster(int width, int height, T fill = T{})
      : width_(width), height_(height) {
    if (width < 0 || height < 0) {
      throw DimensionError("raster dimensions must be non-negative");
    }
    data_.assign(static_cast<std::size_t>(width) * height, fill);
  }
  Raster(int width, int height, std::vector<T> data)
      : width_(width), height_(height), data_(std::move(data)) {
    if (width < 0 || height < 0 ||
        data_.size() != static_cast<std::size_t>(width) * height) {
      throw DimensionError("raster data size does not match " +
                           std::to_string(width) + "x" +
                           std::to_string(height));
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(int x, int y) { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const { return data_[index(x, y)]; }

  /// Replicate-border access: coordinates are clamped into the raster.
  const T& clamped(int x, int y) const {
    return (*this)(std::clamp(x, 0, width_ - 1), std::clamp(y, 0, height_ - 1));
  }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * width_ + x;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

struct IntensityTag {};
struct ScalarTag {};
struct VectorTag {};

/// Single-channel intensities, nominally in [0, 255].
using GrayImage = Raster<double, IntensityTag>;
/// Per-pixel real values, e.g. the Laplacian of an image.
using ScalarField = Raster<double, ScalarTag>;
/// Per-pixel 2-vectors, e.g. the gradient or the Laplace gradient.
using VectorField = Raster<Vec2, VectorTag>;

template <typename T, typename Tag>
void require_min_size(const Raster<T, Tag>& r, int min_side = 3) {
  if (r.width() < min_side || r.height() < min_side) {
    throw DimensionError("raster is " + std::to_string(r.width()) + "x" +
                         std::to_string(r.height()) + ", need at least " +
                         std::to_string(min_side) + "x" +
                         std::to_string(min_side));
  }
}

/// Pointwise a * I + b.
inline GrayImage affine_intensity(const GrayImage& image, double a, double b) {
  GrayImage out(image.width(), image.height());
  auto src = image.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = a * src[i] + b;
  return out;
}

/// Contrast inversion c - I.
inline GrayImage invert(const GrayImage& image, double c = 255.0) {
  return affine_intensity(image, -1.0, c);
}

/// Exact 90-degree counter-clockwise rotations (quarter_turns mod 4) of the
/// pixel lattice. A pixel (x, y) of the input lands at rotate_point(...).
inline GrayImage rotate_quarter_turns(const GrayImage& image, int quarter_turns) {
  const int q = ((quarter_turns % 4) + 4) % 4;
  const int w = image.width();
  const int h = image.height();
  GrayImage out = (q % 2 == 0) ? GrayImage(w, h) : GrayImage(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int nx = x, ny = y;
      switch (q) {
        case 1: nx = y; ny = w - 1 - x; break;
        case 2: nx = w - 1 - x; ny = h - 1 - y; break;
        case 3: nx = h - 1 - y; ny = x; break;
        default: break;
      }
      out(nx, ny) = image(x, y);
    }
  }
  return out;
}

}  // namespace dci
