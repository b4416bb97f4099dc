#pragma once

#include "dci/image.hpp"

namespace dci {

/// Central-difference gradient ((I(x+1)-I(x-1))/2, (I(y+1)-I(y-1))/2) with
/// replicate border.
inline VectorField gradient(const GrayImage& image) {
  require_min_size(image);
  const int w = image.width();
  const int h = image.height();
  VectorField out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      out(x, y) = {0.5 * (image.clamped(x + 1, y) - image.clamped(x - 1, y)),
                   0.5 * (image.clamped(x, y + 1) - image.clamped(x, y - 1))};
    }
  }
  return out;
}

/// Conventional 4-neighbour discrete Laplacian, sum of neighbours minus
/// four times the centre. A bright blob gives a negative response.
inline ScalarField laplacian(const GrayImage& image) {
  require_min_size(image);
  const int w = image.width();
  const int h = image.height();
  ScalarField out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      out(x, y) = (image.clamped(x + 1, y) + image.clamped(x - 1, y)) +
                  (image.clamped(x, y + 1) + image.clamped(x, y - 1)) -
                  4.0 * image(x, y);
    }
  }
  return out;
}

/// Laplace gradient d = g - (g1 + g2 + g3 + g4) / 4 over the 4-neighbourhood,
/// applied to each component, replicate border.
inline VectorField laplace_of_field(const VectorField& field) {
  require_min_size(field);
  const int w = field.width();
  const int h = field.height();
  VectorField out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Vec2 sum = (field.clamped(x + 1, y) + field.clamped(x - 1, y)) +
                       (field.clamped(x, y + 1) + field.clamped(x, y - 1));
      out(x, y) = field(x, y) - 0.25 * sum;
    }
  }
  return out;
}

/// Closed pixel rectangle [x0, x1] x [y0, y1].
struct PixelRect {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;
};

namespace detail {
inline void require_interior(const GrayImage& image, const PixelRect& r) {
  require_min_size(image);
  if (r.x0 < 1 || r.y0 < 1 || r.x1 > image.width() - 2 ||
      r.y1 > image.height() - 2 || r.x0 > r.x1 || r.y0 > r.y1) {
    throw InputError("rectangle must lie strictly inside the image");
  }
}
}  // namespace detail

/// Sum of the discrete Laplacian over a rectangle that does not touch the
/// image border.
inline double interior_laplacian_sum(const GrayImage& image,
                                     const PixelRect& r) {
  detail::require_interior(image, r);
  double sum = 0.0;
  for (int y = r.y0; y <= r.y1; ++y) {
    for (int x = r.x0; x <= r.x1; ++x) {
      sum += (image(x + 1, y) + image(x - 1, y)) +
             (image(x, y + 1) + image(x, y - 1)) - 4.0 * image(x, y);
    }
  }
  return sum;
}

/// Net outward first-difference flux through the rectangle boundary: for
/// every boundary pixel, the difference from it to its outside neighbour.
/// Equals interior_laplacian_sum by telescoping of second differences.
inline double boundary_flux(const GrayImage& image, const PixelRect& r) {
  detail::require_interior(image, r);
  double flux = 0.0;
  for (int y = r.y0; y <= r.y1; ++y) {
    flux += image(r.x1 + 1, y) - image(r.x1, y);
    flux += image(r.x0 - 1, y) - image(r.x0, y);
  }
  for (int x = r.x0; x <= r.x1; ++x) {
    flux += image(x, r.y1 + 1) - image(x, r.y1);
    flux += image(x, r.y0 - 1) - image(x, r.y0);
  }
  return flux;
}

}  // namespace dci
