#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "dci/differential.hpp"
#include "dci/image.hpp"
#include "dci/patch.hpp"
#include "oracles.hpp"

namespace dci {
namespace {

using testing::image_from;
using testing::random_image;

TEST(Gradient, ConstantImageIsZero) {
  const GrayImage img(6, 5, 7.0);
  const auto g = gradient(img);
  for (const Vec2& v : g.values()) {
    EXPECT_EQ(v.x, 0.0);
    EXPECT_EQ(v.y, 0.0);
  }
}

TEST(Gradient, RampInterior) {
  const auto img = image_from(8, 8, [](double x, double) { return 2.0 * x; });
  const auto g = gradient(img);
  EXPECT_DOUBLE_EQ(g(4, 4).x, 2.0);
  EXPECT_DOUBLE_EQ(g(4, 4).y, 0.0);
  // replicate border halves the difference at the edge
  EXPECT_DOUBLE_EQ(g(0, 4).x, 1.0);
}

TEST(Gradient, MatchesStencilOracle) {
  const auto img = random_image(7, 7, 11);
  const auto g = gradient(img);
  for (int y = 0; y < 7; ++y) {
    for (int x = 0; x < 7; ++x) {
      const auto [ox, oy] = testing::oracle_gradient(img, x, y);
      EXPECT_NEAR(g(x, y).x, ox, 1e-12);
      EXPECT_NEAR(g(x, y).y, oy, 1e-12);
    }
  }
}

TEST(Gradient, RejectsTinyImages) {
  EXPECT_THROW(gradient(GrayImage(2, 5)), DimensionError);
  EXPECT_THROW(laplacian(GrayImage(5, 2)), DimensionError);
  EXPECT_THROW(laplace_of_field(VectorField(2, 2)), DimensionError);
}

TEST(Laplacian, ConstantAndLinearVanish) {
  const auto flat = laplacian(GrayImage(5, 5, 3.0));
  for (double v : flat.values()) EXPECT_EQ(v, 0.0);
  const auto ramp =
      image_from(9, 9, [](double x, double y) { return 3.0 * x - 2.0 * y; });
  EXPECT_NEAR(laplacian(ramp)(4, 4), 0.0, 1e-12);
}

TEST(Laplacian, QuadraticInterior) {
  const auto img = image_from(9, 9, [](double x, double) { return x * x; });
  EXPECT_DOUBLE_EQ(laplacian(img)(4, 4), 2.0);
}

TEST(LaplaceOfField, ConstantAndLinearVanish) {
  const VectorField c(5, 5, Vec2{1.5, -2.0});
  const auto dc = laplace_of_field(c);
  for (const Vec2& v : dc.values()) {
    EXPECT_EQ(v.x, 0.0);
    EXPECT_EQ(v.y, 0.0);
  }
  VectorField lin(7, 7);
  for (int y = 0; y < 7; ++y)
    for (int x = 0; x < 7; ++x) lin(x, y) = {double(x), double(y)};
  const auto d = laplace_of_field(lin);
  EXPECT_NEAR(d(3, 3).x, 0.0, 1e-12);
  EXPECT_NEAR(d(3, 3).y, 0.0, 1e-12);
}

TEST(LaplaceOfField, CubicGradient) {
  // vx = 3x^2 + 1 is the central-difference gradient of x^3.
  VectorField f(9, 9);
  for (int y = 0; y < 9; ++y)
    for (int x = 0; x < 9; ++x) f(x, y) = {3.0 * x * x + 1.0, 0.0};
  EXPECT_NEAR(laplace_of_field(f)(4, 4).x, -1.5, 1e-12);

  const auto cube = image_from(9, 9, [](double x, double) { return x * x * x; });
  EXPECT_NEAR(gradient(cube)(4, 4).x, 3.0 * 16 + 1.0, 1e-12);
  EXPECT_NEAR(laplace_of_field(gradient(cube))(4, 4).x, -1.5, 1e-12);
}

TEST(Differential, LinearInIntensity) {
  const auto img = random_image(9, 9, 5);
  const double a = -1.7, b = 33.0;
  const auto scaled = affine_intensity(img, a, b);
  const auto g = gradient(img), gs = gradient(scaled);
  const auto l = laplacian(img), ls = laplacian(scaled);
  const auto d = laplace_of_field(g), ds = laplace_of_field(gs);
  for (int y = 0; y < 9; ++y) {
    for (int x = 0; x < 9; ++x) {
      EXPECT_NEAR(gs(x, y).x, a * g(x, y).x, 1e-9 * (1 + std::abs(a * g(x, y).x)));
      EXPECT_NEAR(gs(x, y).y, a * g(x, y).y, 1e-9 * (1 + std::abs(a * g(x, y).y)));
      EXPECT_NEAR(ls(x, y), a * l(x, y), 1e-9 * (1 + std::abs(a * l(x, y))));
      EXPECT_NEAR(ds(x, y).x, a * d(x, y).x, 1e-9 * (1 + std::abs(a * d(x, y).x)));
    }
  }
}

TEST(Differential, NegationSymmetry) {
  const auto img = random_image(8, 6, 9);
  const auto neg = affine_intensity(img, -1.0, 0.0);
  const auto l = laplacian(img), ln = laplacian(neg);
  for (std::size_t i = 0; i < l.size(); ++i) {
    EXPECT_DOUBLE_EQ(ln.values()[i], -l.values()[i]);
  }
  const auto g = gradient(img);
  VectorField gneg(g.width(), g.height());
  for (std::size_t i = 0; i < g.size(); ++i) gneg.values()[i] = -g.values()[i];
  const auto d = laplace_of_field(g), dn = laplace_of_field(gneg);
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_DOUBLE_EQ(dn.values()[i].x, -d.values()[i].x);
    EXPECT_DOUBLE_EQ(dn.values()[i].y, -d.values()[i].y);
  }
}

TEST(Differential, DivergenceIdentityOnRandomImages) {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto img = random_image(9, 9, rng());
    std::uniform_int_distribution<int> lo(1, 4), hi(4, 7);
    const PixelRect r{lo(rng), lo(rng), hi(rng), hi(rng)};
    const double inside = interior_laplacian_sum(img, r);
    const double flux = boundary_flux(img, r);
    EXPECT_NEAR(inside, flux, 1e-9 * std::max(1.0, std::abs(inside)));
  }
}

TEST(Differential, RectangleMustBeInterior) {
  const GrayImage img(9, 9);
  EXPECT_THROW(interior_laplacian_sum(img, {0, 1, 4, 4}), InputError);
  EXPECT_THROW(boundary_flux(img, {1, 1, 8, 4}), InputError);
}

TEST(ExtractPatch, ConstantImageGivesConstantPatch) {
  const GrayImage img(40, 30, 42.0);
  const Keypoint kp{17.3, 11.9, 2.7, 1.1, 0.0};
  const Patch p = extract_patch(img, kp);
  EXPECT_EQ(p.side(), 31);
  for (double v : p.pixels.values()) EXPECT_EQ(v, 42.0);
}

TEST(ExtractPatch, IdentityCropIsExact) {
  const auto img = random_image(41, 41, 21);
  // half-width 15 pixels with 15 samples per half side -> unit spacing
  const Keypoint kp{20.0, 20.0, 5.0, 0.0, 0.0};
  const Patch p = extract_patch(img, kp, 31, 3.0);
  for (int i = 0; i < 31; ++i)
    for (int j = 0; j < 31; ++j) EXPECT_EQ(p.pixels(j, i), img(j + 5, i + 5));
}

TEST(ExtractPatch, HalfTurnMatchesRotatedResamplingOracle) {
  const auto img = image_from(60, 50, [](double x, double y) {
    return 3.0 * x + 0.5 * y + 0.01 * x * y;
  });
  const Keypoint kp0{27.4, 23.1, 2.3, 0.0, 0.0};
  Keypoint kpi = kp0;
  kpi.orientation = std::numbers::pi;
  const Patch p0 = extract_patch(img, kp0, 15, 2.5);
  const Patch pi = extract_patch(img, kpi, 15, 2.5);
  const double spacing = 2.5 * 2.3 / 7;
  for (int i = 0; i < 15; ++i) {
    for (int j = 0; j < 15; ++j) {
      // explicit half-turn: offset (u, v) maps to (-u, -v)
      const double u = (j - 7) * spacing, v = (i - 7) * spacing;
      const double expected =
          testing::oracle_bilinear(img, kp0.x - u, kp0.y - v);
      EXPECT_NEAR(pi.pixels(j, i), expected, 1e-9);
      EXPECT_NEAR(pi.pixels(j, i), p0.pixels(14 - j, 14 - i), 1e-9);
    }
  }
}

TEST(ExtractPatch, GeneralRotationMatchesOracle) {
  const auto img = random_image(50, 50, 8);
  const Keypoint kp{24.6, 25.2, 1.9, 0.7, 0.0};
  const Patch p = extract_patch(img, kp, 11, 3.0);
  const double spacing = 3.0 * 1.9 / 5;
  for (int i = 0; i < 11; ++i) {
    for (int j = 0; j < 11; ++j) {
      const double u = (j - 5) * spacing, v = (i - 5) * spacing;
      const double x = kp.x + std::cos(0.7) * u - std::sin(0.7) * v;
      const double y = kp.y + std::sin(0.7) * u + std::cos(0.7) * v;
      EXPECT_NEAR(p.pixels(j, i), testing::oracle_bilinear(img, x, y), 1e-9);
    }
  }
}

TEST(ExtractPatch, RejectsBadInput) {
  const GrayImage img(20, 20, 1.0);
  EXPECT_THROW(extract_patch(img, {10, 10, 1, 0, 0}, 30), InputError);
  EXPECT_THROW(extract_patch(img, {10, 10, 1, 0, 0}, 1), InputError);
  EXPECT_THROW(extract_patch(img, {10, 10, 0, 0, 0}), InputError);
  EXPECT_THROW(extract_patch(img, {10, 10, 1, 0, 0}, 31, 0.0), InputError);
  EXPECT_THROW(extract_patch(img, {std::nan(""), 10, 1, 0, 0}), InputError);
  EXPECT_THROW(extract_patch(img, {10, INFINITY, 1, 0, 0}), InputError);
}

TEST(Raster, SizeMismatchThrows) {
  EXPECT_THROW(GrayImage(3, 3, std::vector<double>(8)), DimensionError);
}

TEST(Raster, QuarterTurnsCompose) {
  const auto img = random_image(7, 4, 2);
  EXPECT_EQ(rotate_quarter_turns(rotate_quarter_turns(img, 1), 3), img);
  EXPECT_EQ(rotate_quarter_turns(rotate_quarter_turns(img, 2), 2), img);
  const auto r = rotate_quarter_turns(img, 1);
  EXPECT_EQ(r.width(), 4);
  EXPECT_EQ(r.height(), 7);
}

}  // namespace
}  // namespace dci
