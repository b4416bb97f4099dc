#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <memory>
#include <numbers>
#include <optional>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "dci/image.hpp"
#include "dci/keypoint.hpp"
#include "dci/matching.hpp"
#include "dci/patch.hpp"

namespace dci {

/// Row-major 3x3 projective transform acting on (x, y, 1).
class Homography {
 public:
  Homography() : m_{1, 0, 0, 0, 1, 0, 0, 0, 1} {}
  explicit Homography(const std::array<double, 9>& m) : m_(m) {
    if (!(std::abs(determinant()) > 1e-12)) {
      throw InputError("homography is singular");
    }
  }

  static Homography identity() { return {}; }

  /// Homography of rotate_quarter_turns for an image of the given size.
  static Homography quarter_turns(int quarter_turns, int width, int height) {
    const double w1 = width - 1.0;
    const double h1 = height - 1.0;
    switch (((quarter_turns % 4) + 4) % 4) {
      case 1: return Homography({0, 1, 0, -1, 0, w1, 0, 0, 1});
      case 2: return Homography({-1, 0, w1, 0, -1, h1, 0, 0, 1});
      case 3: return Homography({0, -1, h1, 1, 0, 0, 0, 0, 1});
      default: return identity();
    }
  }

  double operator()(int row, int col) const { return m_[row * 3 + col]; }
  const std::array<double, 9>& matrix() const { return m_; }

  double determinant() const {
    return m_[0] * (m_[4] * m_[8] - m_[5] * m_[7]) -
           m_[1] * (m_[3] * m_[8] - m_[5] * m_[6]) +
           m_[2] * (m_[3] * m_[7] - m_[4] * m_[6]);
  }

  Homography inverse() const {
    const double det = determinant();
    const auto& m = m_;
    std::array<double, 9> inv = {
        (m[4] * m[8] - m[5] * m[7]) / det, (m[2] * m[7] - m[1] * m[8]) / det,
        (m[1] * m[5] - m[2] * m[4]) / det, (m[5] * m[6] - m[3] * m[8]) / det,
        (m[0] * m[8] - m[2] * m[6]) / det, (m[2] * m[3] - m[0] * m[5]) / det,
        (m[3] * m[7] - m[4] * m[6]) / det, (m[1] * m[6] - m[0] * m[7]) / det,
        (m[0] * m[4] - m[1] * m[3]) / det};
    return Homography(inv);
  }

  /// Homogeneous w of the mapped point.
  double w(double x, double y) const { return m_[6] * x + m_[7] * y + m_[8]; }

  /// Maps a point; nullopt when it lands on or behind the plane at infinity.
  std::optional<Vec2> apply(double x, double y) const {
    const double hw = w(x, y);
    if (!(hw > 0.0)) return std::nullopt;
    return Vec2{(m_[0] * x + m_[1] * y + m_[2]) / hw,
                (m_[3] * x + m_[4] * y + m_[5]) / hw};
  }

 private:
  std::array<double, 9> m_;
};

inline constexpr double kDefaultMaxOverlapError = 0.5;
inline constexpr int kOverlapGridSamples = 256;

namespace detail {

struct Box {
  double x0, y0, x1, y1;
  bool intersects(const Box& o) const {
    return x0 <= o.x1 && o.x0 <= x1 && y0 <= o.y1 && o.y0 <= y1;
  }
};

/// Keypoint region mapped into the second image: the image of a disk under
/// a homography, tested through the inverse map.
struct MappedDisk {
  Vec2 centre;
  double radius = 0.0;
  Homography inverse;
  Box bounds{};
  double area = 0.0;  // polygonal approximation, only used for pruning

  bool contains(double x, double y) const {
    const auto p = inverse.apply(x, y);
    if (!p) return false;
    const double dx = p->x - centre.x;
    const double dy = p->y - centre.y;
    return dx * dx + dy * dy <= radius * radius;
  }
};

inline MappedDisk map_disk(const Keypoint& kp, double radius,
                           const Homography& h) {
  // w is affine in (x, y): its minimum over the disk is attained on the rim.
  const double slope = std::hypot(h(2, 0), h(2, 1));
  if (!(h.w(kp.x, kp.y) - radius * slope > 0.0)) {
    throw InputError("keypoint region maps behind the camera plane");
  }
  MappedDisk out{{kp.x, kp.y}, radius, h.inverse()};
  constexpr int kRim = 256;
  double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
  double twice_area = 0.0;
  Vec2 prev{};
  for (int i = 0; i <= kRim; ++i) {
    const double a = 2.0 * std::numbers::pi * i / kRim;
    const Vec2 p = *h.apply(kp.x + radius * std::cos(a),
                            kp.y + radius * std::sin(a));
    if (i > 0) twice_area += prev.x * p.y - p.x * prev.y;
    prev = p;
    x0 = std::min(x0, p.x);
    y0 = std::min(y0, p.y);
    x1 = std::max(x1, p.x);
    y1 = std::max(y1, p.y);
  }
  // Chords of the sampled rim cut slightly inside the true outline.
  const double pad = 0.01 * std::max(x1 - x0, y1 - y0);
  out.bounds = {x0 - pad, y0 - pad, x1 + pad, y1 + pad};
  out.area = 0.5 * std::abs(twice_area);
  return out;
}

inline Box disk_box(const Keypoint& kp, double radius) {
  return {kp.x - radius, kp.y - radius, kp.x + radius, kp.y + radius};
}

/// 1 - |A n B| / |A u B| by counting samples over the union bounding box.
inline double rasterized_overlap_error(const MappedDisk& a, const Keypoint& kp_b,
                                       double radius_b) {
  const Box bb = disk_box(kp_b, radius_b);
  if (!a.bounds.intersects(bb)) return 1.0;
  const Box u{std::min(a.bounds.x0, bb.x0), std::min(a.bounds.y0, bb.y0),
              std::max(a.bounds.x1, bb.x1), std::max(a.bounds.y1, bb.y1)};
  // Keep at least ~32 samples across the smaller region.
  const double extent = std::max(u.x1 - u.x0, u.y1 - u.y0);
  const double smaller = std::min({a.bounds.x1 - a.bounds.x0,
                                   a.bounds.y1 - a.bounds.y0, 2.0 * radius_b});
  const int n = std::clamp(
      static_cast<int>(std::ceil(32.0 * extent / std::max(smaller, 1e-300))),
      kOverlapGridSamples, 4096);
  const double sx = (u.x1 - u.x0) / n;
  const double sy = (u.y1 - u.y0) / n;
  const double rb2 = radius_b * radius_b;
  std::size_t inter = 0, uni = 0;
  for (int i = 0; i < n; ++i) {
    const double y = u.y0 + (i + 0.5) * sy;
    for (int j = 0; j < n; ++j) {
      const double x = u.x0 + (j + 0.5) * sx;
      const double dx = x - kp_b.x;
      const double dy = y - kp_b.y;
      const bool in_b = dx * dx + dy * dy <= rb2;
      const bool in_a = a.contains(x, y);
      inter += (in_a && in_b);
      uni += (in_a || in_b);
    }
  }
  if (uni == 0) return 1.0;
  return 1.0 - static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace detail

/// Overlap error between the disk of radius radius_factor * scale around
/// kp_a, mapped through h, and the corresponding disk around kp_b.
inline double overlap_error(const Keypoint& kp_a, const Keypoint& kp_b,
                            const Homography& h,
                            double radius_factor = kDefaultMagnification) {
  const auto mapped = detail::map_disk(kp_a, radius_factor * kp_a.scale, h);
  return detail::rasterized_overlap_error(mapped, kp_b,
                                          radius_factor * kp_b.scale);
}

struct Correspondence {
  std::size_t index_a = 0;
  std::size_t index_b = 0;
  double overlap_error = 0.0;

  friend bool operator==(const Correspondence&, const Correspondence&) = default;
};

struct GroundTruth {
  std::vector<Correspondence> pairs;
  std::set<std::pair<std::size_t, std::size_t>> lookup;

  std::size_t size() const { return pairs.size(); }
  bool contains(std::size_t a, std::size_t b) const {
    return lookup.contains({a, b});
  }
};

/// Greedy one-to-one assignment in ascending overlap error (ties by a, then
/// b) among pairs whose error is below max_error.
inline GroundTruth ground_truth(std::span<const Keypoint> kps_a,
                                std::span<const Keypoint> kps_b,
                                const Homography& h,
                                double max_error = kDefaultMaxOverlapError,
                                double radius_factor = kDefaultMagnification) {
  std::vector<detail::MappedDisk> mapped;
  mapped.reserve(kps_a.size());
  for (const Keypoint& kp : kps_a) {
    mapped.push_back(detail::map_disk(kp, radius_factor * kp.scale, h));
  }

  std::vector<std::vector<Correspondence>> per_a(kps_a.size());
  parallel_for(kps_a.size(), [&](std::size_t i) {
    for (std::size_t j = 0; j < kps_b.size(); ++j) {
      const double rb = radius_factor * kps_b[j].scale;
      if (!mapped[i].bounds.intersects(detail::disk_box(kps_b[j], rb))) {
        continue;
      }
      // IoU <= smaller area / larger area; the 0.9 slack absorbs the
      // polygonal area approximation.
      const double area_b = std::numbers::pi * rb * rb;
      const double ratio = std::min(mapped[i].area, area_b) /
                           std::max(mapped[i].area, area_b);
      if (ratio < 0.9 * (1.0 - max_error)) continue;
      const double e = detail::rasterized_overlap_error(mapped[i], kps_b[j], rb);
      if (e < max_error) per_a[i].push_back({i, j, e});
    }
  });

  std::vector<Correspondence> candidates;
  for (auto& v : per_a) candidates.insert(candidates.end(), v.begin(), v.end());
  std::sort(candidates.begin(), candidates.end(),
            [](const Correspondence& x, const Correspondence& y) {
              if (x.overlap_error != y.overlap_error) {
                return x.overlap_error < y.overlap_error;
              }
              if (x.index_a != y.index_a) return x.index_a < y.index_a;
              return x.index_b < y.index_b;
            });

  GroundTruth gt;
  std::vector<char> used_a(kps_a.size(), 0), used_b(kps_b.size(), 0);
  for (const Correspondence& c : candidates) {
    if (used_a[c.index_a] || used_b[c.index_b]) continue;
    used_a[c.index_a] = used_b[c.index_b] = 1;
    gt.pairs.push_back(c);
    gt.lookup.insert({c.index_a, c.index_b});
  }
  return gt;
}

struct CurveSample {
  double threshold = 0.0;
  double recall = 0.0;
  double one_minus_precision = 0.0;
  std::size_t num_correct = 0;
  std::size_t num_false = 0;
};

struct EvaluationCurve {
  std::vector<CurveSample> samples;

  const CurveSample* at_threshold(double t) const {
    for (const auto& s : samples) {
      if (std::abs(s.threshold - t) < 1e-9) return &s;
    }
    return nullptr;
  }
};

/// 0.05, 0.10, ..., 1.00.
inline std::vector<double> default_ratio_thresholds() {
  std::vector<double> t;
  for (int k = 1; k <= 20; ++k) t.push_back(k * 0.05);
  return t;
}

/// Recall and 1-precision of the distance-ratio matcher at each threshold.
/// `nn` is the unthresholded output of nearest_neighbors. With no emitted
/// matches, 1-precision is 0.
inline EvaluationCurve pr_curve(std::span<const MatchPair> nn,
                                const GroundTruth& gt,
                                std::span<const double> thresholds) {
  if (gt.size() == 0) {
    throw InputError("ground truth is empty; recall is undefined");
  }
  EvaluationCurve curve;
  for (double t : thresholds) {
    require_ratio_threshold(t);
    CurveSample s;
    s.threshold = t;
    for (const MatchPair& m : nn) {
      if (!(m.distance_ratio < t)) continue;
      if (gt.contains(m.index_a, m.index_b)) {
        ++s.num_correct;
      } else {
        ++s.num_false;
      }
    }
    const std::size_t emitted = s.num_correct + s.num_false;
    s.recall = static_cast<double>(s.num_correct) / gt.size();
    s.one_minus_precision =
        emitted == 0 ? 0.0 : static_cast<double>(s.num_false) / emitted;
    curve.samples.push_back(s);
  }
  return curve;
}

inline EvaluationCurve pr_curve(std::span<const MatchPair> nn,
                                const GroundTruth& gt) {
  const auto t = default_ratio_thresholds();
  return pr_curve(nn, gt, t);
}

/// Area under R(x) on [0, 1], where R(x) is the best recall among samples
/// with 1-precision <= x (zero where no sample qualifies).
inline double curve_area(const EvaluationCurve& curve) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& s : curve.samples) {
    pts.emplace_back(s.one_minus_precision, s.recall);
  }
  std::sort(pts.begin(), pts.end());
  double area = 0.0;
  double best = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    best = std::max(best, pts[i].second);
    const double next = i + 1 < pts.size() ? pts[i + 1].first : 1.0;
    area += best * (next - pts[i].first);
  }
  return area;
}

/// Mean of precision@k over the ranks k that hold a relevant item.
inline double average_precision(std::span<const bool> ranked) {
  std::size_t hits = 0;
  double sum = 0.0;
  for (std::size_t k = 0; k < ranked.size(); ++k) {
    if (!ranked[k]) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(k + 1);
  }
  if (hits == 0) throw InputError("average precision needs a relevant item");
  return sum / static_cast<double>(hits);
}

inline double mean_average_precision(
    std::span<const std::vector<bool>> queries) {
  if (queries.empty()) throw InputError("no queries");
  double sum = 0.0;
  for (const auto& q : queries) {
    // vector<bool> is bit-packed; copy into contiguous storage.
    const auto flags = std::make_unique<bool[]>(q.size());
    std::copy(q.begin(), q.end(), flags.get());
    sum += average_precision(std::span<const bool>(flags.get(), q.size()));
  }
  return sum / static_cast<double>(queries.size());
}

}  // namespace dci
