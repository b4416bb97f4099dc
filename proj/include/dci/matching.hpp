#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "dci/descriptor.hpp"
#include "dci/parallel.hpp"

namespace dci {

struct MatchPair {
  std::size_t index_a = 0;
  std::size_t index_b = 0;
  double distance = 0.0;        // to the nearest neighbour
  double distance_ratio = 0.0;  // nearest / second nearest, <= 1

  friend bool operator==(const MatchPair&, const MatchPair&) = default;
};

inline double descriptor_distance(const Descriptor& a, const Descriptor& b) {
  double sq = 0.0;
  for (int i = 0; i < kDescriptorSize; ++i) {
    const double d = a.values[i] - b.values[i];
    sq += d * d;
  }
  return std::sqrt(sq);
}

/// Exhaustive first/second nearest neighbour in `descs_b` for every
/// non-degenerate query in `descs_a`, ordered by query index. Equal
/// distances resolve to the lower index. When both neighbours sit at
/// distance 0 the ratio is 1 (the match is ambiguous).
inline std::vector<MatchPair> nearest_neighbors(
    std::span<const Descriptor> descs_a, std::span<const Descriptor> descs_b) {
  std::vector<std::size_t> candidates;
  for (std::size_t j = 0; j < descs_b.size(); ++j) {
    if (!descs_b[j].degenerate) candidates.push_back(j);
  }
  if (candidates.size() < 2) {
    throw InputError("matching needs at least 2 non-degenerate reference "
                     "descriptors");
  }

  std::vector<MatchPair> slots(descs_a.size());
  std::vector<char> used(descs_a.size(), 0);
  parallel_for(descs_a.size(), [&](std::size_t i) {
    if (descs_a[i].degenerate) return;
    double best = std::numeric_limits<double>::infinity();
    double second = best;
    std::size_t best_index = 0;
    for (std::size_t j : candidates) {
      const double d = descriptor_distance(descs_a[i], descs_b[j]);
      if (d < best) {
        second = best;
        best = d;
        best_index = j;
      } else if (d < second) {
        second = d;
      }
    }
    slots[i] = {i, best_index, best, second > 0.0 ? best / second : 1.0};
    used[i] = 1;
  });

  std::vector<MatchPair> out;
  out.reserve(slots.size());
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (used[i]) out.push_back(slots[i]);
  }
  return out;
}

inline void require_ratio_threshold(double ratio_threshold) {
  if (!(ratio_threshold > 0.0 && ratio_threshold <= 1.0)) {
    throw InputError("ratio threshold must be in (0, 1]");
  }
}

/// Nearest-neighbour distance-ratio matching: a pair is kept iff
/// d1 / d2 < ratio_threshold. Degenerate descriptors never match.
inline std::vector<MatchPair> match_ratio(std::span<const Descriptor> descs_a,
                                          std::span<const Descriptor> descs_b,
                                          double ratio_threshold) {
  require_ratio_threshold(ratio_threshold);
  std::vector<MatchPair> out;
  for (const MatchPair& m : nearest_neighbors(descs_a, descs_b)) {
    if (m.distance_ratio < ratio_threshold) out.push_back(m);
  }
  return out;
}

}  // namespace dci
