#pragma once

#include <algorithm>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dci/descriptor.hpp"
#include "dci/detector.hpp"
#include "dci/evaluation.hpp"
#include "dci/io.hpp"
#include "dci/matching.hpp"
#include "dci/parallel.hpp"

namespace dci {

/// Detected keypoints with their dominant orientations filled in.
inline std::vector<Keypoint> detect_oriented(const GrayImage& image,
                                             const DetectorParams& params = {}) {
  std::vector<Keypoint> kps = detect_log(image, params);
  assign_orientations(image, kps);
  return kps;
}

inline bool keypoint_inside(const GrayImage& image, const Keypoint& kp) {
  return kp.x >= 0.0 && kp.y >= 0.0 && kp.x <= image.width() - 1.0 &&
         kp.y <= image.height() - 1.0;
}

/// One descriptor per keypoint, order preserved. Keypoints whose centre is
/// outside the image yield nullopt.
inline std::vector<std::optional<Descriptor>> describe_all(
    const GrayImage& image, std::span<const Keypoint> keypoints,
    DescriptorKind kind, FlipMode mode, const DescriptorParams& params = {}) {
  std::vector<std::optional<Descriptor>> out(keypoints.size());
  parallel_for(keypoints.size(), [&](std::size_t i) {
    if (!keypoint_inside(image, keypoints[i])) return;
    out[i] = describe(kind, image, keypoints[i], mode, params);
  });
  return out;
}

struct EvaluationConfig {
  DescriptorKind kind = DescriptorKind::Dci;
  FlipMode mode = FlipMode::Oriented;
  DescriptorParams descriptor;
  DetectorParams detector;
  double max_overlap_error = kDefaultMaxOverlapError;
  std::vector<double> thresholds = default_ratio_thresholds();
};

struct EvaluationResult {
  EvaluationCurve curve;
  std::size_t correspondences = 0;
  std::size_t keypoints_a = 0;
  std::size_t keypoints_b = 0;
  double area = 0.0;
};

/// detect -> describe -> nearest neighbours -> overlap ground truth ->
/// recall / 1-precision sweep. Evaluation regions use the descriptor's
/// magnification so they cover exactly the described area.
inline EvaluationResult evaluate_pair(const GrayImage& image_a,
                                      const GrayImage& image_b,
                                      const Homography& h,
                                      const EvaluationConfig& config = {}) {
  const auto kps_a = detect_oriented(image_a, config.detector);
  const auto kps_b = detect_oriented(image_b, config.detector);

  auto collect = [&](const GrayImage& image, std::span<const Keypoint> kps) {
    std::vector<Descriptor> descs;
    descs.reserve(kps.size());
    for (auto& d : describe_all(image, kps, config.kind, config.mode,
                                config.descriptor)) {
      descs.push_back(d.value_or(Descriptor::zero()));
    }
    return descs;
  };
  const auto descs_a = collect(image_a, kps_a);
  const auto descs_b = collect(image_b, kps_b);

  const GroundTruth gt =
      ground_truth(kps_a, kps_b, h, config.max_overlap_error,
                   config.descriptor.magnification);
  const auto nn = nearest_neighbors(descs_a, descs_b);

  EvaluationResult result;
  result.curve = pr_curve(nn, gt, config.thresholds);
  result.correspondences = gt.size();
  result.keypoints_a = kps_a.size();
  result.keypoints_b = kps_b.size();
  result.area = curve_area(result.curve);
  return result;
}

/// Netpbm files (.pgm .ppm .pnm) in a directory, sorted by name.
inline std::vector<std::filesystem::path> list_images(
    const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw InputError("'" + dir.string() + "' is not a directory");
  }
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") {
      out.push_back(entry.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Mean HoG / HoLG orientation histograms over every oriented keypoint
/// detected in a set of images.
inline MeanHistograms corpus_mean_histograms(
    std::span<const GrayImage> images, const DetectorParams& detector = {},
    const DescriptorParams& descriptor = {}) {
  if (images.empty()) throw InputError("corpus is empty");
  std::vector<CorpusImage> corpus(images.size());
  parallel_for(images.size(), [&](std::size_t i) {
    corpus[i].image = &images[i];
    corpus[i].keypoints = detect_oriented(images[i], detector);
  });
  return mean_histograms(corpus, descriptor);
}

}  // namespace dci
