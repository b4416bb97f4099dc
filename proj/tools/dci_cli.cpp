// Command-line front end: detect, describe, match, evaluate, stats.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "dci/dci.hpp"

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string image;
  std::string image_b;
  std::string keypoints;
  std::string desc_a;
  std::string desc_b;
  std::string homography;
  std::string corpus;
  std::string out;
  std::string kind = "dci";
  std::string mode = "oriented";
  double ratio = 0.8;
  int side = dci::kDefaultPatchSide;
  double magnification = dci::kDefaultMagnification;
  bool binary = false;
  dci::DetectorParams detector;
};

dci::DescriptorParams descriptor_params(const Options& o) {
  if (o.side < 2 * dci::kGridCells + 1 || o.side % 2 == 0) {
    throw dci::InputError("--side must be odd and >= 9");
  }
  if (!(o.magnification > 0.0)) throw dci::InputError("--mag must be > 0");
  return {o.side, o.magnification};
}

/// "-" or empty writes to stdout; anything else is written atomically.
void emit(const std::string& path, const std::string& bytes) {
  if (path.empty() || path == "-") {
    std::cout.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    std::cout.flush();
  } else {
    dci::write_file_atomic(path, bytes);
  }
}

dci::DescriptorFile load_descriptors(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw dci::InputError("cannot open descriptor file '" + path + "'");
  return dci::read_descriptors(in);
}

int cmd_detect(const Options& o) {
  const dci::GrayImage image = dci::read_image(o.image);
  const auto kps = dci::detect_oriented(image, o.detector);
  std::ostringstream ss;
  ss << "# x y scale orientation response\n";
  dci::write_keypoints(ss, kps);
  emit(o.out, ss.str());
  (o.out.empty() || o.out == "-" ? std::cerr : std::cout)
      << kps.size() << " keypoints\n";
  return 0;
}

int cmd_describe(const Options& o) {
  const auto params = descriptor_params(o);
  const auto kind = dci::parse_descriptor_kind(o.kind);
  const auto mode = dci::parse_flip_mode(o.mode);
  const dci::GrayImage image = dci::read_image(o.image);
  std::ifstream kin(o.keypoints);
  if (!kin) throw dci::InputError("cannot open keypoints '" + o.keypoints + "'");
  const auto kps = dci::read_keypoints(kin);

  const auto descs = dci::describe_all(image, kps, kind, mode, params);
  dci::DescriptorFile file{kind, mode, {}};
  std::size_t skipped = 0, degenerate = 0;
  for (std::size_t i = 0; i < kps.size(); ++i) {
    if (!descs[i]) {
      std::cerr << "warning: keypoint " << i << " (" << kps[i].x << ", "
                << kps[i].y << ") is outside the image, skipped\n";
      ++skipped;
      continue;
    }
    degenerate += descs[i]->degenerate;
    file.records.push_back({kps[i], *descs[i]});
  }
  std::ostringstream ss;
  if (o.binary) {
    dci::write_descriptors_binary(ss, file);
  } else {
    dci::write_descriptors_text(ss, file);
  }
  emit(o.out, ss.str());
  std::cerr << "described " << file.records.size() << ", skipped " << skipped
            << ", degenerate " << degenerate << '\n';
  return 0;
}

int cmd_match(const Options& o) {
  dci::require_ratio_threshold(o.ratio);
  const auto a = load_descriptors(o.desc_a).descriptors();
  const auto b = load_descriptors(o.desc_b).descriptors();
  const auto matches = dci::match_ratio(a, b, o.ratio);
  std::ostringstream ss;
  dci::write_matches_csv(ss, matches);
  emit(o.out, ss.str());
  return 0;
}

int cmd_evaluate(const Options& o) {
  dci::EvaluationConfig config;
  config.kind = dci::parse_descriptor_kind(o.kind);
  config.mode = dci::parse_flip_mode(o.mode);
  config.descriptor = descriptor_params(o);
  config.detector = o.detector;
  const dci::GrayImage a = dci::read_image(o.image);
  const dci::GrayImage b = dci::read_image(o.image_b);
  std::ifstream hin(o.homography);
  if (!hin) throw dci::InputError("cannot open homography '" + o.homography + "'");
  const dci::Homography h = dci::read_homography(hin);

  const auto result = dci::evaluate_pair(a, b, h, config);
  std::ostringstream ss;
  dci::write_curve_csv(ss, result.curve);
  emit(o.out, ss.str());
  auto& log = (o.out.empty() || o.out == "-") ? std::cerr : std::cout;
  log << "keypoints: " << result.keypoints_a << " / " << result.keypoints_b
      << "\ncorrespondences: " << result.correspondences
      << "\narea: " << result.area << '\n';
  return 0;
}

int cmd_stats(const Options& o) {
  const auto params = descriptor_params(o);
  std::vector<dci::GrayImage> images;
  for (const auto& p : dci::list_images(o.corpus)) {
    images.push_back(dci::read_image(p));
  }
  if (images.empty()) {
    throw dci::InputError("no .pgm/.ppm images in '" + o.corpus + "'");
  }
  const auto mean = dci::corpus_mean_histograms(images, o.detector, params);
  std::ostringstream ss;
  dci::write_mean_histograms_csv(ss, mean);
  emit(o.out, ss.str());
  (o.out.empty() || o.out == "-" ? std::cerr : std::cout)
      << mean.count << " keypoints from " << images.size() << " images\n";
  return 0;
}

void add_detector_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--scales", o.detector.num_scales, "Number of LoG scales")
      ->capture_default_str();
  cmd->add_option("--sigma-min", o.detector.sigma_min, "Smallest sigma")
      ->capture_default_str();
  cmd->add_option("--sigma-step", o.detector.sigma_step,
                  "Ratio between consecutive sigmas")
      ->capture_default_str();
  cmd->add_option("--threshold", o.detector.response_threshold,
                  "Minimum |LoG| response on [0,1] intensities")
      ->capture_default_str();
}

void add_descriptor_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--kind", o.kind, "Descriptor kind")
      ->check(CLI::IsMember({"dci", "hog"}))
      ->capture_default_str();
  cmd->add_option("--mode", o.mode, "Patch alignment / flip mode")
      ->check(CLI::IsMember({"upright", "oriented"}))
      ->capture_default_str();
  cmd->add_option("--side", o.side, "Patch side in pixels (odd)")
      ->capture_default_str();
  cmd->add_option("--mag", o.magnification,
                  "Patch half-width in units of keypoint scale")
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DCI local feature descriptor tools"};
  app.require_subcommand(1);
  Options o;

  auto* detect = app.add_subcommand("detect", "Detect LoG keypoints");
  detect->add_option("image", o.image, "Input PGM/PPM")->required();
  detect->add_option("--out", o.out, "Keypoint file (default stdout)");
  add_detector_flags(detect, o);

  auto* describe = app.add_subcommand("describe", "Describe keypoints");
  describe->add_option("image", o.image, "Input PGM/PPM")->required();
  describe->add_option("keypoints", o.keypoints, "Keypoint file")->required();
  describe->add_option("--out", o.out, "Descriptor file (default stdout)");
  describe->add_flag("--binary", o.binary, "Write the binary format");
  add_descriptor_flags(describe, o);

  auto* match = app.add_subcommand("match", "Distance-ratio matching");
  match->add_option("desc_a", o.desc_a, "Query descriptor file")->required();
  match->add_option("desc_b", o.desc_b, "Reference descriptor file")->required();
  match->add_option("--ratio", o.ratio, "Distance ratio threshold")
      ->capture_default_str();
  match->add_option("--out", o.out, "Match CSV (default stdout)");

  auto* evaluate = app.add_subcommand(
      "evaluate", "Recall vs 1-precision for an image pair");
  evaluate->add_option("image_a", o.image, "First image")->required();
  evaluate->add_option("image_b", o.image_b, "Second image")->required();
  evaluate->add_option("homography", o.homography, "3x3 homography a -> b")
      ->required();
  evaluate->add_option("--out", o.out, "Curve CSV (default stdout)");
  add_descriptor_flags(evaluate, o);
  add_detector_flags(evaluate, o);

  auto* stats = app.add_subcommand(
      "stats", "Mean HoG / HoLG orientation histograms over a corpus");
  stats->add_option("corpus_dir", o.corpus, "Directory of PGM/PPM images")
      ->required();
  stats->add_option("--out", o.out, "CSV (default stdout)");
  stats->add_option("--side", o.side, "Patch side in pixels (odd)")
      ->capture_default_str();
  stats->add_option("--mag", o.magnification,
                    "Patch half-width in units of keypoint scale")
      ->capture_default_str();
  add_detector_flags(stats, o);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*detect) return cmd_detect(o);
    if (*describe) return cmd_describe(o);
    if (*match) return cmd_match(o);
    if (*evaluate) return cmd_evaluate(o);
    if (*stats) return cmd_stats(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
