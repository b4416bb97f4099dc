#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "dci/descriptor.hpp"
#include "dci/evaluation.hpp"
#include "dci/image.hpp"
#include "dci/keypoint.hpp"
#include "dci/matching.hpp"

namespace dci {

// ---------------------------------------------------------------------------
// Netpbm images. P2/P5 grayscale and P3/P6 colour (converted to luma
// 0.299 R + 0.587 G + 0.114 B). Samples are rescaled to [0, 255] when
// maxval != 255.

namespace detail {

/// Next whitespace-delimited header token, skipping '#' comments.
inline std::string pnm_token(std::istream& in) {
  std::string token;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      if (!token.empty()) break;
      continue;
    }
    if (std::isspace(c)) {
      if (!token.empty()) break;
      continue;
    }
    token.push_back(static_cast<char>(c));
  }
  if (token.empty()) throw InputError("truncated PNM header");
  return token;
}

inline int pnm_int(std::istream& in) {
  const std::string t = pnm_token(in);
  try {
    std::size_t used = 0;
    const int v = std::stoi(t, &used);
    if (used != t.size() || v < 0) throw InputError("bad PNM value '" + t + "'");
    return v;
  } catch (const std::logic_error&) {
    throw InputError("bad PNM value '" + t + "'");
  }
}

}  // namespace detail

inline GrayImage read_pnm(std::istream& in) {
  const std::string magic = detail::pnm_token(in);
  if (magic != "P2" && magic != "P5" && magic != "P3" && magic != "P6") {
    throw InputError("unsupported image format '" + magic +
                     "' (expected PGM P2/P5 or PPM P3/P6)");
  }
  const bool binary = magic == "P5" || magic == "P6";
  const int channels = (magic == "P3" || magic == "P6") ? 3 : 1;
  const int width = detail::pnm_int(in);
  const int height = detail::pnm_int(in);
  const int maxval = detail::pnm_int(in);
  if (width <= 0 || height <= 0) throw InputError("PNM has zero size");
  if (maxval <= 0 || maxval > 65535) throw InputError("PNM maxval out of range");

  const std::size_t count = static_cast<std::size_t>(width) * height * channels;
  std::vector<double> samples(count);
  if (binary) {
    const int bytes = maxval < 256 ? 1 : 2;
    std::vector<unsigned char> raw(count * bytes);
    in.read(reinterpret_cast<char*>(raw.data()),
            static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
      throw InputError("truncated PNM pixel data");
    }
    for (std::size_t i = 0; i < count; ++i) {
      samples[i] = bytes == 1 ? raw[i] : (raw[2 * i] << 8 | raw[2 * i + 1]);
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) samples[i] = detail::pnm_int(in);
  }

  const double scale = 255.0 / maxval;
  GrayImage image(width, height);
  auto px = image.values();
  for (std::size_t i = 0; i < px.size(); ++i) {
    double v;
    if (channels == 1) {
      v = samples[i];
    } else {
      v = 0.299 * samples[3 * i] + 0.587 * samples[3 * i + 1] +
          0.114 * samples[3 * i + 2];
    }
    if (v > maxval) throw InputError("PNM sample exceeds maxval");
    px[i] = maxval == 255 ? v : v * scale;
  }
  return image;
}

inline GrayImage read_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open image '" + path.string() + "'");
  return read_pnm(in);
}

/// Binary P5, intensities rounded and clamped to [0, 255].
inline void write_pgm(std::ostream& out, const GrayImage& image) {
  out << "P5\n" << image.width() << ' ' << image.height() << "\n255\n";
  std::vector<unsigned char> raw(image.size());
  auto px = image.values();
  for (std::size_t i = 0; i < raw.size(); ++i) {
    raw[i] = static_cast<unsigned char>(std::clamp(std::lround(px[i]), 0L, 255L));
  }
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size()));
}

// ---------------------------------------------------------------------------
// Keypoint file: one "x y scale orientation response" line per keypoint,
// '#' lines and blank lines ignored.

inline void write_keypoints(std::ostream& out, std::span<const Keypoint> kps) {
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const Keypoint& kp : kps) {
    out << kp.x << ' ' << kp.y << ' ' << kp.scale << ' ' << kp.orientation
        << ' ' << kp.response << '\n';
  }
}

inline std::vector<Keypoint> read_keypoints(std::istream& in) {
  std::vector<Keypoint> kps;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    Keypoint kp;
    if (!(ls >> kp.x >> kp.y >> kp.scale >> kp.orientation >> kp.response)) {
      throw InputError("keypoint line " + std::to_string(lineno) +
                       ": expected 'x y scale orientation response'");
    }
    std::string extra;
    if (ls >> extra) {
      throw InputError("keypoint line " + std::to_string(lineno) +
                       ": trailing data");
    }
    kps.push_back(kp);
  }
  return kps;
}

// ---------------------------------------------------------------------------
// Descriptor files.
//
// Text:   "DCI 128 <count> <mode>" (HOG for the baseline), then per keypoint
//         "x y scale orientation d1 ... d128". Degenerate descriptors are
//         stored as 128 zeros; an all-zero record reads back as degenerate.
// Binary: magic "DCIB", u32 version (1), u32 dimension (128), u32 count,
//         u8 kind (0 dci, 1 hog), u8 mode (0 upright, 1 oriented), 2 zero
//         bytes, then per keypoint 132 little-endian float32 values in the
//         same order as the text form.

struct DescriptorRecord {
  Keypoint keypoint;
  Descriptor descriptor;
};

struct DescriptorFile {
  DescriptorKind kind = DescriptorKind::Dci;
  FlipMode mode = FlipMode::Upright;
  std::vector<DescriptorRecord> records;

  std::vector<Descriptor> descriptors() const {
    std::vector<Descriptor> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.descriptor);
    return out;
  }
  std::vector<Keypoint> keypoints() const {
    std::vector<Keypoint> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.keypoint);
    return out;
  }
};

inline constexpr std::array<char, 4> kBinaryDescriptorMagic = {'D', 'C', 'I',
                                                               'B'};

namespace detail {
inline void mark_degenerate(Descriptor& d) {
  d.degenerate = std::all_of(d.values.begin(), d.values.end(),
                             [](double v) { return v == 0.0; });
}

inline void put_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v),
                              static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}
inline void put_f32(std::ostream& out, double v) {
  put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}
inline std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (in.gcount() != 4) throw InputError("truncated binary descriptor file");
  return std::uint32_t{b[0]} | std::uint32_t{b[1]} << 8 |
         std::uint32_t{b[2]} << 16 | std::uint32_t{b[3]} << 24;
}
inline double get_f32(std::istream& in) {
  return std::bit_cast<float>(get_u32(in));
}
}  // namespace detail

inline void write_descriptors_text(std::ostream& out,
                                   const DescriptorFile& file) {
  out << (file.kind == DescriptorKind::Dci ? "DCI" : "HOG") << ' '
      << kDescriptorSize << ' ' << file.records.size() << ' '
      << to_string(file.mode) << '\n';
  for (const auto& r : file.records) {
    out << std::setprecision(std::numeric_limits<double>::max_digits10)
        << r.keypoint.x << ' ' << r.keypoint.y << ' ' << r.keypoint.scale
        << ' ' << r.keypoint.orientation << std::setprecision(9);
    for (double v : r.descriptor.values) out << ' ' << v;
    out << '\n';
  }
}

inline void write_descriptors_binary(std::ostream& out,
                                     const DescriptorFile& file) {
  out.write(kBinaryDescriptorMagic.data(), 4);
  detail::put_u32(out, 1);
  detail::put_u32(out, kDescriptorSize);
  detail::put_u32(out, static_cast<std::uint32_t>(file.records.size()));
  const char flags[4] = {file.kind == DescriptorKind::Dci ? '\0' : '\1',
                         file.mode == FlipMode::Upright ? '\0' : '\1', '\0',
                         '\0'};
  out.write(flags, 4);
  for (const auto& r : file.records) {
    detail::put_f32(out, r.keypoint.x);
    detail::put_f32(out, r.keypoint.y);
    detail::put_f32(out, r.keypoint.scale);
    detail::put_f32(out, r.keypoint.orientation);
    for (double v : r.descriptor.values) detail::put_f32(out, v);
  }
}

/// Reads either form; the binary one is recognised by its magic.
inline DescriptorFile read_descriptors(std::istream& in) {
  DescriptorFile file;
  char magic[4] = {};
  in.read(magic, 4);
  if (in.gcount() == 4 &&
      std::memcmp(magic, kBinaryDescriptorMagic.data(), 4) == 0) {
    if (detail::get_u32(in) != 1) throw InputError("unknown binary version");
    if (detail::get_u32(in) != kDescriptorSize) {
      throw InputError("descriptor dimension must be 128");
    }
    const std::uint32_t count = detail::get_u32(in);
    char flags[4];
    in.read(flags, 4);
    if (in.gcount() != 4 || flags[0] > 1 || flags[1] > 1) {
      throw InputError("bad binary descriptor header");
    }
    file.kind = flags[0] ? DescriptorKind::Hog : DescriptorKind::Dci;
    file.mode = flags[1] ? FlipMode::Oriented : FlipMode::Upright;
    file.records.resize(count);
    for (auto& r : file.records) {
      r.keypoint.x = detail::get_f32(in);
      r.keypoint.y = detail::get_f32(in);
      r.keypoint.scale = detail::get_f32(in);
      r.keypoint.orientation = detail::get_f32(in);
      for (double& v : r.descriptor.values) v = detail::get_f32(in);
      detail::mark_degenerate(r.descriptor);
    }
    return file;
  }

  in.clear();
  in.seekg(0);
  std::string header;
  if (!std::getline(in, header)) throw InputError("empty descriptor file");
  std::istringstream hs(header);
  std::string tag, mode;
  int dims = 0;
  std::size_t count = 0;
  if (!(hs >> tag >> dims >> count >> mode) || (tag != "DCI" && tag != "HOG")) {
    throw InputError("bad descriptor header '" + header + "'");
  }
  if (dims != kDescriptorSize) throw InputError("descriptor dimension must be 128");
  file.kind = tag == "DCI" ? DescriptorKind::Dci : DescriptorKind::Hog;
  file.mode = parse_flip_mode(mode);
  file.records.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::string line;
    if (!std::getline(in, line)) {
      throw InputError("descriptor file has fewer records than its header");
    }
    std::istringstream ls(line);
    auto& r = file.records[i];
    ls >> r.keypoint.x >> r.keypoint.y >> r.keypoint.scale >>
        r.keypoint.orientation;
    for (double& v : r.descriptor.values) ls >> v;
    if (!ls) {
      throw InputError("descriptor record " + std::to_string(i) + " is short");
    }
    detail::mark_degenerate(r.descriptor);
  }
  return file;
}

// ---------------------------------------------------------------------------
// Homography: 3 lines of 3 whitespace-separated reals.

inline Homography read_homography(std::istream& in) {
  std::array<double, 9> m{};
  for (double& v : m) {
    if (!(in >> v)) throw InputError("homography needs 9 numbers");
  }
  std::string extra;
  if (in >> extra) throw InputError("trailing data after homography");
  return Homography(m);
}

inline void write_homography(std::ostream& out, const Homography& h) {
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (int r = 0; r < 3; ++r) {
    out << h(r, 0) << ' ' << h(r, 1) << ' ' << h(r, 2) << '\n';
  }
}

// ---------------------------------------------------------------------------
// CSV outputs.

inline void write_curve_csv(std::ostream& out, const EvaluationCurve& curve) {
  out << "threshold,recall,one_minus_precision,correct,false\n";
  out << std::setprecision(9);
  for (const auto& s : curve.samples) {
    out << s.threshold << ',' << s.recall << ',' << s.one_minus_precision
        << ',' << s.num_correct << ',' << s.num_false << '\n';
  }
}

inline void write_matches_csv(std::ostream& out,
                              std::span<const MatchPair> matches) {
  out << "index_a,index_b,distance,ratio\n";
  out << std::setprecision(9);
  for (const auto& m : matches) {
    out << m.index_a << ',' << m.index_b << ',' << m.distance << ','
        << m.distance_ratio << '\n';
  }
}

inline void write_mean_histograms_csv(std::ostream& out,
                                      const MeanHistograms& h) {
  out << "bin,hog,holg\n";
  out << std::setprecision(9);
  for (int b = 0; b < kOrientationBins; ++b) {
    out << b << ',' << h.hog[b] << ',' << h.holg[b] << '\n';
  }
}

/// Writes `bytes` to a sibling temporary file, then renames it over `path`.
inline void write_file_atomic(const std::filesystem::path& path,
                              const std::string& bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write '" + tmp.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.close();
    if (!out) throw InputError("failed writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw InputError("cannot move output into place: " + ec.message());
  }
}

}  // namespace dci
