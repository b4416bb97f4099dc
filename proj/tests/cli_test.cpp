#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dci/dci.hpp"
#include "oracles.hpp"

namespace dci {
namespace {

namespace fs = std::filesystem;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("dci_cli_" + std::string(info->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path path(const std::string& name) const { return dir_ / name; }

  int run(const std::string& args) {
    const std::string cmd = std::string("\"") + DCI_CLI_PATH + "\" " + args +
                            " >\"" + path("stdout").string() + "\" 2>\"" +
                            path("stderr").string() + "\"";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string slurp(const fs::path& p) const {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path save(const std::string& name, const GrayImage& img) const {
    std::ofstream out(path(name), std::ios::binary);
    write_pgm(out, img);
    return path(name);
  }

  fs::path save_keypoints(const std::string& name, const std::vector<Keypoint>& k) const {
    std::ofstream out(path(name));
    write_keypoints(out, k);
    return path(name);
  }

  DescriptorFile descriptors(const std::string& name) const {
    std::ifstream in(path(name), std::ios::binary);
    return read_descriptors(in);
  }

  std::string q(const fs::path& p) const { return "\"" + p.string() + "\""; }

  fs::path dir_;
};

struct Row {
  double threshold, recall, one_minus_precision;
};

std::vector<Row> read_curve(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    Row r{};
    char c;
    std::istringstream ls(line);
    ls >> r.threshold >> c >> r.recall >> c >> r.one_minus_precision;
    rows.push_back(r);
  }
  return rows;
}

GrayImage natural(const std::string& stem) {
  return read_image(fs::path(DCI_TEST_DATA_DIR) / "natural" / (stem + ".pgm"));
}

TEST_F(Cli, DetectConstantImageWritesEmptyFile) {
  const auto img = save("flat.pgm", GrayImage(80, 80, 100.0));
  ASSERT_EQ(run("detect " + q(img) + " --out " + q(path("kp.txt"))), 0);
  std::ifstream in(path("kp.txt"));
  EXPECT_TRUE(read_keypoints(in).empty());
  EXPECT_NE(slurp(path("stdout")).find("0"), std::string::npos);
}

TEST_F(Cli, DetectSingleBlob) {
  const auto img =
      save("blob.pgm", testing::gaussian_bump(101, 101, 50.3, 49.6, 4.0, 80.0, 60.0));
  ASSERT_EQ(run("detect " + q(img) + " --out " + q(path("kp.txt"))), 0);
  std::ifstream in(path("kp.txt"));
  const auto kps = read_keypoints(in);
  ASSERT_EQ(kps.size(), 1u);
  EXPECT_LT(std::hypot(kps[0].x - 50.3, kps[0].y - 49.6), 1.0);
}

TEST_F(Cli, MissingFileFails) {
  EXPECT_NE(run("detect " + q(path("nope.pgm"))), 0);
  EXPECT_NE(slurp(path("stderr")).find("error"), std::string::npos);
  EXPECT_FALSE(fs::exists(path("nope.txt")));
}

TEST_F(Cli, InvalidParameterFailsBeforeWork) {
  const auto img = save("flat.pgm", GrayImage(80, 80, 100.0));
  EXPECT_NE(run("detect " + q(img) + " --scales 1"), 0);
  const auto kp = save_keypoints("kp.txt", {});
  EXPECT_NE(run("describe " + q(img) + " " + q(kp) + " --side 30"), 0);
}

TEST_F(Cli, DescribeNoKeypointsGivesHeaderOnly) {
  const auto img = save("flat.pgm", GrayImage(40, 40, 10.0));
  const auto kp = save_keypoints("kp.txt", {});
  ASSERT_EQ(run("describe " + q(img) + " " + q(kp) + " --out " + q(path("d.txt"))), 0);
  EXPECT_EQ(slurp(path("d.txt")), "DCI 128 0 oriented\n");
}

TEST_F(Cli, DescribeIsDeterministic) {
  const auto img = save("tex.pgm", testing::blob_texture(120, 120, 30, 3));
  ASSERT_EQ(run("detect " + q(img) + " --out " + q(path("kp.txt"))), 0);
  const std::string kp = q(path("kp.txt"));
  for (const char* extra : {"", " --binary"}) {
    ASSERT_EQ(run("describe " + q(img) + " " + kp + extra + " --out " + q(path("a"))), 0);
    ASSERT_EQ(run("describe " + q(img) + " " + kp + extra + " --out " + q(path("b"))), 0);
    EXPECT_EQ(slurp(path("a")), slurp(path("b")));
    EXPECT_FALSE(descriptors("a").records.empty());
  }
}

TEST_F(Cli, DescribeInvertedImageUpright) {
  const auto tex = testing::blob_texture(120, 120, 30, 8);
  const auto img = save("tex.pgm", tex);
  const auto inv = save("inv.pgm", invert(tex));
  ASSERT_EQ(run("detect " + q(img) + " --out " + q(path("kp.txt"))), 0);
  const std::string kp = q(path("kp.txt"));
  ASSERT_EQ(run("describe " + q(img) + " " + kp + " --mode upright --out " + q(path("a"))), 0);
  ASSERT_EQ(run("describe " + q(inv) + " " + kp + " --mode upright --out " + q(path("b"))), 0);
  const auto a = descriptors("a"), b = descriptors("b");
  ASSERT_EQ(a.records.size(), b.records.size());
  ASSERT_FALSE(a.records.empty());
  for (std::size_t i = 0; i < a.records.size(); ++i)
    for (int k = 0; k < kDescriptorSize; ++k)
      EXPECT_LT(std::abs(a.records[i].descriptor.values[k] -
                         b.records[i].descriptor.values[k]),
                1e-6);
}

TEST_F(Cli, DescribeSkipsOutOfBoundsKeypoint) {
  const auto img = save("tex.pgm", testing::blob_texture(80, 80, 20, 1));
  const auto kp = save_keypoints(
      "kp.txt", {{40, 40, 2, 0, 0}, {200, 10, 2, 0, 0}, {30, 50, 3, 1, 0}});
  ASSERT_EQ(run("describe " + q(img) + " " + q(kp) + " --out " + q(path("d.txt"))), 0);
  const auto f = descriptors("d.txt");
  ASSERT_EQ(f.records.size(), 2u);
  EXPECT_EQ(f.records[1].keypoint.x, 30.0);
  const std::string err = slurp(path("stderr"));
  EXPECT_NE(err.find("warning"), std::string::npos);
  EXPECT_NE(err.find("skipped 1"), std::string::npos);
}

TEST_F(Cli, MatchSelfGivesIdentityAndAgreesWithLibrary) {
  const auto tex = testing::blob_texture(120, 120, 30, 5);
  const auto img = save("tex.pgm", tex);
  ASSERT_EQ(run("detect " + q(img) + " --out " + q(path("kp.txt"))), 0);
  ASSERT_EQ(run("describe " + q(img) + " " + q(path("kp.txt")) + " --out " + q(path("d.txt"))), 0);
  ASSERT_EQ(run("match " + q(path("d.txt")) + " " + q(path("d.txt")) + " --out " +
                q(path("m.csv"))),
            0);
  const auto descs = descriptors("d.txt").descriptors();
  const auto expected = match_ratio(descs, descs, 0.8);
  std::ostringstream want;
  write_matches_csv(want, expected);
  EXPECT_EQ(slurp(path("m.csv")), want.str());
  std::size_t live = 0;
  for (const auto& d : descs) live += !d.degenerate;
  ASSERT_EQ(expected.size(), live);
  for (const auto& m : expected) EXPECT_EQ(m.index_a, m.index_b);
}

TEST_F(Cli, MatchNeedsTwoReferences) {
  DescriptorFile one{DescriptorKind::Dci, FlipMode::Oriented, {}};
  DescriptorRecord r;
  r.descriptor.values[0] = 1.0;
  one.records.push_back(r);
  {
    std::ofstream out(path("one.txt"));
    write_descriptors_text(out, one);
  }
  EXPECT_NE(run("match " + q(path("one.txt")) + " " + q(path("one.txt"))), 0);
}

TEST_F(Cli, EvaluateScenarios) {
  const GrayImage img = natural("coins");
  const auto a = save("a.pgm", img);
  const auto inv = save("inv.pgm", invert(img));
  const auto rot = save("rot.pgm", rotate_quarter_turns(img, 2));
  {
    std::ofstream h(path("id.txt"));
    write_homography(h, Homography::identity());
    std::ofstream r(path("rot.txt"));
    write_homography(r, Homography::quarter_turns(2, img.width(), img.height()));
  }
  auto curve = [&](const fs::path& b, const char* h, const std::string& extra) {
    EXPECT_EQ(run("evaluate " + q(a) + " " + q(b) + " " + q(path(h)) + extra +
                  " --out " + q(path("c.csv"))),
              0);
    return read_curve(slurp(path("c.csv")));
  };

  const auto self = curve(a, "id.txt", "");
  ASSERT_EQ(self.size(), 20u);
  EXPECT_DOUBLE_EQ(self.back().recall, 1.0);
  EXPECT_NEAR(self.back().one_minus_precision, 0.0, 1e-9);
  EXPECT_NE(slurp(path("stdout")).find("correspondences"), std::string::npos);

  const auto rotated = curve(rot, "rot.txt", "");
  ASSERT_EQ(rotated.size(), 20u);
  EXPECT_NEAR(rotated[15].threshold, 0.8, 1e-9);
  EXPECT_NEAR(rotated[15].recall, self[15].recall, 0.05);

  const auto dci = curve(inv, "id.txt", "");
  const auto hog = curve(inv, "id.txt", " --kind hog");
  ASSERT_EQ(dci.size(), hog.size());
  for (std::size_t i = 0; i < dci.size(); ++i) EXPECT_GE(dci[i].recall, hog[i].recall);
  EXPECT_GT(dci.back().recall, hog.back().recall);
}

TEST_F(Cli, StatsSingleImageMatchesLibrary) {
  const auto tex = testing::blob_texture(160, 160, 60, 2);
  fs::create_directories(path("corpus"));
  const auto saved = save("corpus/only.pgm", tex);
  ASSERT_EQ(run("stats " + q(path("corpus")) + " --out " + q(path("s.csv"))), 0);
  const std::vector<GrayImage> images{read_image(saved)};
  std::ostringstream want;
  write_mean_histograms_csv(want, corpus_mean_histograms(images, {}, {}));
  EXPECT_EQ(slurp(path("s.csv")), want.str());
}

TEST_F(Cli, StatsEmptyDirectoryFails) {
  fs::create_directories(path("empty"));
  EXPECT_NE(run("stats " + q(path("empty"))), 0);
}

TEST_F(Cli, StatsNaturalCorpusOrdering) {
  ASSERT_EQ(run("stats " + q(fs::path(DCI_TEST_DATA_DIR) / "natural") + " --out " +
                q(path("s.csv"))),
            0);
  std::istringstream in(slurp(path("s.csv")));
  std::string line;
  std::getline(in, line);
  std::vector<double> hog, holg;
  while (std::getline(in, line)) {
    int bin;
    double h, l;
    char c;
    std::istringstream ls(line);
    if (ls >> bin >> c >> h >> c >> l) {
      hog.push_back(h);
      holg.push_back(l);
    }
  }
  ASSERT_EQ(hog.size(), 8u);
  EXPECT_LT(holg[0] / holg[1], hog[0] / hog[1]);
}

}  // namespace
}  // namespace dci
