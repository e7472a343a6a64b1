#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "nnmass/datasets.hpp"
#include "nnmass/error.hpp"
#include "support/oracles.hpp"

using namespace nnmass;

namespace {

// Minimal valid IDX pair: two 3x2 images and two labels.
void write_fixture(const std::string& images_path, const std::string& labels_path,
                   const std::vector<uint8_t>& pixels,
                   const std::vector<uint8_t>& labels) {
  auto be32 = [](std::ofstream& out, uint32_t v) {
    uint8_t b[4] = {static_cast<uint8_t>(v >> 24), static_cast<uint8_t>(v >> 16),
                    static_cast<uint8_t>(v >> 8), static_cast<uint8_t>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
  };
  std::ofstream img(images_path, std::ios::binary);
  be32(img, 2051);
  be32(img, static_cast<uint32_t>(labels.size()));
  be32(img, 3);
  be32(img, 2);
  img.write(reinterpret_cast<const char*>(pixels.data()),
            static_cast<std::streamsize>(pixels.size()));
  std::ofstream lab(labels_path, std::ios::binary);
  be32(lab, 2049);
  be32(lab, static_cast<uint32_t>(labels.size()));
  lab.write(reinterpret_cast<const char*>(labels.data()),
            static_cast<std::streamsize>(labels.size()));
}

}  // namespace

TEST_CASE("segment features obey the label law") {
  auto data = gen_seg(20, 5000, 42);
  CHECK(data.n_classes == 2);
  CHECK(data.feature_dim() == 2);
  REQUIRE(data.size() == 5000);
  for (int i = 0; i < data.size(); ++i) {
    double x = data.features(i, 0);
    CHECK(data.features(i, 1) == x);
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
    int segment = static_cast<int>(std::floor(x * 20.0));
    CHECK(data.labels[i] == segment % 2);
  }
}

TEST_CASE("low segment coordinates always map to class zero") {
  auto data = gen_seg(10, 4000, 7);
  for (int i = 0; i < data.size(); ++i)
    if (data.features(i, 0) < 0.1) CHECK(data.labels[i] == 0);
}

TEST_CASE("segment classes are balanced for even counts") {
  auto data = gen_seg(20, 60000, 11);
  double ones = 0;
  for (int l : data.labels) ones += l;
  double frac = ones / data.size();
  CHECK(frac >= 0.48);
  CHECK(frac <= 0.52);
}

TEST_CASE("circle features stay inside the unit disc and obey the ring law") {
  auto data = gen_circle(20, 5000, 13);
  CHECK(data.n_classes == 2);
  REQUIRE(data.size() == 5000);
  for (int i = 0; i < data.size(); ++i) {
    double r = std::hypot(data.features(i, 0), data.features(i, 1));
    CHECK(r <= 1.0);
    int ring = static_cast<int>(std::floor(r * 20.0));
    CHECK(data.labels[i] == ring % 2);
  }
}

TEST_CASE("circle classes are balanced for even ring counts") {
  auto data = gen_circle(20, 60000, 17);
  double ones = 0;
  for (int l : data.labels) ones += l;
  double frac = ones / data.size();
  CHECK(frac >= 0.48);
  CHECK(frac <= 0.52);
}

TEST_CASE("generators are deterministic in the seed") {
  auto a = gen_circle(8, 300, 5);
  auto b = gen_circle(8, 300, 5);
  auto c = gen_circle(8, 300, 6);
  CHECK(a.features.data == b.features.data);
  CHECK(a.labels == b.labels);
  CHECK(a.features.data != c.features.data);

  auto sa = gen_seg(6, 300, 5);
  auto sb = gen_seg(6, 300, 5);
  CHECK(sa.features.data == sb.features.data);
  CHECK(sa.labels == sb.labels);
}

TEST_CASE("generator argument validation") {
  CHECK_THROWS_AS(gen_seg(1, 10, 0), RangeError);
  CHECK_THROWS_AS(gen_seg(4, 0, 0), RangeError);
  CHECK_THROWS_AS(gen_circle(1, 10, 0), RangeError);
}

TEST_CASE("idx fixtures parse with scaled pixels") {
  auto img = testsupport::temp_path("fix-images.idx");
  auto lab = testsupport::temp_path("fix-labels.idx");
  std::vector<uint8_t> pixels(12, 0);
  pixels[6] = 255;  // first pixel of the second image
  pixels[7] = 51;
  write_fixture(img, lab, pixels, {3, 9});

  auto data = load_idx(img, lab);
  CHECK(data.size() == 2);
  CHECK(data.feature_dim() == 6);
  CHECK(data.n_classes == 10);
  CHECK(data.image_rows == 3);
  CHECK(data.image_cols == 2);
  CHECK(data.labels == std::vector<int>{3, 9});
  for (int c = 0; c < 6; ++c) CHECK(data.features(0, c) == 0.0);
  CHECK(data.features(1, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(data.features(1, 1) == doctest::Approx(51.0 / 255.0).epsilon(1e-12));
}

TEST_CASE("idx loading fails closed") {
  auto img = testsupport::temp_path("bad-images.idx");
  auto lab = testsupport::temp_path("bad-labels.idx");
  std::vector<uint8_t> pixels(12, 7);
  write_fixture(img, lab, pixels, {1, 2});

  SUBCASE("bad image magic") {
    std::fstream f(img, std::ios::binary | std::ios::in | std::ios::out);
    f.seekp(3);
    f.put(static_cast<char>(4));
    f.close();
    CHECK_THROWS_AS(load_idx(img, lab), FormatError);
  }
  SUBCASE("bad label magic") {
    std::fstream f(lab, std::ios::binary | std::ios::in | std::ios::out);
    f.seekp(2);
    f.put(static_cast<char>(9));
    f.close();
    CHECK_THROWS_AS(load_idx(img, lab), FormatError);
  }
  SUBCASE("truncated image payload") {
    std::filesystem::resize_file(img, std::filesystem::file_size(img) - 3);
    CHECK_THROWS_AS(load_idx(img, lab), FormatError);
  }
  SUBCASE("count mismatch between files") {
    auto lab3 = testsupport::temp_path("mismatch-labels.idx");
    std::vector<uint8_t> pixels3(18, 0);
    write_fixture(testsupport::temp_path("mismatch-images.idx"), lab3, pixels3,
                  {1, 2, 3});
    CHECK_THROWS_AS(load_idx(img, lab3), ConsistencyError);
  }
  SUBCASE("label value out of range") {
    std::fstream f(lab, std::ios::binary | std::ios::in | std::ios::out);
    f.seekp(8);
    f.put(static_cast<char>(12));
    f.close();
    CHECK_THROWS_AS(load_idx(img, lab), FormatError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_idx(testsupport::temp_path("nope.idx"), lab), nnmass::Error);
  }
}

TEST_CASE("idx files round-trip byte-identically") {
  auto img = testsupport::temp_path("rt-images.idx");
  auto lab = testsupport::temp_path("rt-labels.idx");
  std::vector<uint8_t> pixels(12);
  for (size_t i = 0; i < pixels.size(); ++i) pixels[i] = static_cast<uint8_t>(i * 20);
  write_fixture(img, lab, pixels, {0, 5});

  auto data = load_idx(img, lab);
  auto img2 = testsupport::temp_path("rt-images2.idx");
  auto lab2 = testsupport::temp_path("rt-labels2.idx");
  write_idx(data, img2, lab2);

  auto slurp = [](const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
  };
  CHECK(slurp(img2) == slurp(img));
  CHECK(slurp(lab2) == slurp(lab));

  // Synthetic data has no byte-exact pixel representation to return to.
  auto synth = gen_seg(4, 10, 1);
  CHECK_THROWS_AS(write_idx(synth, img2, lab2), nnmass::Error);
}

TEST_CASE("dataset CSV export lists features then the label") {
  auto data = gen_seg(4, 3, 77);
  std::ostringstream out;
  write_dataset_csv(data, out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "x0,x1,label");
  int rows = 0;
  while (std::getline(in, line)) {
    CHECK(std::count(line.begin(), line.end(), ',') == 2);
    ++rows;
  }
  CHECK(rows == 3);
}
