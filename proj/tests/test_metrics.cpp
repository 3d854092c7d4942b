/* Copyright 2026 The hemoseg Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "hemoseg/error.hpp"
#include "hemoseg/metrics.hpp"
#include "oracles.hpp"

using namespace hemoseg;
using namespace hemoseg::metrics;

namespace {

LabelMask with(const Dims& d, const std::vector<std::size_t>& on) {
  LabelMask m(d);
  for (auto n : on) m[n] = 1;
  return m;
}

BoundingBox box(std::size_t z, std::size_t x0, std::size_t y0, std::size_t x1, std::size_t y1,
                std::string type = "IPH") {
  return {z, x0, y0, x1, y1, std::move(type)};
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("hemoseg_metrics_" + name);
}

}  // namespace

TEST_CASE("dice worked examples") {
  const Dims d{4, 4, 1};
  const auto x = with(d, {0, 1, 2, 3});
  const auto y = with(d, {1, 2, 3, 8, 9, 10});
  CHECK(dice(x, y) == 0.6);
  CHECK(dice(x, x) == 1.0);
  CHECK(dice(x, with(d, {12, 13})) == 0.0);
  CHECK(dice(LabelMask(d), LabelMask(d)) == 1.0);
  CHECK(dice(x, LabelMask(d)) == 0.0);
  CHECK_THROWS_AS(dice(x, LabelMask({4, 4, 2})), DataError);
  // Nonzero labels all count as foreground.
  auto labeled = x;
  labeled[0] = 7;
  CHECK(dice(labeled, x) == 1.0);
}

TEST_CASE("dice matches the set oracle on random masks") {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<std::size_t> side(1, 8);
  std::uniform_real_distribution<double> density(0.0, 1.0);
  for (int t = 0; t < 500; ++t) {
    const Dims d{side(rng), side(rng), side(rng)};
    const auto a = oracle::random_mask(d, density(rng), rng);
    const auto b = oracle::random_mask(d, density(rng), rng);
    CHECK(dice(a, b) == oracle::dice(a, b));
    CHECK(dice(a, b) == dice(b, a));
    if (count_nonzero(a) > 0) CHECK(dice(a, a) == 1.0);
    const double v = dice(a, b);
    CHECK((v >= 0.0 && v <= 1.0));
  }
}

TEST_CASE("detection_rate examples") {
  const Dims d{10, 10, 3};
  const std::vector<BoundingBox> one{box(1, 2, 2, 4, 4)};
  LabelMask full(d);
  for (std::size_t y = 2; y <= 4; ++y)
    for (std::size_t x = 2; x <= 4; ++x) full.at(x, y, 1) = 1;
  auto r = detection_rate(full, one);
  CHECK(r.overall.rate() == 1.0);
  CHECK(r.boxes[0].overlap == 9);
  CHECK(detection_rate(LabelMask(d), one).overall.rate() == 0.0);

  const std::vector<BoundingBox> two{box(1, 2, 2, 4, 4), box(2, 0, 0, 1, 1, "SDH")};
  r = detection_rate(full, two);
  CHECK(r.overall.rate() == 0.5);
  REQUIRE(r.by_type.size() == 2);
  CHECK(r.by_type[0].label == "IPH");
  CHECK(r.by_type[0].rate() == 1.0);
  CHECK(r.by_type[1].rate() == 0.0);

  // A voxel on a neighbouring slice does not count.
  LabelMask off(d);
  off.at(3, 3, 0) = 1;
  CHECK(detection_rate(off, one).overall.rate() == 0.0);

  DetectionConfig strict;
  strict.min_overlap_voxels = 10;
  CHECK(detection_rate(full, one, strict).overall.rate() == 0.0);

  CHECK_THROWS(detection_rate(full, std::vector<BoundingBox>{box(3, 0, 0, 1, 1)}));
  const EvalReport none = detection_rate(full, {});
  CHECK_FALSE(none.overall.rate().has_value());
}

TEST_CASE("detection_rate bins by size and by volume intensity") {
  const Dims d{30, 30, 1};
  Volume3D vol(d, {}, 30.0f);
  vol.at(1, 1, 0) = 55.0f;   // inside the 4-voxel box
  vol.at(20, 20, 0) = 85.0f;  // inside the 121-voxel box
  const std::vector<BoundingBox> boxes{box(0, 0, 0, 1, 1), box(0, 15, 15, 25, 25),
                                       box(0, 5, 5, 9, 9)};
  LabelMask pred(d);
  pred.at(20, 20, 0) = 1;
  const auto r = detection_rate(pred, boxes, {}, &vol);
  REQUIRE(r.by_size.size() == 4);
  // Areas 4, 121 and 25: one box each in [0,25), [100,400) and [25,100).
  CHECK(r.by_size[0].total == 1);
  CHECK(r.by_size[1].total == 1);
  CHECK(r.by_size[2].total == 1);
  CHECK(r.by_size[3].total == 0);
  CHECK_FALSE(r.by_size[3].rate().has_value());
  CHECK(r.by_size[2].detected == 1);
  REQUIRE(r.by_intensity.size() == 5);
  CHECK(r.by_intensity[0].total == 1);  // max 30 HU
  CHECK(r.by_intensity[1].total == 1);  // 55 HU
  CHECK(r.by_intensity[4].total == 1);  // 85 HU
  CHECK(r.by_intensity[4].rate() == 1.0);
  CHECK(r.boxes[0].max_intensity == 55.0);
  // Without a volume the intensity bins stay empty.
  for (const auto& b : detection_rate(pred, boxes).by_intensity) CHECK(b.total == 0);
}

TEST_CASE("detection_rate is monotone in the prediction") {
  std::mt19937_64 rng(8);
  const Dims d{12, 12, 4};
  std::uniform_int_distribution<std::size_t> xy(0, 11), z(0, 3);
  std::vector<BoundingBox> boxes;
  for (int b = 0; b < 30; ++b) {
    auto a = xy(rng), c = xy(rng), e = xy(rng), f = xy(rng);
    boxes.push_back(box(z(rng), std::min(a, c), std::min(e, f), std::max(a, c), std::max(e, f)));
  }
  auto pred = oracle::random_mask(d, 0.02, rng);
  auto prev = detection_rate(pred, boxes);
  for (int step = 0; step < 40; ++step) {
    pred = mask_or(pred, oracle::random_mask(d, 0.01, rng));
    const auto next = detection_rate(pred, boxes);
    CHECK(next.overall.detected >= prev.overall.detected);
    for (std::size_t b = 0; b < next.by_size.size(); ++b)
      CHECK(next.by_size[b].detected >= prev.by_size[b].detected);
    for (std::size_t b = 0; b < next.by_type.size(); ++b)
      CHECK(next.by_type[b].detected >= prev.by_type[b].detected);
    prev = next;
  }
}

TEST_CASE("summarize") {
  const std::vector<double> two{0.2, 0.4};
  const auto s = summarize(two);
  REQUIRE(s);
  CHECK(s->n == 2);
  CHECK(s->mean == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(s->max == 0.4);
  CHECK(s->std == doctest::Approx(0.1).epsilon(1e-12));
  const std::vector<double> one{0.7};
  CHECK(summarize(one)->std == 0.0);
  CHECK_FALSE(summarize(std::vector<double>{}).has_value());
}

TEST_CASE("box files round trip and report errors") {
  const std::vector<BoundingBox> boxes{box(3, 1, 2, 5, 6, "SDH"), box(0, 0, 0, 0, 0, "IVH")};
  const auto path = temp_file("boxes.txt");
  write_boxes(path, boxes);
  CHECK(read_boxes(path) == boxes);

  auto write = [&](const std::string& text) {
    std::ofstream(path, std::ios::trunc) << text;
  };
  write("# header\n\n4 1 1 2 2   # trailing comment\n");
  const auto parsed = read_boxes(path);
  REQUIRE(parsed.size() == 1);
  CHECK(parsed[0].type == "unknown");
  CHECK(parsed[0].area() == 4);

  for (const char* bad : {"1 2 3\n", "1 -2 3 4 5\n", "1 5 5 4 4\n", "1 1 1 2 2 IPH extra\n"}) {
    write(std::string("0 0 0 1 1\n") + bad);
    try {
      read_boxes(path);
      FAIL("expected an error for " << bad);
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
  }
  std::filesystem::remove(path);
  CHECK_THROWS_AS(read_boxes(path), DataError);
}

TEST_CASE("format_report emits a table and key-value lines") {
  const Dims d{5, 5, 1};
  LabelMask pred(d);
  pred.at(1, 1, 0) = 1;
  auto r = detection_rate(pred, std::vector<BoundingBox>{box(0, 0, 0, 2, 2), box(0, 3, 3, 4, 4)});
  r.dice = 0.25;
  const auto text = format_report(r);
  CHECK(text.find("Dice: 0.250000") != std::string::npos);
  CHECK(text.find("dice=0.250000\n") != std::string::npos);
  CHECK(text.find("detection.all.rate=0.5000\n") != std::string::npos);
  CHECK(text.find("detection.size[100,400).rate=-\n") != std::string::npos);
  CHECK(text.find("detection.type.IPH.total=2\n") != std::string::npos);
}
