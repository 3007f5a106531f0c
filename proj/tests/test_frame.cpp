#include <doctest.h>

#include <random>

#include "neovitals/frame.hpp"
#include "oracles.hpp"

using namespace neovitals;

namespace {

constexpr std::uint8_t skin_r = 200, skin_g = 150, skin_b = 120;

RasterFrame flat(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  RasterFrame f(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) f.set_rgb(x, y, r, g, b);
  }
  return f;
}

BinaryMask to_mask(const std::vector<int>& v, int w, int h) {
  BinaryMask m(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) m.set(x, y, v[y * w + x] != 0);
  }
  return m;
}

}  // namespace

TEST_CASE("skin classification") {
  const SkinThresholds t;
  CHECK(is_skin_ycbcr(skin_r, skin_g, skin_b, t));
  CHECK(is_skin_hsv(skin_r, skin_g, skin_b, t));
  CHECK_FALSE(is_skin_ycbcr(0, 0, 255, t));
  CHECK_FALSE(is_skin_hsv(0, 0, 255, t));
  CHECK_FALSE(is_skin_ycbcr(0, 0, 0, t));
  CHECK_FALSE(is_skin_hsv(0, 0, 0, t));
  CHECK_FALSE(is_skin_hsv(255, 255, 255, t));
}

TEST_CASE("blue pixel inside a skin patch is excluded") {
  auto f = flat(40, 30, skin_r, skin_g, skin_b);
  f.set_rgb(20, 15, 0, 0, 255);
  const std::array<BinaryMask, 2> masks{skin_mask_colorspace(f, SkinColorSpace::YCbCr),
                                        skin_mask_colorspace(f, SkinColorSpace::HSV)};
  CHECK_FALSE(masks[0].get(20, 15));
  CHECK_FALSE(masks[1].get(20, 15));
  // the 3x3 majority stage closes a one-pixel hole again
  const auto refined = refine_mask(masks);
  CHECK(refined.get(20, 15));

  const RoiGeometry roi{10, 5, 30, 25};
  const auto s = extract_frame(f, roi);
  REQUIRE(s.mean_r);
  CHECK(*s.mean_r == doctest::Approx(skin_r - skin_r / 400.0));
  CHECK(*s.mean_b == doctest::Approx(skin_b + (255.0 - skin_b) / 400.0));
}

TEST_CASE("refined mask stays within the 1-dilated intersection") {
  for (unsigned seed = 0; seed < 100; ++seed) {
    std::mt19937 rng(seed);
    std::bernoulli_distribution d(0.8);
    const int w = 24, h = 18;
    std::array<BinaryMask, 2> masks{BinaryMask(w, h), BinaryMask(w, h)};
    for (auto& m : masks) {
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) m.set(x, y, d(rng));
      }
    }
    const auto out = refine_mask(masks);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (!out.get(x, y)) continue;
        bool near = false;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            near = near || (masks[0].get_or_unset(x + dx, y + dy) && masks[1].get_or_unset(x + dx, y + dy));
          }
        }
        CHECK(near);
      }
    }
  }
  CHECK_THROWS_AS(refine_mask(std::vector<BinaryMask>{}), ContractError);
  CHECK_THROWS_AS(refine_mask(std::vector<BinaryMask>{BinaryMask(3, 3), BinaryMask(4, 3)}), ContractError);
}

TEST_CASE("black frame yields no skin and no colour means") {
  const auto f = flat(32, 24, 0, 0, 0);
  const RoiGeometry roi{4, 4, 28, 20};
  const auto s = extract_frame(f, roi);
  CHECK_FALSE(s.mean_r);
  CHECK_FALSE(s.mean_g);
  CHECK_FALSE(s.mean_b);
  CHECK_FALSE(s.mean_depth_mm);
  CHECK(validate_frame_summary(s).empty());
}

TEST_CASE("morph_open matches the placement-union oracle") {
  for (unsigned seed = 0; seed < 100; ++seed) {
    std::mt19937 rng(seed);
    std::bernoulli_distribution d(0.65);
    const int w = 13 + static_cast<int>(seed % 7), h = 9 + static_cast<int>(seed % 5);
    std::vector<int> v(static_cast<std::size_t>(w * h));
    for (auto& x : v) x = d(rng) ? 1 : 0;
    for (int k : {1, 2, 3, 4, 5}) {
      CHECK(morph_open(to_mask(v, w, h), k) == to_mask(oracle::open_brute(v, w, h, k), w, h));
    }
  }
}

TEST_CASE("opening is idempotent and anti-extensive") {
  std::mt19937 rng(77);
  std::bernoulli_distribution d(0.7);
  BinaryMask m(30, 20);
  for (int y = 0; y < 20; ++y) {
    for (int x = 0; x < 30; ++x) m.set(x, y, d(rng));
  }
  for (int k : {3, 4}) {
    const auto o = morph_open(m, k);
    CHECK(morph_open(o, k) == o);
    for (int y = 0; y < 20; ++y) {
      for (int x = 0; x < 30; ++x) {
        if (o.get(x, y)) CHECK(m.get(x, y));
      }
    }
  }
}

TEST_CASE("median3") {
  BinaryMask m(5, 5);
  m.set(2, 2);
  CHECK(median3(m).count() == 0);
  BinaryMask full(5, 5, true);
  const auto f = median3(full);
  CHECK(f.get(2, 2));
  // a corner sees four inside pixels out of nine
  CHECK_FALSE(f.get(0, 0));
  CHECK(f.get(0, 2));
}

TEST_CASE("depth inliers reject the arm in front of the chest") {
  const int w = 60, h = 40;
  auto f = flat(w, h, skin_r, skin_g, skin_b);
  f.depth.assign(f.pixel_count(), 400);
  // arm at 500 mm across the left third of the ROI
  for (int y = 0; y < h; ++y) {
    for (int x = 10; x < 22; ++x) f.depth[f.index(x, y)] = 500;
  }
  const RoiGeometry roi{10, 5, 50, 35};
  const auto in = depth_inliers(f, roi);
  REQUIRE(in);
  CHECK(std::abs(in->modal_depth_mm - 400.0) <= 5.0);
  for (int y = roi.y1; y < roi.y2; ++y) {
    for (int x = roi.x1; x < roi.x2; ++x) CHECK(in->mask.get(x, y) == (x >= 22));
  }
  const auto s = extract_frame(f, roi);
  REQUIRE(s.mean_depth_mm);
  CHECK(*s.mean_depth_mm == doctest::Approx(400.0));
  for (int q = 0; q < 4; ++q) {
    REQUIRE(s.quadrant_depth_mm[q]);
    CHECK(*s.quadrant_depth_mm[q] == doctest::Approx(400.0));
  }
  CHECK(validate_frame_summary(s).empty());
}

TEST_CASE("holes and a depth-less ROI") {
  auto f = flat(20, 20, skin_r, skin_g, skin_b);
  f.depth.assign(f.pixel_count(), 0);
  const RoiGeometry roi{2, 2, 18, 18};
  CHECK_FALSE(depth_inliers(f, roi));
  const auto s = extract_frame(f, roi);
  CHECK_FALSE(s.mean_depth_mm);
  for (int q = 0; q < 4; ++q) {
    CHECK_FALSE(s.quadrant_depth_mm[q]);
    CHECK(s.quadrant_valid_count[q] == 0);
  }
  // a single quadrant with returns
  for (int y = 2; y < 10; ++y) {
    for (int x = 2; x < 10; ++x) f.depth[f.index(x, y)] = 420;
  }
  const auto s2 = extract_frame(f, roi);
  CHECK(s2.quadrant_depth_mm[0]);
  CHECK(s2.quadrant_valid_count[0] == 64);
  CHECK_FALSE(s2.quadrant_depth_mm[3]);
  CHECK(validate_frame_summary(s2).empty());
}

TEST_CASE("contracts") {
  const auto f = flat(20, 20, skin_r, skin_g, skin_b);
  CHECK_THROWS_AS(depth_inliers(f, {0, 0, 10, 10}), ContractError);
  auto fd = f;
  fd.depth.assign(fd.pixel_count(), 400);
  CHECK_THROWS_AS(depth_inliers(fd, {0, 0, 30, 10}), ContractError);
  CHECK_THROWS_AS(summarize_frame(f, {0, 0, 10, 10}, BinaryMask(5, 5), BinaryMask(20, 20)), ContractError);
  RasterFrame bad(4, 4);
  bad.ir.resize(3);
  CHECK_FALSE(bad.violations().empty());
}

TEST_CASE("project_to_world") {
  const CameraIntrinsics k{600, 600, 320, 240};
  const auto c = project_to_world(320, 240, 400, k);
  CHECK(c.x == 0.0);
  CHECK(c.y == 0.0);
  CHECK(c.z == 400.0);
  const auto p = project_to_world(380, 180, 400, k);
  CHECK(p.x == doctest::Approx(40.0));
  CHECK(p.y == doctest::Approx(-40.0));
  // pixel footprint grows linearly with depth
  const auto q = project_to_world(380, 180, 800, k);
  CHECK(q.x == doctest::Approx(2.0 * p.x));
  CHECK_THROWS_AS(project_to_world(1, 1, 0, k), ContractError);
  CHECK_THROWS_AS(project_to_world(1, 1, 400, CameraIntrinsics{}), ContractError);
}
