#include <cmath>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "svh/errors.hpp"
#include "svh/rng.hpp"
#include "svh/targets.hpp"

using namespace svh;

// ---------------------------------------------------------------------------
// label smoothing
// ---------------------------------------------------------------------------

TEST_CASE("smooth_label splits p across the two neighbors") {
  SmoothingConfig cfg;  // p = 0.1
  auto q = smooth_label(2, 5, cfg);
  REQUIRE(q.size() == 5);
  CHECK(q[0] == 0.0);
  CHECK(q[1] == cfg.p / 2.0);
  CHECK(q[2] == 1.0 - cfg.p);
  CHECK(q[3] == cfg.p / 2.0);
  CHECK(q[4] == 0.0);
}

TEST_CASE("smooth_label retains out-of-range mass on the true class") {
  SmoothingConfig cfg;
  auto q0 = smooth_label(0, 5, cfg);
  CHECK(q0[0] == (1.0 - cfg.p) + cfg.p / 2.0);
  CHECK(q0[1] == cfg.p / 2.0);
  CHECK(q0[2] == 0.0);
  auto qk = smooth_label(4, 5, cfg);
  CHECK(qk[4] == (1.0 - cfg.p) + cfg.p / 2.0);
  CHECK(qk[3] == cfg.p / 2.0);
}

TEST_CASE("smooth_label with p=0 is one-hot") {
  SmoothingConfig cfg{0.0};
  for (int x = 0; x < 6; ++x) {
    auto q = smooth_label(x, 6, cfg);
    for (int c = 0; c < 6; ++c) CHECK(q[size_t(c)] == (c == x ? 1.0 : 0.0));
  }
}

// Expected class computed relative to the anchor x: sum_c (c-x) q_c cancels
// the two equal neighbor masses bit-exactly, so interior expectations are
// exact and boundary ones shift by exactly p/2.
static double expectation_offset(const std::vector<double>& q, int x) {
  double s = 0.0;
  for (size_t c = 0; c < q.size(); ++c) s += (double(c) - double(x)) * q[c];
  return s;
}

TEST_CASE("smoothing expectation: exact interior, exact p/2 boundary shift") {
  Rng rng(2024);
  for (int it = 0; it < 2000; ++it) {
    const int k = 2 + int(rng.uniform_int(9));
    const int x = int(rng.uniform_int(uint64_t(k)));
    SmoothingConfig cfg{rng.uniform() * 0.999};
    auto q = smooth_label(x, k, cfg);
    double sum = 0.0;
    for (double v : q) {
      CHECK(v >= 0.0);
      sum += v;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-9);
    const double off = expectation_offset(q, x);
    if (x == 0 && k > 1)
      CHECK(off == cfg.p / 2.0);
    else if (x == k - 1 && k > 1)
      CHECK(off == -(cfg.p / 2.0));
    else
      CHECK(off == 0.0);
  }
}

// ---------------------------------------------------------------------------
// fractional targets
// ---------------------------------------------------------------------------

TEST_CASE("fractional_target at an integer equals smooth_label bit-exactly") {
  SmoothingConfig cfg;
  for (int t = 0; t < 6; ++t)
    CHECK(fractional_target(double(t), 6, cfg) == smooth_label(t, 6, cfg));
}

TEST_CASE("fractional_target splits a half-integer across both classes") {
  SmoothingConfig cfg;  // p = 0.1
  auto q = fractional_target(3.5, 6, cfg);
  REQUIRE(q.size() == 6);
  CHECK(q[0] == doctest::Approx(0.0));
  CHECK(q[1] == doctest::Approx(0.0));
  CHECK(q[2] == doctest::Approx(0.025));
  CHECK(q[3] == doctest::Approx(0.475));
  CHECK(q[4] == doctest::Approx(0.475));
  CHECK(q[5] == doctest::Approx(0.025));
}

TEST_CASE("fractional_target with p=0 at 0 is one-hot") {
  SmoothingConfig cfg{0.0};
  auto q = fractional_target(0.0, 6, cfg);
  CHECK(q == std::vector<double>({1, 0, 0, 0, 0, 0}));
}

TEST_CASE("fractional_target preserves the expected value") {
  Rng rng(11);
  for (int it = 0; it < 2000; ++it) {
    const int k = 2 + int(rng.uniform_int(9));
    const double t = rng.uniform() * (k - 1);
    SmoothingConfig cfg{rng.uniform() * 0.999};
    auto q = fractional_target(t, k, cfg);
    double sum = 0.0, e = 0.0;
    for (size_t c = 0; c < q.size(); ++c) {
      sum += q[c];
      e += double(c) * q[c];
    }
    CHECK(std::abs(sum - 1.0) <= 1e-9);
    // interior expectation matches t; near a boundary the retained mass
    // pulls it inward by at most p/2
    if (t >= 1.0 && t <= double(k - 2))
      CHECK(e == doctest::Approx(t).epsilon(1e-12));
    else
      CHECK(std::abs(e - t) <= cfg.p / 2.0 + 1e-12);
  }
}

TEST_CASE("target preconditions are enforced") {
  SmoothingConfig cfg;
  CHECK_THROWS_AS(smooth_label(-1, 5, cfg), ScoreOutOfRange);
  CHECK_THROWS_AS(smooth_label(5, 5, cfg), ScoreOutOfRange);
  CHECK_THROWS_AS(fractional_target(5.01, 6, cfg), ScoreOutOfRange);
  CHECK_THROWS_AS(smooth_label(2, 5, SmoothingConfig{1.0}), ConfigError);
  CHECK_THROWS_AS(smooth_label(2, 5, SmoothingConfig{-0.1}), ConfigError);
}

// ---------------------------------------------------------------------------
// segmentation masks
// ---------------------------------------------------------------------------

// Independent oracle: plain per-pixel scan, nearest center by squared
// distance with lowest-id tie break, then the three-way radius rule.
static Tensor<uint8_t> mask_oracle(const std::vector<kernels::MaskCenter>& cs,
                                   double r, double R, int h, int w) {
  Tensor<uint8_t> seg({h, w});
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double best_d2 = std::numeric_limits<double>::infinity();
      int best_id = -1;
      for (const auto& c : cs) {
        const double d2 = (x - c.x) * (x - c.x) + (y - c.y) * (y - c.y);
        if (d2 < best_d2 || (d2 == best_d2 && c.type_id < best_id)) {
          best_d2 = d2;
          best_id = c.type_id;
        }
      }
      uint8_t v;
      if (best_id < 0 || best_d2 > R * R)
        v = JointSchema::kBackgroundClass;
      else if (best_d2 <= r * r)
        v = uint8_t(best_id);
      else
        v = kIgnoreClass;
      seg[y * w + x] = v;
    }
  }
  return seg;
}

TEST_CASE("mask rule at hand-placed distances") {
  MaskConfig cfg;  // r=32 R=40
  std::vector<kernels::MaskCenter> cs = {{7, 0.0, 0.0}};
  auto seg = build_mask(cs, cfg, 1, 64);
  CHECK(seg[0] == 7);    // d = 0
  CHECK(seg[32] == 7);   // d = r exactly
  CHECK(seg[33] == kIgnoreClass);  // just past r
  CHECK(seg[36] == kIgnoreClass);  // inside the band
  CHECK(seg[40] == kIgnoreClass);  // d = R exactly
  CHECK(seg[41] == JointSchema::kBackgroundClass);  // just past R
  CHECK(seg[50] == JointSchema::kBackgroundClass);
}

TEST_CASE("equidistant pixels take the lowest type id") {
  MaskConfig cfg{10.0, 12.0};
  std::vector<kernels::MaskCenter> cs = {{7, 10.0, 5.0}, {3, 30.0, 5.0}};
  auto seg = build_mask(cs, cfg, 11, 41);
  // x=20 is exactly 10 px from both centers
  CHECK(seg[5 * 41 + 20] == 3);
  CHECK(seg[5 * 41 + 12] == 7);
  CHECK(seg[5 * 41 + 28] == 3);
}

TEST_CASE("build_mask matches the exhaustive oracle on random configs") {
  Rng rng(99);
  for (int it = 0; it < 60; ++it) {
    const int h = 8 + int(rng.uniform_int(56));
    const int w = 8 + int(rng.uniform_int(56));
    const int n = 1 + int(rng.uniform_int(8));
    std::vector<kernels::MaskCenter> cs;
    for (int i = 0; i < n; ++i)
      cs.push_back({int(rng.uniform_int(21)), rng.uniform(0, w - 1.0),
                    rng.uniform(0, h - 1.0)});
    const double r = rng.uniform(0.0, 20.0);
    MaskConfig cfg{r, r + rng.uniform(0.0, 10.0)};
    auto got = build_mask(cs, cfg, h, w);
    auto want = mask_oracle(cs, cfg.r, cfg.R, h, w);
    REQUIRE(got == want);
  }
}

TEST_CASE("growing r only converts ignore pixels into joint pixels") {
  Rng rng(5);
  for (int it = 0; it < 20; ++it) {
    const int h = 40, w = 40;
    std::vector<kernels::MaskCenter> cs;
    for (int i = 0; i < 4; ++i)
      cs.push_back({int(rng.uniform_int(21)), rng.uniform(0, w - 1.0),
                    rng.uniform(0, h - 1.0)});
    auto small = build_mask(cs, MaskConfig{8.0, 20.0}, h, w);
    auto big = build_mask(cs, MaskConfig{14.0, 20.0}, h, w);
    for (int i = 0; i < h * w; ++i) {
      if (small[i] < JointSchema::kNumTypes) CHECK(big[i] == small[i]);
      if (big[i] == JointSchema::kBackgroundClass)
        CHECK(small[i] == JointSchema::kBackgroundClass);
    }
  }
}

TEST_CASE("invalid mask configs are rejected") {
  std::vector<kernels::MaskCenter> cs = {{0, 1.0, 1.0}};
  CHECK_THROWS_AS(build_mask(cs, MaskConfig{10.0, 5.0}, 4, 4), ConfigError);
  CHECK_THROWS_AS(build_mask(cs, MaskConfig{-1.0, 5.0}, 4, 4), ConfigError);
  CHECK_NOTHROW(build_mask(cs, MaskConfig{5.0, 5.0}, 4, 4));  // r == R is legal
}

// ---------------------------------------------------------------------------
// full per-pixel targets
// ---------------------------------------------------------------------------

TEST_CASE("pixel targets carry task validity from the schema") {
  JointSchema schema = default_schema();
  AnnotatedImage img;
  img.pixels = Image(48, 96);
  img.limb = Limb::Hand;
  // type 0: both tasks; type 12: narrowing only; type 18: erosion only
  img.joints = {{0, 16.0, 24.0, 2, 3},
                {12, 48.0, 24.0, 4, std::nullopt},
                {18, 80.0, 24.0, std::nullopt, 1}};
  MaskConfig mcfg{8.0, 10.0};
  SmoothingConfig scfg;
  PixelTargets t = build_pixel_targets(img, schema, mcfg, scfg);

  auto at = [&](int y, int x) { return t.seg[y * 96 + x]; };
  REQUIRE(at(24, 16) == 0);
  REQUIRE(at(24, 48) == 12);
  REQUIRE(at(24, 80) == 18);

  auto idx = [&](int y, int x) { return y * 96 + x; };
  CHECK(t.narrowing_valid[idx(24, 16)] == 1);
  CHECK(t.erosion_valid[idx(24, 16)] == 1);
  CHECK(t.narrowing_valid[idx(24, 48)] == 1);
  CHECK(t.erosion_valid[idx(24, 48)] == 0);
  CHECK(t.narrowing_valid[idx(24, 80)] == 0);
  CHECK(t.erosion_valid[idx(24, 80)] == 1);
  // background and ignore pixels are never supervised for damage
  REQUIRE(at(0, 0) == JointSchema::kBackgroundClass);
  CHECK(t.narrowing_valid[idx(0, 0)] == 0);
  CHECK(t.erosion_valid[idx(0, 0)] == 0);
  REQUIRE(at(24, 25) == kIgnoreClass);
  CHECK(t.narrowing_valid[idx(24, 25)] == 0);

  // the distributions scattered at a joint pixel match the constructors
  auto want_n = smooth_label(2, kNarrowingClasses, scfg);
  auto want_e = smooth_label(3, kErosionClasses, scfg);
  for (int c = 0; c < kNarrowingClasses; ++c)
    CHECK(t.narrowing_target[idx(24, 16) * kNarrowingClasses + c] == want_n[size_t(c)]);
  for (int c = 0; c < kErosionClasses; ++c)
    CHECK(t.erosion_target[idx(24, 16) * kErosionClasses + c] == want_e[size_t(c)]);
}

TEST_CASE("foot erosion targets live at half the grade") {
  JointSchema schema = default_schema();
  AnnotatedImage img;
  img.pixels = Image(32, 32);
  img.limb = Limb::Foot;
  img.joints = {{2, 16.0, 16.0, 0, 7}};  // odd grade: half-integer target
  PixelTargets t = build_pixel_targets(img, schema, MaskConfig{6.0, 8.0},
                                       SmoothingConfig{0.1});
  const int i = 16 * 32 + 16;
  REQUIRE(t.seg[i] == 2);
  REQUIRE(t.erosion_valid[i] == 1);
  auto want = fractional_target(3.5, kErosionClasses, SmoothingConfig{0.1});
  double e = 0.0;
  for (int c = 0; c < kErosionClasses; ++c) {
    CHECK(t.erosion_target[i * kErosionClasses + c] == want[size_t(c)]);
    e += c * t.erosion_target[i * kErosionClasses + c];
  }
  CHECK(e == doctest::Approx(3.5));  // interior: expectation preserved
}

TEST_CASE("pixel targets require the scores the schema demands") {
  JointSchema schema = default_schema();
  AnnotatedImage img;
  img.pixels = Image(32, 32);
  img.limb = Limb::Hand;
  img.joints = {{0, 16.0, 16.0, std::nullopt, 3}};  // narrowing missing
  CHECK_THROWS_AS(
      build_pixel_targets(img, schema, MaskConfig{6.0, 8.0}, SmoothingConfig{}),
      MissingScore);
  img.joints = {{0, 16.0, 16.0, 2, 9}};  // 9 outside the hand erosion range
  CHECK_THROWS_AS(
      build_pixel_targets(img, schema, MaskConfig{6.0, 8.0}, SmoothingConfig{}),
      ScoreOutOfRange);
}

TEST_CASE("every produced distribution is normalized") {
  JointSchema schema = default_schema();
  AnnotatedImage img = testutil::grid_annotated(schema, Limb::Foot, Side::Right,
                                                64, 64, 3, 9);
  PixelTargets t = build_pixel_targets(img, schema, MaskConfig{5.0, 7.0},
                                       SmoothingConfig{0.2});
  for (int i = 0; i < 64 * 64; ++i) {
    if (t.narrowing_valid[i]) {
      double s = 0.0;
      for (int c = 0; c < kNarrowingClasses; ++c)
        s += t.narrowing_target[i * kNarrowingClasses + c];
      CHECK(std::abs(s - 1.0) <= 1e-9);
      CHECK(t.seg[i] < JointSchema::kNumTypes);
    }
    if (t.erosion_valid[i]) {
      double s = 0.0;
      for (int c = 0; c < kErosionClasses; ++c)
        s += t.erosion_target[i * kErosionClasses + c];
      CHECK(std::abs(s - 1.0) <= 1e-9);
      CHECK(t.seg[i] < JointSchema::kNumTypes);
    }
  }
}
