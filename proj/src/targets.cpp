#include "svh/targets.hpp"

#include <array>
#include <cmath>
#include <optional>

#include "svh/errors.hpp"

namespace svh {

void MaskConfig::validate() const {
  if (!(r >= 0.0)) throw ConfigError("mask radius r must be >= 0, got " + std::to_string(r));
  if (!(R >= r))
    throw ConfigError("mask radius R must be >= r, got r=" + std::to_string(r) +
                      " R=" + std::to_string(R));
}

void SmoothingConfig::validate() const {
  if (!(p >= 0.0 && p < 1.0))
    throw ConfigError("smoothing p must be in [0, 1), got " + std::to_string(p));
}

Tensor<uint8_t> build_mask(const std::vector<kernels::MaskCenter>& centers,
                           const MaskConfig& cfg, int h, int w) {
  cfg.validate();
  if (h <= 0 || w <= 0) throw ShapeMismatch("build_mask: empty canvas");
  Tensor<uint8_t> seg({h, w});
  kernels::mask_from_centers(centers.data(), int(centers.size()), cfg.r, cfg.R,
                             h, w, seg.ptr(), JointSchema::kBackgroundClass);
  return seg;
}

std::vector<double> smooth_label(int x, int k, const SmoothingConfig& cfg) {
  cfg.validate();
  if (k < 1 || x < 0 || x >= k)
    throw ScoreOutOfRange("smooth_label: class " + std::to_string(x) +
                          " outside [0, " + std::to_string(k) + ")");
  std::vector<double> q(size_t(k), 0.0);
  const double half = cfg.p / 2.0;
  q[size_t(x)] = 1.0 - cfg.p;
  if (x - 1 >= 0)
    q[size_t(x - 1)] = half;
  else
    q[size_t(x)] += half;
  if (x + 1 < k)
    q[size_t(x + 1)] = half;
  else
    q[size_t(x)] += half;
  return q;
}

std::vector<double> fractional_target(double t, int k, const SmoothingConfig& cfg) {
  cfg.validate();
  if (k < 1 || !(t >= 0.0 && t <= double(k - 1)))
    throw ScoreOutOfRange("fractional_target: target " + std::to_string(t) +
                          " outside [0, " + std::to_string(k - 1) + "]");
  const double fl = std::floor(t);
  const double frac = t - fl;
  const int lo = int(fl);
  if (frac == 0.0) return smooth_label(lo, k, cfg);
  const std::vector<double> a = smooth_label(lo, k, cfg);
  const std::vector<double> b = smooth_label(lo + 1, k, cfg);
  std::vector<double> q(size_t(k), 0.0);
  for (int i = 0; i < k; ++i)
    q[size_t(i)] = (1.0 - frac) * a[size_t(i)] + frac * b[size_t(i)];
  return q;
}

PixelTargets build_pixel_targets(const AnnotatedImage& image,
                                 const JointSchema& schema,
                                 const MaskConfig& mask_cfg,
                                 const SmoothingConfig& smooth_cfg) {
  mask_cfg.validate();
  smooth_cfg.validate();
  const int h = image.pixels.h, w = image.pixels.w;

  std::vector<kernels::MaskCenter> centers;
  centers.reserve(image.joints.size());
  for (const Joint& j : image.joints) centers.push_back({j.type_id, j.x, j.y});

  PixelTargets t;
  t.h = h;
  t.w = w;
  t.seg = build_mask(centers, mask_cfg, h, w);
  t.narrowing_target = Tensor<double>({h, w, kNarrowingClasses});
  t.narrowing_valid = Tensor<uint8_t>({h, w});
  t.erosion_target = Tensor<double>({h, w, kErosionClasses});
  t.erosion_valid = Tensor<uint8_t>({h, w});

  // One distribution per joint type present in this image; scattered to all
  // pixels of that segmentation class below.
  std::array<std::optional<std::vector<double>>, JointSchema::kNumTypes> narrowing_of;
  std::array<std::optional<std::vector<double>>, JointSchema::kNumTypes> erosion_of;
  for (const Joint& j : image.joints) {
    const JointType& jt = schema.type(j.type_id);
    if (jt.has_narrowing) {
      if (!j.narrowing)
        throw MissingScore("joint " + jt.name + ": narrowing score required but absent");
      const ScoreRange range = score_range(schema, Task::Narrowing, image.limb);
      if (*j.narrowing < range.min || *j.narrowing > range.max)
        throw ScoreOutOfRange("joint " + jt.name + ": narrowing score " +
                              std::to_string(*j.narrowing) + " outside [" +
                              std::to_string(range.min) + ", " + std::to_string(range.max) + "]");
      narrowing_of[size_t(j.type_id)] =
          smooth_label(*j.narrowing, kNarrowingClasses, smooth_cfg);
    }
    if (jt.has_erosion) {
      if (!j.erosion)
        throw MissingScore("joint " + jt.name + ": erosion score required but absent");
      const ScoreRange range = score_range(schema, Task::Erosion, image.limb);
      if (*j.erosion < range.min || *j.erosion > range.max)
        throw ScoreOutOfRange("joint " + jt.name + ": erosion score " +
                              std::to_string(*j.erosion) + " outside [" +
                              std::to_string(range.min) + ", " + std::to_string(range.max) + "]");
      // Foot grades span 0..10; training targets live in the shared 6-class
      // space at half the grade, so odd grades split across two classes.
      erosion_of[size_t(j.type_id)] =
          image.limb == Limb::Foot
              ? fractional_target(*j.erosion / 2.0, kErosionClasses, smooth_cfg)
              : smooth_label(*j.erosion, kErosionClasses, smooth_cfg);
    }
  }

  const uint8_t* seg = t.seg.ptr();
  double* nt = t.narrowing_target.ptr();
  uint8_t* nv = t.narrowing_valid.ptr();
  double* et = t.erosion_target.ptr();
  uint8_t* ev = t.erosion_valid.ptr();
  const size_t n = size_t(h) * size_t(w);
  for (size_t i = 0; i < n; ++i) {
    const uint8_t c = seg[i];
    if (c >= JointSchema::kNumTypes) continue;  // background or ignore
    if (narrowing_of[c]) {
      const std::vector<double>& q = *narrowing_of[c];
      for (int j = 0; j < kNarrowingClasses; ++j)
        nt[i * kNarrowingClasses + size_t(j)] = q[size_t(j)];
      nv[i] = 1;
    }
    if (erosion_of[c]) {
      const std::vector<double>& q = *erosion_of[c];
      for (int j = 0; j < kErosionClasses; ++j)
        et[i * kErosionClasses + size_t(j)] = q[size_t(j)];
      ev[i] = 1;
    }
  }
  return t;
}

}  // namespace svh
