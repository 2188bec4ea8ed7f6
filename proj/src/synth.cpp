#include "svh/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "svh/errors.hpp"

namespace svh {

namespace {

constexpr double kBarThickness = 3.0;
constexpr double kJitterMax = 1.0;  // within the documented <= 2 px bound
constexpr double kAngleMaxDeg = 10.0;
constexpr double kBarIntensity = 0.9;
constexpr double kGeometricRatio = 0.6;
// Joints are much taller than they are wide (bar stack vs bar length), so a
// wide grid keeps neighboring rows from overlapping on a small canvas.
constexpr int kHandCols = 6;
constexpr int kFootCols = 3;

double max_gap(const SynthConfig& cfg) {
  return cfg.gap_base + 4.0 * cfg.gap_per_grade;
}

}  // namespace

double SynthConfig::max_footprint_radius() const {
  const double a = kAngleMaxDeg * M_PI / 180.0;
  const double half_h = max_gap(*this) / 2.0 + kBarThickness;
  const double half_w = bar_width / 2.0;
  // rotated bounding half-extent plus placement jitter
  return std::cos(a) * half_h + std::sin(a) * half_w + kJitterMax;
}

void SynthConfig::validate() const {
  if (n_patients < 1) throw ConfigError("n_patients must be >= 1");
  if (canvas_h < 8 || canvas_w < 8) throw ConfigError("canvas must be >= 8x8");
  if (joints_per_hand != JointSchema::kNumTypes)
    throw ConfigError("joints_per_hand must match the 21 schema types");
  if (joints_per_foot != 6) throw ConfigError("joints_per_foot must be 6");
  if (!(bar_width > 0) || !(gap_base > 0) || gap_per_grade < 0 ||
      notch_per_grade < 0)
    throw ConfigError("bar geometry values must be positive");
  if (noise_sigma < 0) throw ConfigError("noise_sigma must be >= 0");
  if (score_zero_prob < 0 || score_zero_prob > 1)
    throw ConfigError("score_zero_prob must lie in [0, 1]");
  const double m = max_footprint_radius();
  if (2.0 * m + 1.0 > double(std::min(canvas_h, canvas_w)))
    throw ConfigError("joint footprint does not fit the canvas at the maximal "
                      "grade; shrink the bars or enlarge the canvas");
}

int sample_score(Rng& rng, Task task, Limb limb, const JointSchema& schema,
                 const SynthConfig& cfg) {
  const ScoreRange range = score_range(schema, task, limb);
  if (rng.uniform() < cfg.score_zero_prob) return range.min;
  // truncated geometric over min+1 .. max, renormalized
  const int k = range.max - range.min;
  double total = 0.0, w = 1.0;
  for (int i = 0; i < k; ++i, w *= kGeometricRatio) total += w;
  double u = rng.uniform() * total;
  w = 1.0;
  for (int i = 1; i <= k; ++i, w *= kGeometricRatio) {
    u -= w;
    if (u < 0.0) return range.min + i;
  }
  return range.max;
}

double narrowing_gap(int narrowing, const SynthConfig& cfg) {
  return cfg.gap_base + double(4 - narrowing) * cfg.gap_per_grade;
}

namespace {

struct Placement {
  double cx, cy, cos_a, sin_a;
};

// Grid position for the i-th joint of a limb, before jitter.
Placement grid_slot(int i, int n_joints, int cols, const SynthConfig& cfg) {
  const int rows = (n_joints + cols - 1) / cols;
  const double margin = cfg.max_footprint_radius();
  const double span_x = double(cfg.canvas_w - 1) - 2.0 * margin;
  const double span_y = double(cfg.canvas_h - 1) - 2.0 * margin;
  const int col = i % cols, row = i / cols;
  Placement p{};
  p.cx = cols > 1 ? margin + span_x * double(col) / double(cols - 1)
                  : double(cfg.canvas_w - 1) / 2.0;
  p.cy = rows > 1 ? margin + span_y * double(row) / double(rows - 1)
                  : double(cfg.canvas_h - 1) / 2.0;
  return p;
}

void draw_joint(Image& img, const Placement& pl, double gap, double notch_r,
                const SynthConfig& cfg) {
  const double hl = cfg.bar_width / 2.0;
  const double v_in = gap / 2.0, v_out = gap / 2.0 + kBarThickness;

  // canvas-bounds check on the rotated corner hull of both bars
  for (const double su : {-hl, hl})
    for (const double sv : {-v_out, -v_in, v_in, v_out}) {
      const double x = pl.cx + pl.cos_a * su - pl.sin_a * sv;
      const double y = pl.cy + pl.sin_a * su + pl.cos_a * sv;
      if (x < 0.0 || y < 0.0 || x > double(img.w - 1) || y > double(img.h - 1))
        throw GeometryOverflow("joint footprint leaves the canvas at (" +
                               std::to_string(x) + ", " + std::to_string(y) + ")");
    }

  // The erosion notch sits at the end of the upper bar. Pixels are shaded by
  // 4x4 supersampled coverage so sub-pixel geometry (small notches, fine gap
  // changes) still moves intensity proportionally instead of vanishing.
  const double nu = hl, nv = v_in + kBarThickness / 2.0;
  const double r_ext = hl + v_out + 1.0;
  const int y0 = std::max(0, int(std::floor(pl.cy - r_ext)));
  const int y1 = std::min(img.h - 1, int(std::ceil(pl.cy + r_ext)));
  const int x0 = std::max(0, int(std::floor(pl.cx - r_ext)));
  const int x1 = std::min(img.w - 1, int(std::ceil(pl.cx + r_ext)));
  constexpr int kSub = 4;  // subsamples per axis
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      int inside = 0;
      for (int sy = 0; sy < kSub; ++sy)
        for (int sx = 0; sx < kSub; ++sx) {
          const double px = double(x) + (double(sx) + 0.5) / kSub - 0.5;
          const double py = double(y) + (double(sy) + 0.5) / kSub - 0.5;
          const double dx = px - pl.cx, dy = py - pl.cy;
          const double u = pl.cos_a * dx + pl.sin_a * dy;
          const double v = -pl.sin_a * dx + pl.cos_a * dy;
          if (std::abs(u) > hl) continue;
          const bool upper = v >= v_in && v <= v_out;
          const bool lower = v >= -v_out && v <= -v_in;
          if (!upper && !lower) continue;
          if (upper && notch_r > 0.0) {
            const double du = u - nu, dv = v - nv;
            if (du * du + dv * dv <= notch_r * notch_r) continue;  // eroded away
          }
          ++inside;
        }
      if (inside == 0) continue;
      const float value = float(kBarIntensity * double(inside) / (kSub * kSub));
      img.at(y, x) = std::max(img.at(y, x), value);
    }
}

}  // namespace

AnnotatedImage render_image(Rng& rng, Limb limb, Side side,
                            const std::vector<Joint>& joints,
                            const SynthConfig& cfg, const JointSchema& schema) {
  cfg.validate();
  const ScoreRange ero_range = score_range(schema, Task::Erosion, limb);
  const int cols = limb == Limb::Hand ? kHandCols : kFootCols;

  AnnotatedImage out;
  out.limb = limb;
  out.side = side;
  out.pixels = Image(cfg.canvas_h, cfg.canvas_w);
  for (size_t i = 0; i < joints.size(); ++i) {
    Joint j = joints[i];
    Placement pl = grid_slot(int(i), int(joints.size()), cols, cfg);
    pl.cx += rng.uniform(-kJitterMax, kJitterMax);
    pl.cy += rng.uniform(-kJitterMax, kJitterMax);
    const double angle =
        rng.uniform(-kAngleMaxDeg, kAngleMaxDeg) * M_PI / 180.0;
    pl.cos_a = std::cos(angle);
    pl.sin_a = std::sin(angle);

    const int narrowing = j.narrowing.value_or(0);
    const int erosion = j.erosion.value_or(0);
    const double gap = narrowing_gap(narrowing, cfg);
    const double normalized = double(erosion) / double(ero_range.max);
    const double notch_r = cfg.notch_per_grade * normalized * 5.0;
    draw_joint(out.pixels, pl, gap, notch_r, cfg);

    j.x = pl.cx;
    j.y = pl.cy;
    out.joints.push_back(j);
  }

  for (auto& px : out.pixels.px) {
    const double noisy = double(px) + rng.normal() * cfg.noise_sigma;
    px = float(std::min(1.0, std::max(0.0, noisy)));
  }
  return out;
}

std::vector<PatientRecord> generate_patients(const SynthConfig& cfg,
                                             const JointSchema& schema) {
  cfg.validate();
  const Rng root(cfg.seed);
  std::vector<PatientRecord> out;
  for (int p = 0; p < cfg.n_patients; ++p) {
    PatientRecord rec;
    char buf[32];
    std::snprintf(buf, sizeof buf, "P%03d", p);
    rec.patient_id = buf;
    const Rng patient_rng = root.child(uint64_t(p));
    for (const ImageKey key :
         {ImageKey::LH, ImageKey::RH, ImageKey::LF, ImageKey::RF}) {
      const Limb limb = limb_of(key);
      Rng img_rng = patient_rng.child(uint64_t(int(key)));
      std::vector<Joint> joints;
      for (const int id : schema.joint_ids_for(limb)) {
        Joint j;
        j.type_id = id;
        if (task_applies(schema, id, Task::Narrowing))
          j.narrowing = sample_score(img_rng, Task::Narrowing, limb, schema, cfg);
        if (task_applies(schema, id, Task::Erosion))
          j.erosion = sample_score(img_rng, Task::Erosion, limb, schema, cfg);
        joints.push_back(j);
      }
      AnnotatedImage img = render_image(img_rng, limb, side_of(key), joints,
                                        cfg, schema);
      validate_annotations(schema, img);
      rec.images[key] = std::move(img);
    }
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace svh
