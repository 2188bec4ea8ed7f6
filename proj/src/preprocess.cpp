#include "svh/preprocess.hpp"

#include <cmath>
#include <deque>
#include <string>
#include <vector>

#include "svh/errors.hpp"
#include "svh/kernels.hpp"

namespace svh {

void BBox::validate(int img_h, int img_w) const {
  if (row_min > row_max || col_min > col_max || row_min < 0 || col_min < 0 ||
      row_max >= img_h || col_max >= img_w)
    throw ConfigError("invalid box [" + std::to_string(row_min) + "," +
                      std::to_string(col_min) + "]-[" + std::to_string(row_max) +
                      "," + std::to_string(col_max) + "] on " +
                      std::to_string(img_h) + "x" + std::to_string(img_w));
}

void AugmentRanges::validate() const {
  if (rotation_min > rotation_max || scale_min > scale_max || !(scale_min > 0.0) ||
      hflip_prob < 0.0 || hflip_prob > 1.0)
    throw ConfigError("invalid augmentation ranges");
}

BBox detect_bbox(const Image& pixels, double low_frac, double high_frac,
                 double margin_frac) {
  if (!(low_frac >= 0.0 && high_frac >= low_frac && margin_frac >= 0.0))
    throw ConfigError("edge thresholds must satisfy 0 <= low <= high, margin >= 0");
  const int h = pixels.h, w = pixels.w;
  if (h < 8 || w < 8)
    throw ConfigError("image too small for content detection: " +
                      std::to_string(h) + "x" + std::to_string(w));

  // 3x3 gradient kernels ([-1 0 1] differencing smoothed across the
  // perpendicular axis); borders get magnitude 0.
  std::vector<double> mag(size_t(h) * size_t(w), 0.0);
  double max_mag = 0.0;
  for (int y = 1; y + 1 < h; ++y) {
    for (int x = 1; x + 1 < w; ++x) {
      double gx = 0.0, gy = 0.0;
      for (int d = -1; d <= 1; ++d) {
        gx += double(pixels.at(y + d, x + 1)) - double(pixels.at(y + d, x - 1));
        gy += double(pixels.at(y + 1, x + d)) - double(pixels.at(y - 1, x + d));
      }
      const double m = std::sqrt(gx * gx + gy * gy);
      mag[size_t(y) * size_t(w) + size_t(x)] = m;
      if (m > max_mag) max_mag = m;
    }
  }

  const double strong_thr = high_frac * max_mag;
  const double weak_thr = low_frac * max_mag;
  // hysteresis: flood from strong pixels through weak ones, 8-connected
  std::vector<uint8_t> kept(size_t(h) * size_t(w), 0);
  std::deque<std::pair<int, int>> frontier;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (mag[size_t(y) * size_t(w) + size_t(x)] > strong_thr && max_mag > 0.0) {
        kept[size_t(y) * size_t(w) + size_t(x)] = 1;
        frontier.emplace_back(y, x);
      }
  while (!frontier.empty()) {
    auto [y, x] = frontier.front();
    frontier.pop_front();
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const int ny = y + dy, nx = x + dx;
        if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
        const size_t i = size_t(ny) * size_t(w) + size_t(nx);
        if (!kept[i] && mag[i] > weak_thr) {
          kept[i] = 1;
          frontier.emplace_back(ny, nx);
        }
      }
  }

  int count = 0;
  BBox box{h, w, -1, -1};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (kept[size_t(y) * size_t(w) + size_t(x)]) {
        ++count;
        box.row_min = std::min(box.row_min, y);
        box.row_max = std::max(box.row_max, y);
        box.col_min = std::min(box.col_min, x);
        box.col_max = std::max(box.col_max, x);
      }
  if (count < 50)
    throw NoContent("content detection found only " + std::to_string(count) +
                    " edge pixels (need 50)");

  const int mr = int(std::lround(margin_frac * box.height()));
  const int mc = int(std::lround(margin_frac * box.width()));
  box.row_min = std::max(0, box.row_min - mr);
  box.row_max = std::min(h - 1, box.row_max + mr);
  box.col_min = std::max(0, box.col_min - mc);
  box.col_max = std::min(w - 1, box.col_max + mc);
  return box;
}

AnnotatedImage crop_resize(const AnnotatedImage& img, const BBox& box,
                           int out_h, int out_w) {
  box.validate(img.pixels.h, img.pixels.w);
  if (out_h < 1 || out_w < 1)
    throw ConfigError("output size must be positive");
  for (const Joint& j : img.joints)
    if (j.x < box.col_min || j.x > box.col_max || j.y < box.row_min ||
        j.y > box.row_max)
      throw CenterOutsideBox("joint type " + std::to_string(j.type_id) +
                             " center (" + std::to_string(j.x) + "," +
                             std::to_string(j.y) + ") outside content box");

  AnnotatedImage out;
  out.limb = img.limb;
  out.side = img.side;
  out.pixels = Image(out_h, out_w);
  // corner-anchored map: output pixel (0,0) sits on the box corner and the
  // step is box_extent/out_extent, so an identity box reproduces pixels
  // bit-exactly and power-of-two downscales move centers exactly
  const double m[6] = {double(box.width()) / out_w, 0.0, double(box.col_min),
                       0.0, double(box.height()) / out_h, double(box.row_min)};
  kernels::warp_affine_bilinear(img.pixels.px.data(), img.pixels.h,
                                img.pixels.w, m, out.pixels.px.data(), out_h,
                                out_w);
  out.joints = img.joints;
  for (Joint& j : out.joints) {
    j.x = (j.x - box.col_min) * out_w / box.width();
    j.y = (j.y - box.row_min) * out_h / box.height();
  }
  return out;
}

std::pair<double, double> transform_point(double x, double y,
                                          const AugmentSpec& spec, int w, int h) {
  double px = spec.hflip ? double(w - 1) - x : x;
  const double cx = w / 2.0, cy = h / 2.0;
  const double theta = spec.rotation_deg * (3.14159265358979323846 / 180.0);
  const double c = std::cos(theta), s = std::sin(theta);
  const double dx = px - cx, dy = y - cy;
  return {cx + spec.scale * (c * dx - s * dy),
          cy + spec.scale * (s * dx + c * dy)};
}

AnnotatedImage augment(const AnnotatedImage& img, const AugmentSpec& spec) {
  if (!(spec.scale > 0.0)) throw ConfigError("augmentation scale must be > 0");
  const int h = img.pixels.h, w = img.pixels.w;
  const double cx = w / 2.0, cy = h / 2.0;
  const double theta = spec.rotation_deg * (3.14159265358979323846 / 180.0);
  const double a = std::cos(theta) / spec.scale;
  const double b = std::sin(theta) / spec.scale;
  // inverse map: un-rotate/un-scale about the center, then un-flip
  double m[6] = {a, b, cx - a * cx - b * cy,
                 -b, a, cy + b * cx - a * cy};
  if (spec.hflip) {
    m[2] = double(w - 1) - m[2];
    m[0] = -m[0];
    m[1] = -m[1];
  }

  AnnotatedImage out;
  out.limb = img.limb;
  out.side = spec.hflip ? (img.side == Side::Left ? Side::Right : Side::Left)
                        : img.side;
  out.pixels = Image(h, w);
  kernels::warp_affine_bilinear(img.pixels.px.data(), h, w, m,
                                out.pixels.px.data(), h, w);
  out.joints = img.joints;
  for (Joint& j : out.joints) {
    auto [nx, ny] = transform_point(j.x, j.y, spec, w, h);
    if (nx < 0.0 || nx > double(w - 1) || ny < 0.0 || ny > double(h - 1))
      throw CenterLost("joint type " + std::to_string(j.type_id) +
                       " left the canvas under rotation " +
                       std::to_string(spec.rotation_deg) + " scale " +
                       std::to_string(spec.scale));
    j.x = nx;
    j.y = ny;
  }
  return out;
}

AugmentSpec draw_augment(const AugmentRanges& ranges, Rng& rng) {
  ranges.validate();
  AugmentSpec spec;
  spec.rotation_deg = rng.uniform(ranges.rotation_min, ranges.rotation_max);
  spec.scale = rng.uniform(ranges.scale_min, ranges.scale_max);
  spec.hflip = rng.bernoulli(ranges.hflip_prob);
  spec.rng_seed = rng.next_u64();
  return spec;
}

}  // namespace svh
