#pragma once
#include <cstdint>
#include <utility>

#include "svh/image.hpp"
#include "svh/rng.hpp"

namespace svh {

// Inclusive pixel box.
struct BBox {
  int row_min = 0, col_min = 0, row_max = 0, col_max = 0;
  int height() const { return row_max - row_min + 1; }
  int width() const { return col_max - col_min + 1; }
  void validate(int img_h, int img_w) const;
};

// One concrete augmentation: flip first, then rotate and scale about the
// image center. rng_seed records the stream position the spec was drawn at.
struct AugmentSpec {
  double rotation_deg = 0.0;
  double scale = 1.0;
  bool hflip = false;
  uint64_t rng_seed = 0;
};

struct AugmentRanges {
  double rotation_min = -15.0, rotation_max = 15.0;
  double scale_min = 0.9, scale_max = 1.1;
  double hflip_prob = 0.5;
  void validate() const;
};

// Edge-based content box: gradient magnitudes (3x3 kernels), double
// thresholding relative to the maximum magnitude, hysteresis keeping weak
// pixels 8-connected to a strong one, then a tight box with a relative
// margin. Throws NoContent when fewer than 50 pixels qualify.
BBox detect_bbox(const Image& pixels, double low_frac = 0.04,
                 double high_frac = 0.10, double margin_frac = 0.03);

// Crops the box and resamples it to (out_h, out_w) bilinearly; joint centers
// follow the same corner-anchored affine map. Throws CenterOutsideBox if an
// annotated center lies outside the box.
AnnotatedImage crop_resize(const AnnotatedImage& img, const BBox& box,
                           int out_h, int out_w);

// Forward map of a single point under the spec (flip, then rotate+scale
// about (w/2, h/2)).
std::pair<double, double> transform_point(double x, double y,
                                          const AugmentSpec& spec, int w, int h);

// Applies the spec: pixels via the inverse affine with bilinear sampling
// (reads outside the canvas as 0), centers via transform_point, side label
// swapped on flip. Throws CenterLost if a center leaves the canvas.
AnnotatedImage augment(const AnnotatedImage& img, const AugmentSpec& spec);

// Draws a spec from the configured ranges (rotation, scale, flip, seed, in
// that order, from the passed stream).
AugmentSpec draw_augment(const AugmentRanges& ranges, Rng& rng);

}  // namespace svh
