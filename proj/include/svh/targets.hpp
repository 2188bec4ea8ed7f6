#pragma once
#include <vector>

#include "svh/image.hpp"
#include "svh/kernels.hpp"
#include "svh/schema.hpp"
#include "svh/tensor.hpp"

namespace svh {

// Class counts of the two damage heads. Narrowing grades are 0..4 on both
// limbs. Erosion grades are 0..5 on hands; foot grades 0..10 are halved to
// land in the same 6-class space.
inline constexpr int kNarrowingClasses = 5;
inline constexpr int kErosionClasses = 6;

using kernels::kIgnoreClass;

struct MaskConfig {
  double r = 32.0;  // joint radius: pixels closer than this get the joint class
  double R = 40.0;  // ignore radius: pixels in (r, R] are excluded from loss
  void validate() const;
};

struct SmoothingConfig {
  double p = 0.1;  // probability mass moved to the two neighboring grades
  void validate() const;
};

// Per-pixel training targets for one image.
struct PixelTargets {
  int h = 0, w = 0;
  Tensor<uint8_t> seg;              // [h][w]; 0..20 joint, 21 background, 255 ignore
  Tensor<double> narrowing_target;  // [h][w][5]
  Tensor<uint8_t> narrowing_valid;  // [h][w]; 1 where narrowing is supervised
  Tensor<double> erosion_target;    // [h][w][6]
  Tensor<uint8_t> erosion_valid;    // [h][w]
};

// Classifies every pixel by distance to the nearest center: joint id within
// r, ignore in (r, R], background beyond R. Ties go to the lowest type id.
Tensor<uint8_t> build_mask(const std::vector<kernels::MaskCenter>& centers,
                           const MaskConfig& cfg, int h, int w);

// Distribution with mass 1-p on x and p/2 on each in-range neighbor;
// mass whose neighbor falls outside [0, k) stays on x.
std::vector<double> smooth_label(int x, int k, const SmoothingConfig& cfg);

// Splits a real-valued target across floor(t) and ceil(t), smoothing each
// part. Equals smooth_label bit-for-bit when t is an integer.
std::vector<double> fractional_target(double t, int k, const SmoothingConfig& cfg);

// Full target construction for one annotated image: segmentation map plus
// per-pixel damage distributions wherever the pixel's joint carries the task.
PixelTargets build_pixel_targets(const AnnotatedImage& image,
                                 const JointSchema& schema,
                                 const MaskConfig& mask_cfg,
                                 const SmoothingConfig& smooth_cfg);

}  // namespace svh
