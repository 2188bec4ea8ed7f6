#pragma once
#include <optional>
#include <vector>

#include "svh/image.hpp"
#include "svh/model.hpp"
#include "svh/schema.hpp"

namespace svh {

// Expected damage scores and localization for one joint type on one image.
struct JointPrediction {
  int joint_type_id = 0;
  std::optional<double> expected_narrowing;  // absent when the task is not scored
  std::optional<double> expected_erosion;    // already doubled for feet; clamped
  double center_x = 0.0, center_y = 0.0;     // probability-weighted centroid
  int64_t support = 0;  // pixels claimed by the segmentation argmax
};

// Expectation of a distribution over classes 0..k-1. Throws NotNormalized
// when the entries do not sum to 1 within 1e-6.
double decode_expected(const std::vector<double>& dist);

// Runs the network on one preprocessed image and aggregates the per-pixel
// head distributions into per-joint scores. Pixels are assigned to the joint
// type winning the segmentation argmax (ties to the lowest class); a joint
// that wins no pixel falls back to a segmentation-probability-weighted
// average over all pixels. Foot erosion expectations are doubled. One entry
// per joint type of the limb, ascending by type id.
std::vector<JointPrediction> predict_image(const NetParams<float>& params,
                                           const NetworkConfig& cfg,
                                           const JointSchema& schema,
                                           const Image& image, Limb limb);

// Averages member expected scores and centers arithmetically, then clamps to
// the legal score ranges; support is summed across members. All members share
// one architecture. Throws EmptyEnsemble on an empty member list.
std::vector<JointPrediction> ensemble_predict(
    const std::vector<const NetParams<float>*>& members, const NetworkConfig& cfg,
    const JointSchema& schema, const Image& image, Limb limb);

}  // namespace svh
