#pragma once
#include <cstdint>
#include <vector>

#include "svh/image.hpp"
#include "svh/rng.hpp"
#include "svh/schema.hpp"

namespace svh {

// Generator settings for synthetic joint images. Each joint is drawn as two
// parallel bright bars whose separation encodes the narrowing grade and an
// end notch whose radius encodes the erosion grade, so both tasks are
// locally readable from pixels.
struct SynthConfig {
  uint64_t seed = 0;
  int n_patients = 1;
  int canvas_h = 64, canvas_w = 64;
  int joints_per_hand = 21;
  int joints_per_foot = 6;
  double bar_width = 5.0;       // bar length across the joint, px
  double gap_base = 2.0;        // gap at the maximal narrowing grade, px
  double gap_per_grade = 1.5;   // extra gap per missing narrowing grade, px
  double notch_per_grade = 0.8; // erosion notch radius per normalized grade step
  double noise_sigma = 0.05;    // additive Gaussian background noise
  double score_zero_prob = 0.5; // healthy-joint probability

  // Worst-case distance from a joint center to the edge of its footprint
  // (maximal gap, extreme rotation, extreme jitter).
  double max_footprint_radius() const;
  // Throws ConfigError when the worst-case footprint cannot fit the canvas.
  void validate() const;
};

// Zero-inflated truncated-geometric score: 0 with probability
// score_zero_prob, otherwise k in 1..max with probability proportional to
// 0.6^(k-1). Always within the task's score range.
int sample_score(Rng& rng, Task task, Limb limb, const JointSchema& schema,
                 const SynthConfig& cfg);

// Bar separation (px) drawn for a narrowing grade: gap_base plus
// gap_per_grade for every grade below the hand maximum of 4. Healthy joints
// get the widest gap; fully narrowed joints get gap_base.
double narrowing_gap(int narrowing, const SynthConfig& cfg);

// Renders one image: joints laid out on a grid (left-to-right, top-to-bottom
// in ascending type id), each jittered up to 2 px and rotated up to 10
// degrees, bars at intensity 0.9 composited by maximum, then Gaussian noise
// clipped to [0,1]. Input joints supply type ids and scores; their centers
// are ignored and replaced by the placed positions. Unscored tasks render as
// grade 0. Throws GeometryOverflow when a footprint leaves the canvas.
AnnotatedImage render_image(Rng& rng, Limb limb, Side side,
                            const std::vector<Joint>& joints,
                            const SynthConfig& cfg, const JointSchema& schema);

// Full reproducible cohort: n_patients records with all four images, each
// patient generated from its own child stream of cfg.seed.
std::vector<PatientRecord> generate_patients(const SynthConfig& cfg,
                                             const JointSchema& schema);

}  // namespace svh
