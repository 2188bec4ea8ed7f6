#pragma once
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "svh/image.hpp"
#include "svh/infer.hpp"
#include "svh/schema.hpp"
#include "svh/train.hpp"

namespace svh {

// Pooled metrics over one evaluation set.
struct EvalReport {
  double rmse_narrowing = 0.0;
  double rmse_erosion = 0.0;
  double mean_center_error_px = 0.0;
  int64_t n_narrowing = 0;  // (image, joint) pairs pooled per task
  int64_t n_erosion = 0;
};

// Joint predictions for one image of one patient.
struct ImagePredictions {
  std::string patient_id;
  ImageKey key = ImageKey::LH;
  std::vector<JointPrediction> joints;
};

// sqrt(mean squared difference) over (predicted, truth) pairs.
// Throws EmptySet on an empty list.
double rmse(const std::vector<std::pair<double, double>>& pairs);

// Pools every scored (image, joint) pair of the truth set against the
// matching prediction. Throws MissingPrediction when a truth joint has no
// prediction or the prediction lacks a required score. Tasks with no scored
// joints report RMSE 0 with a 0 count.
EvalReport evaluate(const std::vector<ImagePredictions>& predictions,
                    const std::vector<PatientRecord>& truths,
                    const JointSchema& schema);

// Predictions for every image of every patient, via ensemble averaging
// (a single member reduces to plain prediction).
std::vector<ImagePredictions> predict_dataset(
    const std::vector<const NetParams<float>*>& members, const NetworkConfig& cfg,
    const JointSchema& schema, const std::vector<PatientRecord>& patients);

// Predict-then-evaluate over a patient list with one model.
EvalReport evaluate_model(const NetParams<float>& params, const NetworkConfig& cfg,
                          const JointSchema& schema,
                          const std::vector<PatientRecord>& patients);

// One trained-and-evaluated cell of a parameter sweep.
struct AblationRow {
  std::string param;  // "p" or "r"
  double value = 0.0;
  uint64_t seed = 0;
  double rmse_narrowing = 0.0;
  double rmse_erosion = 0.0;
};

enum class SweepParam { SmoothingP, MaskRadius };

// Trains one model per (value, seed) with everything else pinned to `base`,
// evaluates each on the validation fold, and returns |values| x |seeds| rows.
// SmoothingP sweeps the label-smoothing mass; MaskRadius sweeps the joint
// radius with the ignore radius held at the base value.
std::vector<AblationRow> ablate(const std::vector<PatientRecord>& dataset,
                                const TrainConfig& base, const JointSchema& schema,
                                SweepParam param, const std::vector<double>& values,
                                const std::vector<uint64_t>& seeds);

// CSV: header `param,value,seed,rmse_narrowing,rmse_erosion`, one row each.
void write_ablation_csv(const std::vector<AblationRow>& rows,
                        const std::string& path);

// Two-panel line plot (one per task): median over seeds with a min-max band.
void write_ablation_svg(const std::vector<AblationRow>& rows,
                        const std::string& path);

}  // namespace svh
