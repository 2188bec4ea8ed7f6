#pragma once
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "svh/image.hpp"
#include "svh/model.hpp"
#include "svh/preprocess.hpp"
#include "svh/schema.hpp"
#include "svh/targets.hpp"

namespace svh {

// Everything a training run needs; defaults are the desk-scale baseline.
struct TrainConfig {
  int epochs = 30;
  int batch_size = 4;
  double max_lr = 3e-3;
  double div_initial = 25.0;  // initial lr = max_lr / div_initial
  double final_div = 1e4;     // final lr = initial lr / final_div
  double pct_up = 0.3;        // fraction of the run spent ramping up
  double weight_decay = 0.01;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  uint64_t seed = 0;
  int n_folds = 8;
  int val_fold = 0;
  NetworkConfig net;
  MaskConfig mask;
  SmoothingConfig smoothing;
  LossWeights loss_weights;
  AugmentRanges augment;

  void validate() const;
};

// Adam moments, aligned with the parameter layout.
struct OptimizerState {
  std::vector<Tensor<float>> m, v;
  int64_t step = 0;
};
OptimizerState make_optimizer_state(const NetworkConfig& cfg);

// Deterministic by-patient split: ids sorted lexicographically, the patient
// at sorted index i belongs to fold i mod n_folds, and fold val_fold is the
// validation set. Throws TooFewPatients when a fold would be empty.
std::pair<std::vector<std::string>, std::vector<std::string>> split_folds(
    const std::vector<std::string>& patient_ids, int n_folds, int val_fold);

// One-cycle schedule over training progress t in [0, 1]: cosine ramp from
// max_lr/div_initial up to max_lr on [0, pct_up], cosine anneal down to
// max_lr/(div_initial*final_div) on [pct_up, 1].
double lr_at(double t, const TrainConfig& cfg);

// One augmented image with its per-pixel targets.
struct TrainExample {
  Image image;
  PixelTargets targets;
};

// One decoupled-weight-decay Adam update with bias-corrected moments, from
// pre-accumulated gradients scaled by grad_scale (1/batch for batch means).
// Only parameters flagged for decay in the layout are decayed. Moment math
// runs in double; moments and parameters are stored as float. Throws
// NonFiniteLoss on a non-finite gradient. Exposed separately from
// Trainer::step so the update rule is testable in isolation.
void adamw_apply(NetParams<float>& params, OptimizerState& opt,
                 const NetParams<float>& grads, double grad_scale, double lr,
                 const TrainConfig& cfg, const std::vector<ParamInfo>& layout);

// Owns the reusable forward/backward buffers of one training run.
class Trainer {
 public:
  explicit Trainer(const TrainConfig& cfg);

  // Averages gradients over the batch and applies one decoupled-weight-decay
  // Adam update with bias-corrected moments; biases and normalization
  // scale/shift are exempt from decay. Returns the mean batch loss.
  // Throws NonFiniteLoss when any loss or gradient is not finite.
  double step(NetParams<float>& params, OptimizerState& opt,
              const std::vector<TrainExample>& batch, double lr);

 private:
  TrainConfig cfg_;
  std::vector<ParamInfo> layout_;
  Workspace<float> ws_;
  NetParams<float> grads_, batch_grads_;
};

// Single-shot convenience wrapper around Trainer::step.
double train_step(NetParams<float>& params, OptimizerState& opt,
                  const std::vector<TrainExample>& batch, double lr,
                  const TrainConfig& cfg);

struct EpochMetrics {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_rmse_narrowing = 0.0;
  double val_rmse_erosion = 0.0;
  double lr = 0.0;  // learning rate of the epoch's last step
};

struct FitResult {
  NetParams<float> params;
  std::vector<EpochMetrics> metrics;
  std::vector<std::string> train_ids, val_ids;
};

// Full training run: split folds, then per epoch shuffle the training
// patients, draw a fresh augmentation per image, rebuild targets from the
// transformed centers, and run batched updates; validation images are used
// untouched and only for metrics. When checkpoint_path is non-empty the
// final parameters are saved there. epochs = 0 returns the initialization
// with an empty metrics log.
FitResult fit(const std::vector<PatientRecord>& dataset, const TrainConfig& cfg,
              const JointSchema& schema, const std::string& checkpoint_path);

// CSV: header `epoch,train_loss,val_rmse_narrowing,val_rmse_erosion,lr`.
void write_metrics_csv(const std::vector<EpochMetrics>& metrics,
                       const std::string& path);

}  // namespace svh
