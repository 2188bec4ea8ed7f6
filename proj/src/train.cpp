#include "svh/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include "svh/errors.hpp"
#include "svh/eval.hpp"
#include "svh/infer.hpp"
#include "svh/log.hpp"
#include "svh/rng.hpp"

namespace svh {

void TrainConfig::validate() const {
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(max_lr > 0)) throw ConfigError("max_lr must be > 0");
  if (!(div_initial > 0) || !(final_div > 0))
    throw ConfigError("lr divisors must be > 0");
  if (!(pct_up > 0.0) || !(pct_up < 1.0))
    throw ConfigError("pct_up must lie strictly inside (0, 1)");
  if (weight_decay < 0) throw ConfigError("weight_decay must be >= 0");
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1))
    throw ConfigError("betas must lie in [0, 1)");
  if (!(eps > 0)) throw ConfigError("eps must be > 0");
  if (n_folds < 2) throw ConfigError("n_folds must be >= 2");
  if (val_fold < 0 || val_fold >= n_folds)
    throw ConfigError("val_fold must lie in [0, n_folds)");
  net.validate();
  mask.validate();
  smoothing.validate();
  loss_weights.validate();
  augment.validate();
}

OptimizerState make_optimizer_state(const NetworkConfig& cfg) {
  OptimizerState s;
  for (const ParamInfo& info : param_layout(cfg)) {
    s.m.emplace_back(info.shape);
    s.v.emplace_back(info.shape);
  }
  return s;
}

std::pair<std::vector<std::string>, std::vector<std::string>> split_folds(
    const std::vector<std::string>& patient_ids, int n_folds, int val_fold) {
  if (n_folds < 2) throw ConfigError("n_folds must be >= 2");
  if (val_fold < 0 || val_fold >= n_folds)
    throw ConfigError("val_fold must lie in [0, n_folds)");
  std::vector<std::string> sorted = patient_ids;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw ConfigError("patient ids must be unique");
  if (int(sorted.size()) < n_folds)
    throw TooFewPatients(std::to_string(sorted.size()) + " patients cannot fill " +
                         std::to_string(n_folds) + " folds");
  std::vector<std::string> train, val;
  for (size_t i = 0; i < sorted.size(); ++i)
    (int(i % size_t(n_folds)) == val_fold ? val : train).push_back(sorted[i]);
  return {std::move(train), std::move(val)};
}

double lr_at(double t, const TrainConfig& cfg) {
  if (!(t >= 0.0 && t <= 1.0))
    throw ConfigError("training progress must lie in [0, 1]");
  const double peak = cfg.max_lr;
  const double lr0 = cfg.max_lr / cfg.div_initial;
  const double lr_min = lr0 / cfg.final_div;
  if (t <= cfg.pct_up) {
    const double u = t / cfg.pct_up;
    if (u == 1.0) return peak;  // the ramp attains the peak exactly
    return lr0 + (peak - lr0) * (1.0 - std::cos(M_PI * u)) / 2.0;
  }
  const double u = (t - cfg.pct_up) / (1.0 - cfg.pct_up);
  return lr_min + (peak - lr_min) * (1.0 + std::cos(M_PI * u)) / 2.0;
}

Trainer::Trainer(const TrainConfig& cfg)
    : cfg_(cfg), layout_(param_layout(cfg.net)) {
  cfg_.validate();
}

double Trainer::step(NetParams<float>& params, OptimizerState& opt,
                     const std::vector<TrainExample>& batch, double lr) {
  if (batch.empty()) throw ConfigError("training batch is empty");
  if (opt.m.size() != layout_.size() || opt.v.size() != layout_.size())
    throw ShapeMismatch("optimizer state does not match the parameter layout");

  if (batch_grads_.t.empty()) batch_grads_ = zeros_like_params<float>(cfg_.net);
  batch_grads_.zero();
  double loss_sum = 0.0;
  for (size_t bi = 0; bi < batch.size(); ++bi) {
    const TrainExample& ex = batch[bi];
    const LossTerms terms = loss_and_grad(params, cfg_.net, ex.image, ex.targets,
                                          cfg_.loss_weights, ws_, grads_);
    if (!std::isfinite(terms.total))
      throw NonFiniteLoss("loss is " + std::to_string(terms.total) +
                          " on batch image " + std::to_string(bi));
    loss_sum += terms.total;
    for (size_t i = 0; i < batch_grads_.t.size(); ++i) {
      float* acc = batch_grads_.t[i].ptr();
      const float* g = grads_.t[i].ptr();
      for (int64_t j = 0; j < batch_grads_.t[i].numel(); ++j) acc[j] += g[j];
    }
  }
  const double inv_n = 1.0 / double(batch.size());
  adamw_apply(params, opt, batch_grads_, inv_n, lr, cfg_, layout_);
  return loss_sum * inv_n;
}

void adamw_apply(NetParams<float>& params, OptimizerState& opt,
                 const NetParams<float>& grads, double grad_scale, double lr,
                 const TrainConfig& cfg, const std::vector<ParamInfo>& layout) {
  if (params.t.size() != layout.size() || grads.t.size() != layout.size() ||
      opt.m.size() != layout.size() || opt.v.size() != layout.size())
    throw ShapeMismatch("optimizer update does not match the parameter layout");
  opt.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, double(opt.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, double(opt.step));
  for (size_t i = 0; i < layout.size(); ++i) {
    const double wd = layout[i].decay ? cfg.weight_decay : 0.0;
    float* p = params.t[i].ptr();
    float* m = opt.m[i].ptr();
    float* v = opt.v[i].ptr();
    const float* bg = grads.t[i].ptr();
    for (int64_t j = 0; j < params.t[i].numel(); ++j) {
      const double g = double(bg[j]) * grad_scale;
      if (!std::isfinite(g))
        throw NonFiniteLoss("non-finite gradient in " + layout[i].name);
      const double mj = cfg.beta1 * double(m[j]) + (1.0 - cfg.beta1) * g;
      const double vj = cfg.beta2 * double(v[j]) + (1.0 - cfg.beta2) * g * g;
      m[j] = float(mj);
      v[j] = float(vj);
      const double update =
          (mj / bc1) / (std::sqrt(vj / bc2) + cfg.eps) + wd * double(p[j]);
      p[j] = float(double(p[j]) - lr * update);
    }
  }
}

double train_step(NetParams<float>& params, OptimizerState& opt,
                  const std::vector<TrainExample>& batch, double lr,
                  const TrainConfig& cfg) {
  Trainer t(cfg);
  return t.step(params, opt, batch, lr);
}

namespace {

// Stable substream salts; stable identity keeps the augmentation draws
// independent of the epoch shuffle order.
constexpr uint64_t kSaltShuffle = 0xA1;
constexpr uint64_t kSaltAugment = 0xA2;

// A fresh augmentation for one (epoch, image) slot: redraw a bounded number
// of times if a draw pushes a joint center off the canvas, then fall back to
// the identity (which never loses centers of a valid annotation).
AnnotatedImage augment_with_retry(const AnnotatedImage& img, const AugmentRanges& ranges,
                                  Rng rng) {
  for (int attempt = 0; attempt < 8; ++attempt) {
    const AugmentSpec spec = draw_augment(ranges, rng);
    try {
      return augment(img, spec);
    } catch (const CenterLost&) {
      continue;
    }
  }
  return augment(img, AugmentSpec{});
}

}  // namespace

FitResult fit(const std::vector<PatientRecord>& dataset, const TrainConfig& cfg,
              const JointSchema& schema, const std::string& checkpoint_path) {
  cfg.validate();
  std::vector<std::string> ids;
  std::map<std::string, const PatientRecord*> by_id;
  for (const PatientRecord& p : dataset) {
    ids.push_back(p.patient_id);
    by_id[p.patient_id] = &p;
  }
  if (by_id.size() != dataset.size())
    throw ConfigError("duplicate patient ids in the dataset");
  for (const PatientRecord& p : dataset)
    for (const auto& [key, img] : p.images)
      if (img.pixels.h != cfg.net.in_h || img.pixels.w != cfg.net.in_w)
        throw ShapeMismatch("patient " + p.patient_id + " image " +
                            to_string(key) + " is not at network resolution");

  FitResult result;
  std::tie(result.train_ids, result.val_ids) =
      split_folds(ids, cfg.n_folds, cfg.val_fold);

  // stable per-image identity for the augmentation streams
  std::map<std::string, uint64_t> patient_index;
  {
    std::vector<std::string> sorted = ids;
    std::sort(sorted.begin(), sorted.end());
    for (size_t i = 0; i < sorted.size(); ++i) patient_index[sorted[i]] = i;
  }

  result.params = init_params<float>(cfg.net, cfg.seed);
  OptimizerState opt = make_optimizer_state(cfg.net);
  Trainer trainer(cfg);
  const Rng root(cfg.seed);

  int64_t train_images = 0;
  for (const std::string& id : result.train_ids)
    train_images += int64_t(by_id[id]->images.size());
  if (train_images == 0) throw ConfigError("no training images after the split");
  const int64_t steps_per_epoch =
      (train_images + cfg.batch_size - 1) / cfg.batch_size;
  const int64_t total_steps = steps_per_epoch * cfg.epochs;

  std::vector<PatientRecord> val_records;
  for (const std::string& id : result.val_ids) val_records.push_back(*by_id[id]);

  int64_t global_step = 0;
  double last_lr = 0.0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::vector<std::string> order = result.train_ids;
    {
      Rng shuffle_rng = root.child(kSaltShuffle).child(uint64_t(epoch));
      shuffle_rng.shuffle(order);
    }

    // flatten this epoch's images, augmenting each with its own stream
    std::vector<TrainExample> batch;
    double epoch_loss = 0.0;
    int64_t epoch_images = 0;
    auto flush = [&] {
      if (batch.empty()) return;
      const double t =
          total_steps > 1 ? double(global_step) / double(total_steps - 1) : 0.0;
      last_lr = lr_at(t, cfg);
      double loss;
      try {
        loss = trainer.step(result.params, opt, batch, last_lr);
      } catch (const NonFiniteLoss& e) {
        throw NonFiniteLoss(std::string(e.what()) + " (epoch " +
                            std::to_string(epoch) + ", step " +
                            std::to_string(global_step) + ")");
      }
      epoch_loss += loss * double(batch.size());
      epoch_images += int64_t(batch.size());
      ++global_step;
      batch.clear();
    };
    for (const std::string& id : order) {
      const PatientRecord& patient = *by_id[id];
      for (const auto& [key, img] : patient.images) {
        const uint64_t slot = patient_index[id] * 4 + uint64_t(int(key));
        Rng aug_rng = root.child(kSaltAugment)
                          .child(uint64_t(epoch))
                          .child(slot);
        AnnotatedImage aug = augment_with_retry(img, cfg.augment, aug_rng);
        TrainExample ex;
        ex.targets = build_pixel_targets(aug, schema, cfg.mask, cfg.smoothing);
        ex.image = std::move(aug.pixels);
        batch.push_back(std::move(ex));
        if (int(batch.size()) == cfg.batch_size) flush();
      }
    }
    flush();

    // validation happens on the untouched images and never feeds gradients
    const EvalReport report =
        evaluate_model(result.params, cfg.net, schema, val_records);

    EpochMetrics m;
    m.epoch = epoch;
    m.train_loss = epoch_loss / double(epoch_images);
    m.val_rmse_narrowing = report.rmse_narrowing;
    m.val_rmse_erosion = report.rmse_erosion;
    m.lr = last_lr;
    result.metrics.push_back(m);
    log_info("epoch %d/%d loss %.6f val rmse %.4f/%.4f", epoch, cfg.epochs,
             m.train_loss, m.val_rmse_narrowing, m.val_rmse_erosion);
  }

  if (!checkpoint_path.empty()) {
    std::string meta = "{\"seed\": " + std::to_string(cfg.seed) +
                       ", \"epochs\": " + std::to_string(cfg.epochs) +
                       ", \"val_fold\": " + std::to_string(cfg.val_fold) + "}";
    save_checkpoint(checkpoint_path, cfg.net, result.params, meta);
  }
  return result;
}

void write_metrics_csv(const std::vector<EpochMetrics>& metrics,
                       const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoFailure("cannot open metrics log for writing: " + path);
  out << "epoch,train_loss,val_rmse_narrowing,val_rmse_erosion,lr\n";
  char buf[160];
  for (const EpochMetrics& m : metrics) {
    std::snprintf(buf, sizeof buf, "%d,%.10g,%.10g,%.10g,%.10g\n", m.epoch,
                  m.train_loss, m.val_rmse_narrowing, m.val_rmse_erosion, m.lr);
    out << buf;
  }
  if (!out) throw IoFailure("failed writing metrics log: " + path);
}

}  // namespace svh
