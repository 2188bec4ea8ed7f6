#include "svh/config.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>

#include "json.hpp"
#include "svh/errors.hpp"

namespace svh {
namespace {

using nlohmann::json;

// Rejects keys that are not in the allowed set, so typos fail loudly
// instead of silently keeping a default.
void check_keys(const json& j, const std::string& section,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object())
    throw ConfigError("config section \"" + section + "\" must be an object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* key : allowed)
      if (item.key() == key) {
        known = true;
        break;
      }
    if (!known)
      throw ConfigError("unknown key \"" + item.key() + "\" in config section \"" +
                        section + "\"");
  }
}

// Overwrites `out` with j[key] when the key is present, reporting the
// section and key on a type mismatch.
template <typename T>
void read_field(const json& j, const std::string& section, const char* key,
                T& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("config key \"" + section + "." + key + "\": " + e.what());
  }
}

json paths_to_json(const RunPaths& p) {
  return json{{"data_dir", p.data_dir},
              {"output_dir", p.output_dir},
              {"manifest", p.manifest}};
}

void paths_from_json(const json& j, RunPaths& p) {
  check_keys(j, "paths", {"data_dir", "output_dir", "manifest"});
  read_field(j, "paths", "data_dir", p.data_dir);
  read_field(j, "paths", "output_dir", p.output_dir);
  read_field(j, "paths", "manifest", p.manifest);
}

json synth_to_json(const SynthConfig& c) {
  return json{{"seed", c.seed},
              {"n_patients", c.n_patients},
              {"canvas_h", c.canvas_h},
              {"canvas_w", c.canvas_w},
              {"joints_per_hand", c.joints_per_hand},
              {"joints_per_foot", c.joints_per_foot},
              {"bar_width", c.bar_width},
              {"gap_base", c.gap_base},
              {"gap_per_grade", c.gap_per_grade},
              {"notch_per_grade", c.notch_per_grade},
              {"noise_sigma", c.noise_sigma},
              {"score_zero_prob", c.score_zero_prob}};
}

void synth_from_json(const json& j, SynthConfig& c) {
  check_keys(j, "synth",
             {"seed", "n_patients", "canvas_h", "canvas_w", "joints_per_hand",
              "joints_per_foot", "bar_width", "gap_base", "gap_per_grade",
              "notch_per_grade", "noise_sigma", "score_zero_prob"});
  read_field(j, "synth", "seed", c.seed);
  read_field(j, "synth", "n_patients", c.n_patients);
  read_field(j, "synth", "canvas_h", c.canvas_h);
  read_field(j, "synth", "canvas_w", c.canvas_w);
  read_field(j, "synth", "joints_per_hand", c.joints_per_hand);
  read_field(j, "synth", "joints_per_foot", c.joints_per_foot);
  read_field(j, "synth", "bar_width", c.bar_width);
  read_field(j, "synth", "gap_base", c.gap_base);
  read_field(j, "synth", "gap_per_grade", c.gap_per_grade);
  read_field(j, "synth", "notch_per_grade", c.notch_per_grade);
  read_field(j, "synth", "noise_sigma", c.noise_sigma);
  read_field(j, "synth", "score_zero_prob", c.score_zero_prob);
}

json mask_to_json(const MaskConfig& c) {
  return json{{"r", c.r}, {"R", c.R}};
}

void mask_from_json(const json& j, MaskConfig& c) {
  check_keys(j, "mask", {"r", "R"});
  read_field(j, "mask", "r", c.r);
  read_field(j, "mask", "R", c.R);
}

json smoothing_to_json(const SmoothingConfig& c) {
  return json{{"p", c.p}};
}

void smoothing_from_json(const json& j, SmoothingConfig& c) {
  check_keys(j, "smoothing", {"p"});
  read_field(j, "smoothing", "p", c.p);
}

json network_to_json(const NetworkConfig& c) {
  return json{{"depth", c.depth},
              {"base_channels", c.base_channels},
              {"in_h", c.in_h},
              {"in_w", c.in_w},
              {"norm_groups", c.norm_groups},
              {"head_classes", c.head_classes}};
}

void network_from_json(const json& j, NetworkConfig& c) {
  check_keys(j, "network",
             {"depth", "base_channels", "in_h", "in_w", "norm_groups",
              "head_classes"});
  read_field(j, "network", "depth", c.depth);
  read_field(j, "network", "base_channels", c.base_channels);
  read_field(j, "network", "in_h", c.in_h);
  read_field(j, "network", "in_w", c.in_w);
  read_field(j, "network", "norm_groups", c.norm_groups);
  read_field(j, "network", "head_classes", c.head_classes);
}

json loss_weights_to_json(const LossWeights& c) {
  return json{{"lambda_seg", c.lambda_seg},
              {"lambda_narrow", c.lambda_narrow},
              {"lambda_erosion", c.lambda_erosion}};
}

void loss_weights_from_json(const json& j, LossWeights& c) {
  check_keys(j, "train.loss_weights",
             {"lambda_seg", "lambda_narrow", "lambda_erosion"});
  read_field(j, "train.loss_weights", "lambda_seg", c.lambda_seg);
  read_field(j, "train.loss_weights", "lambda_narrow", c.lambda_narrow);
  read_field(j, "train.loss_weights", "lambda_erosion", c.lambda_erosion);
}

json augment_to_json(const AugmentRanges& c) {
  return json{{"rotation_min", c.rotation_min},
              {"rotation_max", c.rotation_max},
              {"scale_min", c.scale_min},
              {"scale_max", c.scale_max},
              {"hflip_prob", c.hflip_prob}};
}

void augment_from_json(const json& j, AugmentRanges& c) {
  check_keys(j, "train.augment",
             {"rotation_min", "rotation_max", "scale_min", "scale_max",
              "hflip_prob"});
  read_field(j, "train.augment", "rotation_min", c.rotation_min);
  read_field(j, "train.augment", "rotation_max", c.rotation_max);
  read_field(j, "train.augment", "scale_min", c.scale_min);
  read_field(j, "train.augment", "scale_max", c.scale_max);
  read_field(j, "train.augment", "hflip_prob", c.hflip_prob);
}

json train_to_json(const TrainConfig& c) {
  return json{{"epochs", c.epochs},
              {"batch_size", c.batch_size},
              {"max_lr", c.max_lr},
              {"div_initial", c.div_initial},
              {"final_div", c.final_div},
              {"pct_up", c.pct_up},
              {"weight_decay", c.weight_decay},
              {"beta1", c.beta1},
              {"beta2", c.beta2},
              {"eps", c.eps},
              {"seed", c.seed},
              {"n_folds", c.n_folds},
              {"val_fold", c.val_fold},
              {"loss_weights", loss_weights_to_json(c.loss_weights)},
              {"augment", augment_to_json(c.augment)}};
}

void train_from_json(const json& j, TrainConfig& c) {
  // The embedded network/mask/smoothing live in their own top-level
  // sections; RunConfig::finalize copies them in.
  check_keys(j, "train",
             {"epochs", "batch_size", "max_lr", "div_initial", "final_div",
              "pct_up", "weight_decay", "beta1", "beta2", "eps", "seed",
              "n_folds", "val_fold", "loss_weights", "augment"});
  read_field(j, "train", "epochs", c.epochs);
  read_field(j, "train", "batch_size", c.batch_size);
  read_field(j, "train", "max_lr", c.max_lr);
  read_field(j, "train", "div_initial", c.div_initial);
  read_field(j, "train", "final_div", c.final_div);
  read_field(j, "train", "pct_up", c.pct_up);
  read_field(j, "train", "weight_decay", c.weight_decay);
  read_field(j, "train", "beta1", c.beta1);
  read_field(j, "train", "beta2", c.beta2);
  read_field(j, "train", "eps", c.eps);
  read_field(j, "train", "seed", c.seed);
  read_field(j, "train", "n_folds", c.n_folds);
  read_field(j, "train", "val_fold", c.val_fold);
  if (auto it = j.find("loss_weights"); it != j.end())
    loss_weights_from_json(*it, c.loss_weights);
  if (auto it = j.find("augment"); it != j.end())
    augment_from_json(*it, c.augment);
}

}  // namespace

void RunConfig::finalize() {
  train.mask = mask;
  train.smoothing = smoothing;
  // train.validate() checks the embedded copies along with everything else.
  synth.validate();
  mask.validate();
  smoothing.validate();
  train.validate();
}

RunConfig default_run_config() {
  RunConfig cfg;
  cfg.finalize();
  return cfg;
}

std::string dump_run_config(const RunConfig& cfg) {
  json j{{"paths", paths_to_json(cfg.paths)},
         {"synth", synth_to_json(cfg.synth)},
         {"mask", mask_to_json(cfg.mask)},
         {"smoothing", smoothing_to_json(cfg.smoothing)},
         {"network", network_to_json(cfg.train.net)},
         {"train", train_to_json(cfg.train)}};
  return j.dump(2) + "\n";
}

RunConfig parse_run_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config JSON: ") + e.what());
  }
  check_keys(j, "top level",
             {"paths", "synth", "mask", "smoothing", "network", "train"});
  RunConfig cfg;
  if (auto it = j.find("paths"); it != j.end()) paths_from_json(*it, cfg.paths);
  if (auto it = j.find("synth"); it != j.end()) synth_from_json(*it, cfg.synth);
  if (auto it = j.find("mask"); it != j.end()) mask_from_json(*it, cfg.mask);
  if (auto it = j.find("smoothing"); it != j.end())
    smoothing_from_json(*it, cfg.smoothing);
  if (auto it = j.find("network"); it != j.end())
    network_from_json(*it, cfg.train.net);
  if (auto it = j.find("train"); it != j.end()) train_from_json(*it, cfg.train);
  cfg.finalize();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot read config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoFailure("error reading config file: " + path);
  return parse_run_config(buf.str());
}

}  // namespace svh
