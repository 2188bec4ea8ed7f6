// Command-line front end: every pipeline stage as a subcommand sharing one
// JSON config file, a single seed, and a common output directory.
#include <omp.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "svh/config.hpp"
#include "svh/dataset.hpp"
#include "svh/errors.hpp"
#include "svh/eval.hpp"
#include "svh/infer.hpp"
#include "svh/log.hpp"
#include "svh/model.hpp"
#include "svh/preprocess.hpp"
#include "svh/schema.hpp"
#include "svh/train.hpp"

namespace fs = std::filesystem;
using namespace svh;

namespace {

// Where datasets are read from (and written by `synth`) when the config
// does not name a data directory explicitly.
std::string data_dir_of(const RunConfig& cfg) {
  return cfg.paths.data_dir.empty() ? cfg.paths.output_dir + "/data"
                                    : cfg.paths.data_dir;
}

void ensure_output_dir(const RunConfig& cfg) {
  fs::create_directories(cfg.paths.output_dir);
}

// Resolves --checkpoint/--ensemble-dir into loaded members and checks that
// they share one architecture.
std::vector<Checkpoint> load_members(std::vector<std::string> paths,
                                     const std::string& ensemble_dir) {
  if (!ensemble_dir.empty()) {
    std::vector<std::string> found;
    if (!fs::is_directory(ensemble_dir))
      throw IoFailure("not a directory: " + ensemble_dir);
    for (const auto& entry : fs::directory_iterator(ensemble_dir))
      if (entry.path().extension() == ".ckpt")
        found.push_back(entry.path().string());
    std::sort(found.begin(), found.end());
    paths.insert(paths.end(), found.begin(), found.end());
  }
  if (paths.empty())
    throw ConfigError("no model given: pass --checkpoint or --ensemble-dir");
  std::vector<Checkpoint> members;
  members.reserve(paths.size());
  for (const auto& p : paths) members.push_back(load_checkpoint(p));
  const NetworkConfig& a = members.front().config;
  for (const auto& m : members) {
    const NetworkConfig& b = m.config;
    if (b.depth != a.depth || b.base_channels != a.base_channels ||
        b.in_h != a.in_h || b.in_w != a.in_w || b.norm_groups != a.norm_groups ||
        b.head_classes != a.head_classes)
      throw ConfigError("ensemble members disagree on the network architecture");
  }
  return members;
}

std::vector<const NetParams<float>*> member_pointers(
    const std::vector<Checkpoint>& members) {
  std::vector<const NetParams<float>*> out;
  out.reserve(members.size());
  for (const auto& m : members) out.push_back(&m.params);
  return out;
}

void run_synth(const RunConfig& cfg, const JointSchema& schema) {
  const std::string dir = data_dir_of(cfg);
  generate_dataset(cfg.synth, schema, dir);
  log_info("wrote %d synthetic patients to %s", cfg.synth.n_patients,
           dir.c_str());
}

void run_preprocess(const RunConfig& cfg, const JointSchema& schema) {
  auto patients = load_dataset(data_dir_of(cfg), schema);
  const int h = cfg.train.net.in_h, w = cfg.train.net.in_w;
  for (auto& patient : patients)
    for (auto& [key, img] : patient.images) {
      const BBox box = detect_bbox(img.pixels);
      img = crop_resize(img, box, h, w);
    }
  const std::string dir = cfg.paths.output_dir + "/preprocessed";
  write_dataset(patients, dir);
  log_info("preprocessed %zu patients into %s (%dx%d)", patients.size(),
           dir.c_str(), h, w);
}

void run_train(const RunConfig& cfg, const JointSchema& schema) {
  auto patients = load_dataset(data_dir_of(cfg), schema);
  ensure_output_dir(cfg);
  const std::string ckpt = cfg.paths.output_dir + "/model.ckpt";
  const FitResult result = fit(patients, cfg.train, schema, ckpt);
  write_metrics_csv(result.metrics, cfg.paths.output_dir + "/metrics.csv");
  if (!result.metrics.empty()) {
    const EpochMetrics& last = result.metrics.back();
    log_info("final val rmse narrowing %.4f erosion %.4f; checkpoint %s",
             last.val_rmse_narrowing, last.val_rmse_erosion, ckpt.c_str());
  }
}

void run_train_ensemble(const RunConfig& cfg, const JointSchema& schema,
                        int n_members) {
  if (n_members < 1) throw ConfigError("--n must be >= 1");
  auto patients = load_dataset(data_dir_of(cfg), schema);
  const std::string dir = cfg.paths.output_dir + "/ensemble";
  fs::create_directories(dir);
  for (int m = 0; m < n_members; ++m) {
    TrainConfig tc = cfg.train;
    tc.seed = cfg.train.seed + uint64_t(m);
    tc.val_fold = m % tc.n_folds;
    char name[32];
    std::snprintf(name, sizeof(name), "member_%02d", m);
    const std::string ckpt = dir + "/" + name + ".ckpt";
    const FitResult result = fit(patients, tc, schema, ckpt);
    write_metrics_csv(result.metrics, dir + "/" + name + "_metrics.csv");
    if (!result.metrics.empty())
      log_info("member %d/%d: val rmse narrowing %.4f erosion %.4f", m + 1,
               n_members, result.metrics.back().val_rmse_narrowing,
               result.metrics.back().val_rmse_erosion);
  }
  log_info("ensemble of %d models in %s", n_members, dir.c_str());
}

void run_predict(const RunConfig& cfg, const JointSchema& schema,
                 const std::vector<std::string>& checkpoints,
                 const std::string& ensemble_dir) {
  const auto members = load_members(checkpoints, ensemble_dir);
  const auto patients = load_dataset(data_dir_of(cfg), schema);
  const auto predictions = predict_dataset(member_pointers(members),
                                           members.front().config, schema,
                                           patients);
  ensure_output_dir(cfg);
  const std::string path = cfg.paths.output_dir + "/predictions.csv";
  write_predictions_csv(predictions, path, &patients);
  log_info("wrote %s (%zu members, %zu patients)", path.c_str(),
           members.size(), patients.size());
}

void run_evaluate(const RunConfig& cfg, const JointSchema& schema,
                  const std::vector<std::string>& checkpoints,
                  const std::string& ensemble_dir) {
  const auto members = load_members(checkpoints, ensemble_dir);
  const auto patients = load_dataset(data_dir_of(cfg), schema);
  const auto predictions = predict_dataset(member_pointers(members),
                                           members.front().config, schema,
                                           patients);
  const EvalReport report = evaluate(predictions, patients, schema);
  ensure_output_dir(cfg);
  const std::string path = cfg.paths.output_dir + "/eval.json";
  write_eval_report(report, path);
  std::fputs(eval_report_to_json(report).c_str(), stdout);
  log_info("wrote %s", path.c_str());
}

void run_ablate(const RunConfig& cfg, const JointSchema& schema,
                const std::string& param, int n_seeds) {
  if (n_seeds < 1) throw ConfigError("--seeds must be >= 1");
  SweepParam sweep;
  std::vector<double> values;
  if (param == "p") {
    sweep = SweepParam::SmoothingP;
    values = {0.0, 0.05, 0.1, 0.2};
  } else if (param == "r") {
    sweep = SweepParam::MaskRadius;
    values = {16.0, 24.0, 32.0, 40.0};
  } else {
    throw ConfigError("--param must be p or r");
  }
  const auto patients = load_dataset(data_dir_of(cfg), schema);
  auto seeds = std::vector<uint64_t>(size_t(n_seeds));
  for (int s = 0; s < n_seeds; ++s) seeds[size_t(s)] = cfg.train.seed + uint64_t(s);
  const auto rows = ablate(patients, cfg.train, schema, sweep, values, seeds);
  ensure_output_dir(cfg);
  const std::string base = cfg.paths.output_dir + "/ablation_" + param;
  write_ablation_csv(rows, base + ".csv");
  write_ablation_svg(rows, base + ".svg");
  log_info("wrote %s.csv and %s.svg (%zu rows)", base.c_str(), base.c_str(),
           rows.size());
}

void run_gradcheck(uint64_t seed, double h, double tol) {
  NetworkConfig small;
  small.depth = 1;
  small.base_channels = 4;
  small.in_h = small.in_w = 8;
  const GradCheckReport report = gradient_check(small, seed, h);
  std::printf("max relative error %.3e over %lld parameters (worst: %s)\n",
              report.max_rel_err, static_cast<long long>(report.checked),
              report.worst_param.c_str());
  if (!(report.max_rel_err < tol))
    throw Error("gradient check failed: " + std::to_string(report.max_rel_err) +
                " >= tolerance " + std::to_string(tol));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint-damage scoring pipeline: synthetic data, per-pixel "
               "multi-task training, score decoding and evaluation"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  uint64_t seed = 0;
  int threads = 0;
  auto* config_opt =
      app.add_option("--config", config_path, "JSON config file");
  auto* seed_opt = app.add_option(
      "--seed", seed, "Master seed for data generation and training");
  app.add_option("--threads", threads, "Worker threads (0 = library default)");
  auto* out_opt = app.add_option("--out", out_dir, "Output directory");

  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset");
  int n_patients = 0;
  synth_cmd->add_option("--patients", n_patients, "Number of patients");

  auto* preprocess_cmd = app.add_subcommand(
      "preprocess", "Content-box crop and resize a dataset to the network input");

  auto* train_cmd = app.add_subcommand("train", "Train one model");

  auto* ensemble_cmd =
      app.add_subcommand("train-ensemble", "Train an ensemble of models");
  int n_members = 8;
  ensemble_cmd->add_option("--n", n_members, "Ensemble size")
      ->capture_default_str();

  std::vector<std::string> checkpoints;
  std::string ensemble_dir;
  auto* predict_cmd =
      app.add_subcommand("predict", "Write per-joint score predictions as CSV");
  predict_cmd->add_option("--checkpoint", checkpoints,
                          "Model checkpoint (repeat to ensemble)");
  predict_cmd->add_option("--ensemble-dir", ensemble_dir,
                          "Directory of .ckpt members");

  auto* evaluate_cmd =
      app.add_subcommand("evaluate", "Evaluate predictions against annotations");
  evaluate_cmd->add_option("--checkpoint", checkpoints,
                           "Model checkpoint (repeat to ensemble)");
  evaluate_cmd->add_option("--ensemble-dir", ensemble_dir,
                           "Directory of .ckpt members");

  auto* ablate_cmd = app.add_subcommand(
      "ablate", "Sweep label smoothing or mask radius and emit CSV + SVG");
  std::string ablate_param;
  ablate_cmd->add_option("--param", ablate_param, "p (smoothing) or r (radius)")
      ->required();
  int ablate_seeds = 5;
  ablate_cmd->add_option("--seeds", ablate_seeds, "Seeds per value")
      ->capture_default_str();

  auto* gradcheck_cmd = app.add_subcommand(
      "gradcheck", "Compare analytic gradients against finite differences");
  double gc_h = 1e-5, gc_tol = 1e-4;
  gradcheck_cmd->add_option("--step", gc_h, "Finite-difference step")
      ->capture_default_str();
  gradcheck_cmd->add_option("--tol", gc_tol, "Maximum relative error")
      ->capture_default_str();

  auto* config_cmd =
      app.add_subcommand("config", "Print the effective configuration");
  bool print_defaults = false;
  config_cmd->add_flag("--print-defaults", print_defaults,
                       "Print the built-in defaults instead");

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (threads > 0) omp_set_num_threads(threads);

    RunConfig cfg =
        (*config_opt) ? load_run_config(config_path) : default_run_config();
    if (*seed_opt) {
      cfg.synth.seed = seed;
      cfg.train.seed = seed;
    }
    if (*out_opt) cfg.paths.output_dir = out_dir;
    if (synth_cmd->parsed() && n_patients > 0) cfg.synth.n_patients = n_patients;
    cfg.finalize();

    const JointSchema schema = load_manifest(cfg.paths.manifest);

    if (config_cmd->parsed()) {
      std::fputs(dump_run_config(print_defaults ? default_run_config() : cfg)
                     .c_str(),
                 stdout);
    } else if (synth_cmd->parsed()) {
      run_synth(cfg, schema);
    } else if (preprocess_cmd->parsed()) {
      run_preprocess(cfg, schema);
    } else if (train_cmd->parsed()) {
      run_train(cfg, schema);
    } else if (ensemble_cmd->parsed()) {
      run_train_ensemble(cfg, schema, n_members);
    } else if (predict_cmd->parsed()) {
      run_predict(cfg, schema, checkpoints, ensemble_dir);
    } else if (evaluate_cmd->parsed()) {
      run_evaluate(cfg, schema, checkpoints, ensemble_dir);
    } else if (ablate_cmd->parsed()) {
      run_ablate(cfg, schema, ablate_param, ablate_seeds);
    } else if (gradcheck_cmd->parsed()) {
      run_gradcheck(*seed_opt ? seed : 0, gc_h, gc_tol);
    }
    return 0;
  } catch (const ConfigError& e) {
    log_error("%s", e.what());
    return 1;
  } catch (const std::exception& e) {
    log_error("%s", e.what());
    return 2;
  }
}
