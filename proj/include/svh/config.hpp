#pragma once
#include <string>

#include "svh/synth.hpp"
#include "svh/train.hpp"

namespace svh {

// File-system locations used by the command-line pipeline. Empty strings
// mean "not set"; each command checks the paths it actually needs.
struct RunPaths {
  std::string data_dir;        // dataset directory (annotations + PNGs)
  std::string output_dir = "out";  // where checkpoints, CSVs and reports go
  std::string manifest;        // joint-schema manifest; empty = built-in default
};

// One configuration object covering every stage of the pipeline. In the
// JSON form the network lives in its own top-level "network" section; here
// it is stored once as train.net. The top-level mask and smoothing sections
// are mirrored into the copies embedded in `train`, so a JSON file never
// repeats them.
struct RunConfig {
  RunPaths paths;
  SynthConfig synth;
  MaskConfig mask;
  SmoothingConfig smoothing;
  TrainConfig train;  // train.net holds the "network" section

  // Copies mask/smoothing into `train` and validates every section.
  // Throws ConfigError on any invalid value.
  void finalize();
};

// The default configuration (desk-scale values everywhere).
RunConfig default_run_config();

// Serializes a config as indented JSON with every key present, ending in a
// newline. parse_run_config(dump_run_config(c)) reproduces c exactly.
std::string dump_run_config(const RunConfig& cfg);

// Parses JSON text produced by a user or by dump_run_config. Absent keys keep
// their defaults; unknown keys and wrongly-typed values throw ConfigError.
// The result has been finalize()d.
RunConfig parse_run_config(const std::string& text);

// parse_run_config over the contents of `path`. Throws IoFailure when the
// file cannot be read.
RunConfig load_run_config(const std::string& path);

}  // namespace svh
