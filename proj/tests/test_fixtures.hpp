#pragma once
// Shared scaled-down configurations so unit tests that exercise full
// training loops stay fast. The geometry shrinks with the canvas: bars are
// 3 px long, gaps span 1..3 px, so the worst-case joint footprint fits a
// 16x16 canvas.
#include "svh/schema.hpp"
#include "svh/synth.hpp"
#include "svh/train.hpp"

namespace svh::testfix {

inline SynthConfig tiny_synth_config(uint64_t seed = 7, int n_patients = 8) {
  SynthConfig cfg;
  cfg.seed = seed;
  cfg.n_patients = n_patients;
  cfg.canvas_h = 16;
  cfg.canvas_w = 16;
  cfg.bar_width = 3.0;
  cfg.gap_base = 1.0;
  cfg.gap_per_grade = 0.5;
  cfg.notch_per_grade = 0.3;
  return cfg;
}

inline TrainConfig tiny_train_config(uint64_t seed = 7, int epochs = 2) {
  TrainConfig cfg;
  cfg.seed = seed;
  cfg.epochs = epochs;
  cfg.batch_size = 4;
  cfg.net.depth = 1;
  cfg.net.base_channels = 4;
  cfg.net.in_h = 16;
  cfg.net.in_w = 16;
  cfg.mask.r = 6.0;
  cfg.mask.R = 8.0;
  return cfg;
}

}  // namespace svh::testfix
