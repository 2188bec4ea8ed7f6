#pragma once
#include <string>
#include <vector>

#include "svh/eval.hpp"
#include "svh/image.hpp"
#include "svh/schema.hpp"
#include "svh/synth.hpp"

namespace svh {

// On-disk dataset layout: one flat directory holding, per patient,
// `<id>.json` (annotations) plus `<id>_LH.png`, `<id>_RH.png`, `<id>_LF.png`
// and `<id>_RF.png`. The JSON lists each image's file name relative to the
// directory together with its joints:
//   { "patient_id": "...", "images": { "LH": { "file": "...",
//     "joints": [{ "type": 0, "x": 12.5, "y": 8.0,
//                  "narrowing": 1, "erosion": null }, ...] }, ... } }

// Annotation JSON text for one patient (sorted keys, 2-space indent), with
// the given file name recorded per image key.
std::string annotations_to_json(const PatientRecord& patient);

// Parses one patient's annotation JSON and loads the referenced PNGs
// relative to `dir`. Throws ConfigError on malformed JSON and IoFailure on
// unreadable files.
PatientRecord load_patient(const std::string& json_path, const std::string& dir,
                           const JointSchema& schema);

// Writes every patient's images and annotations into `dir` (created if
// absent). Rewriting the same records produces byte-identical files.
void write_dataset(const std::vector<PatientRecord>& patients,
                   const std::string& dir);

// Loads every `*.json` patient in `dir`, sorted by patient id. Validates
// all annotations against the schema. Throws ConfigError on duplicate ids.
std::vector<PatientRecord> load_dataset(const std::string& dir,
                                        const JointSchema& schema);

// generate_patients + write_dataset in one step.
void generate_dataset(const SynthConfig& cfg, const JointSchema& schema,
                      const std::string& dir);

// Prediction CSV: header `patient_id,image,joint,task,predicted` plus a
// final `truth` column when truths are given; scores carry 4 decimal
// places. One row per (image, joint, applicable task), narrowing first.
void write_predictions_csv(const std::vector<ImagePredictions>& predictions,
                           const std::string& path,
                           const std::vector<PatientRecord>* truths = nullptr);

// EvalReport as a JSON object string, and the same written to a file.
std::string eval_report_to_json(const EvalReport& report);
void write_eval_report(const EvalReport& report, const std::string& path);

}  // namespace svh
