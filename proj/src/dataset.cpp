#include "svh/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "json.hpp"
#include "svh/errors.hpp"
#include "svh/image_io.hpp"

namespace svh {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::array<ImageKey, 4> kAllKeys{ImageKey::LH, ImageKey::RH, ImageKey::LF,
                                       ImageKey::RF};

std::string png_name(const std::string& patient_id, ImageKey key) {
  return patient_id + "_" + to_string(key) + ".png";
}

ImageKey key_from_string(const std::string& s) {
  for (const ImageKey key : kAllKeys)
    if (to_string(key) == s) return key;
  throw ConfigError("unknown image key '" + s + "'");
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure("cannot open " + path + " for writing");
  out << text;
  if (!out) throw IoFailure("cannot write " + path);
}

}  // namespace

std::string annotations_to_json(const PatientRecord& patient) {
  json images = json::object();
  for (const auto& [key, img] : patient.images) {
    json joints = json::array();
    for (const Joint& j : img.joints) {
      json joint;
      joint["type"] = j.type_id;
      joint["x"] = j.x;
      joint["y"] = j.y;
      joint["narrowing"] = j.narrowing ? json(*j.narrowing) : json(nullptr);
      joint["erosion"] = j.erosion ? json(*j.erosion) : json(nullptr);
      joints.push_back(std::move(joint));
    }
    json entry;
    entry["file"] = png_name(patient.patient_id, key);
    entry["joints"] = std::move(joints);
    images[to_string(key)] = std::move(entry);
  }
  json root;
  root["patient_id"] = patient.patient_id;
  root["images"] = std::move(images);
  return root.dump(2) + "\n";
}

PatientRecord load_patient(const std::string& json_path, const std::string& dir,
                           const JointSchema& schema) {
  std::ifstream in(json_path, std::ios::binary);
  if (!in) throw IoFailure("cannot open " + json_path);
  json root;
  try {
    root = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(json_path + ": " + e.what());
  }

  PatientRecord patient;
  try {
    patient.patient_id = root.at("patient_id").get<std::string>();
    for (const auto& [key_name, entry] : root.at("images").items()) {
      const ImageKey key = key_from_string(key_name);
      AnnotatedImage img;
      img.limb = limb_of(key);
      img.side = side_of(key);
      img.pixels =
          read_png_gray((fs::path(dir) / entry.at("file").get<std::string>()).string());
      for (const auto& joint : entry.at("joints")) {
        Joint j;
        j.type_id = joint.at("type").get<int>();
        j.x = joint.at("x").get<double>();
        j.y = joint.at("y").get<double>();
        if (!joint.at("narrowing").is_null())
          j.narrowing = joint.at("narrowing").get<int>();
        if (!joint.at("erosion").is_null())
          j.erosion = joint.at("erosion").get<int>();
        img.joints.push_back(j);
      }
      patient.images.emplace(key, std::move(img));
    }
  } catch (const json::exception& e) {
    throw ConfigError(json_path + ": " + e.what());
  }
  for (const auto& [key, img] : patient.images) validate_annotations(schema, img);
  return patient;
}

void write_dataset(const std::vector<PatientRecord>& patients,
                   const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoFailure("cannot create directory " + dir + ": " + ec.message());
  for (const PatientRecord& p : patients) {
    if (p.patient_id.empty()) throw ConfigError("patient id must not be empty");
    for (const auto& [key, img] : p.images)
      write_png_gray(img.pixels,
                     (fs::path(dir) / png_name(p.patient_id, key)).string());
    write_text((fs::path(dir) / (p.patient_id + ".json")).string(),
               annotations_to_json(p));
  }
}

std::vector<PatientRecord> load_dataset(const std::string& dir,
                                        const JointSchema& schema) {
  if (!fs::is_directory(dir)) throw IoFailure(dir + " is not a directory");
  std::vector<std::string> json_files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json")
      json_files.push_back(entry.path().string());
  std::sort(json_files.begin(), json_files.end());

  std::vector<PatientRecord> patients;
  std::set<std::string> seen;
  for (const std::string& path : json_files) {
    PatientRecord p = load_patient(path, dir, schema);
    if (!seen.insert(p.patient_id).second)
      throw ConfigError("duplicate patient id '" + p.patient_id + "'");
    patients.push_back(std::move(p));
  }
  std::sort(patients.begin(), patients.end(),
            [](const PatientRecord& a, const PatientRecord& b) {
              return a.patient_id < b.patient_id;
            });
  return patients;
}

void generate_dataset(const SynthConfig& cfg, const JointSchema& schema,
                      const std::string& dir) {
  write_dataset(generate_patients(cfg, schema), dir);
}

void write_predictions_csv(const std::vector<ImagePredictions>& predictions,
                           const std::string& path,
                           const std::vector<PatientRecord>* truths) {
  std::map<std::string, const PatientRecord*> truth_by_id;
  if (truths)
    for (const PatientRecord& p : *truths) truth_by_id[p.patient_id] = &p;

  std::string text = truths ? "patient_id,image,joint,task,predicted,truth\n"
                            : "patient_id,image,joint,task,predicted\n";
  char buf[64];
  auto append_row = [&](const ImagePredictions& ip, int joint, const char* task,
                        double predicted, const std::optional<int>& truth) {
    text += ip.patient_id;
    text += ',';
    text += to_string(ip.key);
    std::snprintf(buf, sizeof buf, ",%d,%s,%.4f", joint, task, predicted);
    text += buf;
    if (truths) {
      text += ',';
      if (truth) text += std::to_string(*truth);
    }
    text += '\n';
  };

  for (const ImagePredictions& ip : predictions) {
    const AnnotatedImage* truth_img = nullptr;
    if (truths) {
      const auto it = truth_by_id.find(ip.patient_id);
      if (it != truth_by_id.end()) {
        const auto img_it = it->second->images.find(ip.key);
        if (img_it != it->second->images.end()) truth_img = &img_it->second;
      }
    }
    for (const JointPrediction& jp : ip.joints) {
      std::optional<int> truth_nar, truth_ero;
      if (truth_img)
        for (const Joint& j : truth_img->joints)
          if (j.type_id == jp.joint_type_id) {
            truth_nar = j.narrowing;
            truth_ero = j.erosion;
          }
      if (jp.expected_narrowing)
        append_row(ip, jp.joint_type_id, "narrowing", *jp.expected_narrowing,
                   truth_nar);
      if (jp.expected_erosion)
        append_row(ip, jp.joint_type_id, "erosion", *jp.expected_erosion, truth_ero);
    }
  }
  write_text(path, text);
}

std::string eval_report_to_json(const EvalReport& report) {
  json root;
  root["rmse_narrowing"] = report.rmse_narrowing;
  root["rmse_erosion"] = report.rmse_erosion;
  root["mean_center_error_px"] = report.mean_center_error_px;
  root["n_narrowing"] = report.n_narrowing;
  root["n_erosion"] = report.n_erosion;
  return root.dump(2) + "\n";
}

void write_eval_report(const EvalReport& report, const std::string& path) {
  write_text(path, eval_report_to_json(report));
}

}  // namespace svh
