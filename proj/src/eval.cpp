#include "svh/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include "svh/errors.hpp"

namespace svh {

double rmse(const std::vector<std::pair<double, double>>& pairs) {
  if (pairs.empty()) throw EmptySet("rmse over an empty pair list");
  double acc = 0.0;
  for (const auto& [pred, truth] : pairs) {
    const double d = pred - truth;
    acc += d * d;
  }
  return std::sqrt(acc / double(pairs.size()));
}

EvalReport evaluate(const std::vector<ImagePredictions>& predictions,
                    const std::vector<PatientRecord>& truths,
                    const JointSchema& schema) {
  // (patient, image, joint type) -> prediction
  std::map<std::tuple<std::string, ImageKey, int>, const JointPrediction*> index;
  for (const ImagePredictions& ip : predictions)
    for (const JointPrediction& jp : ip.joints)
      index[{ip.patient_id, ip.key, jp.joint_type_id}] = &jp;

  std::vector<std::pair<double, double>> nar, ero;
  double center_sum = 0.0;
  int64_t center_n = 0;
  for (const PatientRecord& patient : truths)
    for (const auto& [key, img] : patient.images)
      for (const Joint& joint : img.joints) {
        if (joint.type_id < 0 || joint.type_id >= int(schema.types.size()))
          throw ConfigError("truth joint type " + std::to_string(joint.type_id) +
                            " is outside the schema");
        const auto it = index.find({patient.patient_id, key, joint.type_id});
        if (it == index.end())
          throw MissingPrediction("no prediction for patient " +
                                  patient.patient_id + " image " +
                                  to_string(key) + " joint type " +
                                  std::to_string(joint.type_id));
        const JointPrediction& p = *it->second;
        if (joint.narrowing) {
          if (!p.expected_narrowing)
            throw MissingPrediction("prediction lacks a narrowing score for "
                                    "patient " + patient.patient_id);
          nar.emplace_back(*p.expected_narrowing, double(*joint.narrowing));
        }
        if (joint.erosion) {
          if (!p.expected_erosion)
            throw MissingPrediction("prediction lacks an erosion score for "
                                    "patient " + patient.patient_id);
          ero.emplace_back(*p.expected_erosion, double(*joint.erosion));
        }
        const double dx = p.center_x - joint.x, dy = p.center_y - joint.y;
        center_sum += std::sqrt(dx * dx + dy * dy);
        ++center_n;
      }

  EvalReport r;
  r.n_narrowing = int64_t(nar.size());
  r.n_erosion = int64_t(ero.size());
  r.rmse_narrowing = nar.empty() ? 0.0 : rmse(nar);
  r.rmse_erosion = ero.empty() ? 0.0 : rmse(ero);
  r.mean_center_error_px = center_n > 0 ? center_sum / double(center_n) : 0.0;
  return r;
}

}  // namespace svh
