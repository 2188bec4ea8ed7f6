#include "svh/schema.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "svh/errors.hpp"

namespace svh {

using nlohmann::json;

bool JointSchema::is_foot_type(int id) const {
  return std::find(foot_map.begin(), foot_map.end(), id) != foot_map.end();
}

std::vector<int> JointSchema::joint_ids_for(Limb limb) const {
  if (limb == Limb::Foot) {
    std::vector<int> ids = foot_map;
    std::sort(ids.begin(), ids.end());
    return ids;
  }
  std::vector<int> ids(kNumTypes);
  for (int i = 0; i < kNumTypes; ++i) ids[size_t(i)] = i;
  return ids;
}

JointSchema default_schema() {
  JointSchema s;
  for (int i = 0; i < JointSchema::kNumTypes; ++i) {
    JointType t;
    t.id = i;
    char buf[8];
    std::snprintf(buf, sizeof(buf), "J%02d", i + 1);
    t.name = buf;
    t.has_narrowing = i < 15;              // J01-J15
    t.has_erosion = i < 10 || i >= 15;     // J01-J10, J16-J21
    s.types.push_back(t);
  }
  s.foot_map = {0, 1, 2, 3, 4, 5};
  return s;
}

static void validate_schema(const JointSchema& s) {
  if (s.types.size() != JointSchema::kNumTypes)
    throw MalformedManifest("manifest must define exactly 21 joint types, got " +
                            std::to_string(s.types.size()));
  std::set<int> ids;
  for (const auto& t : s.types) {
    if (t.id < 0 || t.id >= JointSchema::kNumTypes)
      throw MalformedManifest("joint type id out of range: " + std::to_string(t.id));
    if (!ids.insert(t.id).second)
      throw MalformedManifest("duplicate joint type id: " + std::to_string(t.id));
    if (!t.has_narrowing && !t.has_erosion)
      throw MalformedManifest("joint type " + t.name + " is scored for no task");
  }
  int n_narrow = 0, n_erosion = 0, n_both = 0;
  for (const auto& t : s.types) {
    n_narrow += t.has_narrowing ? 1 : 0;
    n_erosion += t.has_erosion ? 1 : 0;
    n_both += (t.has_narrowing && t.has_erosion) ? 1 : 0;
  }
  if (n_narrow != 15 || n_erosion != 16 || n_both != 10)
    throw MalformedManifest(
        "task counts must be 15 narrowing / 16 erosion / 10 both, got " +
        std::to_string(n_narrow) + "/" + std::to_string(n_erosion) + "/" +
        std::to_string(n_both));
  if (s.foot_map.size() != 6)
    throw MalformedManifest("foot_map must list exactly 6 type ids");
  std::set<int> feet;
  for (int id : s.foot_map) {
    if (id < 0 || id >= JointSchema::kNumTypes)
      throw MalformedManifest("foot_map id out of range: " + std::to_string(id));
    if (!feet.insert(id).second)
      throw MalformedManifest("foot_map lists id " + std::to_string(id) + " twice");
    const JointType& t = s.types[size_t(id)];
    if (!t.has_narrowing || !t.has_erosion)
      throw MalformedManifest("foot_map id " + std::to_string(id) +
                              " refers to a single-task type; feet carry both scores");
  }
}

JointSchema parse_manifest(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw MalformedManifest(std::string("manifest is not valid JSON: ") + e.what());
  }
  JointSchema s;
  try {
    std::vector<JointType> unordered;
    for (const auto& jt : j.at("types")) {
      JointType t;
      t.id = jt.at("id").get<int>();
      t.name = jt.at("name").get<std::string>();
      t.has_narrowing = jt.at("narrowing").get<bool>();
      t.has_erosion = jt.at("erosion").get<bool>();
      unordered.push_back(t);
    }
    // index by id so schema.type(id) is O(1); duplicate/oob ids caught below
    if (unordered.size() == JointSchema::kNumTypes) {
      s.types.resize(JointSchema::kNumTypes);
      std::set<int> seen;
      for (const auto& t : unordered) {
        if (t.id < 0 || t.id >= JointSchema::kNumTypes || !seen.insert(t.id).second) {
          s.types = unordered;
          break;
        }
        s.types[size_t(t.id)] = t;
      }
    } else {
      s.types = unordered;
    }
    s.foot_map = j.at("foot_map").get<std::vector<int>>();
  } catch (const json::exception& e) {
    throw MalformedManifest(std::string("manifest missing required field: ") + e.what());
  }
  validate_schema(s);
  return s;
}

JointSchema load_manifest(const std::string& path) {
  if (path.empty()) {
    JointSchema s = default_schema();
    validate_schema(s);
    return s;
  }
  std::ifstream in(path);
  if (!in) throw MalformedManifest("cannot open manifest: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str());
}

ScoreRange score_range(const JointSchema&, Task task, Limb limb) {
  ScoreRange r;
  r.task = task;
  r.limb = limb;
  r.min = 0;
  if (task == Task::Narrowing) {
    r.max = 4;
  } else {
    r.max = limb == Limb::Hand ? 5 : 10;
  }
  return r;
}

bool task_applies(const JointSchema& schema, int type_id, Task task) {
  const JointType& t = schema.type(type_id);
  return task == Task::Narrowing ? t.has_narrowing : t.has_erosion;
}

static int checked_score(const JointSchema& schema, const Joint& joint,
                         Task task, Limb limb, const std::string& where) {
  const std::optional<int>& v =
      task == Task::Narrowing ? joint.narrowing : joint.erosion;
  if (!v.has_value())
    throw MissingScore(where + ": joint type " + std::to_string(joint.type_id) +
                       " lacks a " + to_string(task) + " score");
  ScoreRange r = score_range(schema, task, limb);
  if (*v < r.min || *v > r.max)
    throw ScoreOutOfRange(where + ": " + to_string(task) + " score " +
                          std::to_string(*v) + " outside [" +
                          std::to_string(r.min) + "," + std::to_string(r.max) +
                          "]");
  return *v;
}

int total_svh(const JointSchema& schema, const PatientRecord& patient) {
  int total = 0;
  for (ImageKey key : all_image_keys()) {
    auto it = patient.images.find(key);
    if (it == patient.images.end())
      throw MissingScore("patient " + patient.patient_id + " lacks image " +
                         to_string(key));
    const AnnotatedImage& img = it->second;
    const std::string where = patient.patient_id + "/" + to_string(key);
    for (const Joint& j : img.joints) {
      if (task_applies(schema, j.type_id, Task::Narrowing))
        total += checked_score(schema, j, Task::Narrowing, img.limb, where);
      if (task_applies(schema, j.type_id, Task::Erosion))
        total += checked_score(schema, j, Task::Erosion, img.limb, where);
    }
  }
  return total;
}

void validate_annotations(const JointSchema& schema, const AnnotatedImage& img) {
  for (const Joint& j : img.joints) {
    if (j.type_id < 0 || j.type_id >= JointSchema::kNumTypes)
      throw ConfigError("joint type id out of range: " + std::to_string(j.type_id));
    if (img.limb == Limb::Foot && !schema.is_foot_type(j.type_id))
      throw ConfigError("joint type " + std::to_string(j.type_id) +
                        " is not a foot type");
    if (j.x < 0 || j.x > img.pixels.w - 1 || j.y < 0 || j.y > img.pixels.h - 1)
      throw ConfigError("joint center outside image bounds");
    for (Task task : {Task::Narrowing, Task::Erosion}) {
      const std::optional<int>& v =
          task == Task::Narrowing ? j.narrowing : j.erosion;
      if (v.has_value()) {
        ScoreRange r = score_range(schema, task, img.limb);
        if (*v < r.min || *v > r.max)
          throw ScoreOutOfRange(std::string(to_string(task)) + " score " +
                                std::to_string(*v) + " outside range");
      }
    }
  }
}

}  // namespace svh
