#pragma once
#include <string>
#include <vector>

#include "svh/image.hpp"

namespace svh {

// One of the 21 joint types shared between hands and feet. A type can be
// scored for narrowing, erosion, or both.
struct JointType {
  int id = 0;
  std::string name;
  bool has_narrowing = false;
  bool has_erosion = false;
};

struct ScoreRange {
  Task task;
  Limb limb;
  int min = 0;
  int max = 0;
};

// Joint taxonomy plus the toe-to-finger type mapping. 21 joint types and a
// background class give the 22 segmentation classes.
struct JointSchema {
  std::vector<JointType> types;  // indexed by id
  std::vector<int> foot_map;     // 6 type ids used on feet
  static constexpr int kBackgroundClass = 21;
  static constexpr int kNumTypes = 21;
  static constexpr int kSegClasses = 22;

  const JointType& type(int id) const { return types[size_t(id)]; }
  bool is_foot_type(int id) const;

  // Joint type ids present on an image of the given limb, ascending.
  std::vector<int> joint_ids_for(Limb limb) const;
};

// Counts-consistent default: J01-J10 scored for both tasks, J11-J15
// narrowing-only, J16-J21 erosion-only, feet mapped to J01-J06.
JointSchema default_schema();

// Load a schema manifest from JSON, or the default when path is empty.
// Throws MalformedManifest when counts, ids or the foot map are invalid.
JointSchema load_manifest(const std::string& path);
JointSchema parse_manifest(const std::string& json_text);

ScoreRange score_range(const JointSchema& schema, Task task, Limb limb);

// Whether `task` applies to joint type `type_id` on the given limb.
bool task_applies(const JointSchema& schema, int type_id, Task task);

// Sum of every narrowing and erosion score across the four images.
// Throws ScoreOutOfRange if any present score leaves its range and
// MissingScore if a scored joint lacks a truth value.
int total_svh(const JointSchema& schema, const PatientRecord& patient);

// Validate a single annotated image against the schema: joint types legal
// for the limb, centers inside bounds, scores present iff required and
// inside range. Throws on violation.
void validate_annotations(const JointSchema& schema, const AnnotatedImage& img);

}  // namespace svh
