#pragma once
// Shared fixtures for the unit tests: synthetic annotated images with joints
// laid out on a grid, and fully scored patients.
#include <algorithm>
#include <vector>

#include "svh/image.hpp"
#include "svh/schema.hpp"

namespace svh::testutil {

// Joints of the limb placed on an evenly spaced grid, every required score
// set to min(requested, range max).
inline AnnotatedImage grid_annotated(const JointSchema& schema, Limb limb,
                                     Side side, int h, int w, int narrowing,
                                     int erosion) {
  AnnotatedImage img;
  img.pixels = Image(h, w);
  img.limb = limb;
  img.side = side;
  const std::vector<int> ids = schema.joint_ids_for(limb);
  const int cols = limb == Limb::Hand ? 5 : 3;
  const int rows = (int(ids.size()) + cols - 1) / cols;
  const double mx = w / 8.0, my = h / 8.0;
  for (size_t i = 0; i < ids.size(); ++i) {
    const int c = int(i) % cols, r = int(i) / cols;
    Joint j;
    j.type_id = ids[i];
    j.x = cols > 1 ? mx + c * (w - 1 - 2 * mx) / (cols - 1) : w / 2.0;
    j.y = rows > 1 ? my + r * (h - 1 - 2 * my) / (rows - 1) : h / 2.0;
    const JointType& t = schema.type(j.type_id);
    if (t.has_narrowing)
      j.narrowing = std::min(narrowing, score_range(schema, Task::Narrowing, limb).max);
    if (t.has_erosion)
      j.erosion = std::min(erosion, score_range(schema, Task::Erosion, limb).max);
    img.joints.push_back(j);
  }
  return img;
}

inline PatientRecord scored_patient(const JointSchema& schema,
                                    const std::string& id, int h, int w,
                                    int narrowing, int erosion) {
  PatientRecord p;
  p.patient_id = id;
  for (ImageKey key : all_image_keys())
    p.images[key] = grid_annotated(schema, limb_of(key), side_of(key), h, w,
                                   narrowing, erosion);
  return p;
}

// Every score at its range maximum (total damage 448 under the defaults).
inline PatientRecord max_patient(const JointSchema& schema,
                                 const std::string& id, int h, int w) {
  return scored_patient(schema, id, h, w, 99, 99);
}

}  // namespace svh::testutil
