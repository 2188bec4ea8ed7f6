#pragma once
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace svh {

enum class Limb { Hand, Foot };
enum class Side { Left, Right };
enum class Task { Narrowing, Erosion };

// The four radiographs of one patient.
enum class ImageKey { LH, RH, LF, RF };

inline const std::array<ImageKey, 4>& all_image_keys() {
  static const std::array<ImageKey, 4> keys = {ImageKey::LH, ImageKey::RH,
                                               ImageKey::LF, ImageKey::RF};
  return keys;
}

inline const char* to_string(ImageKey k) {
  switch (k) {
    case ImageKey::LH: return "LH";
    case ImageKey::RH: return "RH";
    case ImageKey::LF: return "LF";
    case ImageKey::RF: return "RF";
  }
  return "?";
}

inline const char* to_string(Task t) {
  return t == Task::Narrowing ? "narrowing" : "erosion";
}

inline Limb limb_of(ImageKey k) {
  return (k == ImageKey::LH || k == ImageKey::RH) ? Limb::Hand : Limb::Foot;
}

inline Side side_of(ImageKey k) {
  return (k == ImageKey::LH || k == ImageKey::LF) ? Side::Left : Side::Right;
}

inline ImageKey image_key(Limb limb, Side side) {
  if (limb == Limb::Hand)
    return side == Side::Left ? ImageKey::LH : ImageKey::RH;
  return side == Side::Left ? ImageKey::LF : ImageKey::RF;
}

// Grayscale intensity grid, values in [0,1], row-major.
struct Image {
  int h = 0, w = 0;
  std::vector<float> px;

  Image() = default;
  Image(int h_, int w_) : h(h_), w(w_), px(size_t(h_) * size_t(w_), 0.0f) {}

  float& at(int y, int x) { return px[size_t(y) * size_t(w) + size_t(x)]; }
  float at(int y, int x) const { return px[size_t(y) * size_t(w) + size_t(x)]; }

  bool operator==(const Image& o) const {
    return h == o.h && w == o.w && px == o.px;
  }
};

// One annotated joint center. Scores are absent where the joint type is not
// scored for that task.
struct Joint {
  int type_id = 0;
  double x = 0.0, y = 0.0;
  std::optional<int> narrowing;
  std::optional<int> erosion;
};

struct AnnotatedImage {
  Image pixels;
  Limb limb = Limb::Hand;
  Side side = Side::Left;
  std::vector<Joint> joints;
};

struct PatientRecord {
  std::string patient_id;
  std::map<ImageKey, AnnotatedImage> images;
};

}  // namespace svh
