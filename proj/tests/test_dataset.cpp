#include <png.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "svh/dataset.hpp"
#include "svh/errors.hpp"
#include "svh/image_io.hpp"
#include "svh/rng.hpp"
#include "svh/synth.hpp"
#include "svh/targets.hpp"
#include "test_fixtures.hpp"

using namespace svh;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("svh_test_" + tag);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(bool(in));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Minimal libpng writer used to produce inputs the library itself never
// writes (16-bit grayscale, RGB).
void write_test_png(const std::string& path, int h, int w, int depth,
                    int color_type, const std::vector<uint16_t>& values) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  REQUIRE(f != nullptr);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  png_init_io(png, f);
  png_set_IHDR(png, info, png_uint_32(w), png_uint_32(h), depth, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const int channels = color_type == PNG_COLOR_TYPE_RGB ? 3 : 1;
  std::vector<png_byte> row;
  for (int y = 0; y < h; ++y) {
    row.clear();
    for (int x = 0; x < w * channels; ++x) {
      const uint16_t v = values[size_t(y) * size_t(w) * size_t(channels) + size_t(x)];
      if (depth == 16) {
        row.push_back(png_byte(v >> 8));
        row.push_back(png_byte(v & 0xff));
      } else {
        row.push_back(png_byte(v));
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(f);
}

}  // namespace

TEST_CASE("png gray round trip at 8 bits") {
  TempDir dir("png8");
  const std::string path = (dir.path / "img.png").string();

  Image img(5, 7);
  Rng rng(10);
  for (auto& px : img.px) px = float(rng.uniform());
  img.at(0, 0) = 0.0f;
  img.at(0, 1) = 1.0f;
  img.at(0, 2) = -0.25f;  // clipped on write
  img.at(0, 3) = 1.75f;

  write_png_gray(img, path);
  const Image back = read_png_gray(path);
  REQUIRE(back.h == img.h);
  REQUIRE(back.w == img.w);
  CHECK(back.at(0, 0) == 0.0f);
  CHECK(back.at(0, 1) == 1.0f);
  CHECK(back.at(0, 2) == 0.0f);
  CHECK(back.at(0, 3) == 1.0f);
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x) {
      const double v = std::min(1.0, std::max(0.0, double(img.at(y, x))));
      CHECK(std::abs(double(back.at(y, x)) - v) <= 0.5 / 255.0 + 1e-9);
    }

  SUBCASE("rewriting the decoded image is byte-identical") {
    const std::string again = (dir.path / "img2.png").string();
    write_png_gray(back, again);
    CHECK(slurp(path) == slurp(again));
  }
}

TEST_CASE("png reader handles 16-bit grayscale and rejects color") {
  TempDir dir("png16");

  SUBCASE("16-bit values scale by 65535") {
    const std::string path = (dir.path / "deep.png").string();
    write_test_png(path, 2, 2, 16, PNG_COLOR_TYPE_GRAY, {0, 32768, 65535, 256});
    const Image img = read_png_gray(path);
    CHECK(img.at(0, 0) == 0.0f);
    CHECK(double(img.at(0, 1)) == doctest::Approx(32768.0 / 65535.0).epsilon(1e-7));
    CHECK(img.at(1, 0) == 1.0f);
    CHECK(double(img.at(1, 1)) == doctest::Approx(256.0 / 65535.0).epsilon(1e-7));
  }

  SUBCASE("rgb input is rejected") {
    const std::string path = (dir.path / "rgb.png").string();
    write_test_png(path, 2, 2, 8, PNG_COLOR_TYPE_RGB,
                   {10, 20, 30, 40, 50, 60, 70, 80, 90, 100, 110, 120});
    CHECK_THROWS_AS(read_png_gray(path), IoFailure);
  }

  SUBCASE("missing and corrupt files are rejected") {
    CHECK_THROWS_AS(read_png_gray((dir.path / "absent.png").string()), IoFailure);
    const std::string bad = (dir.path / "bad.png").string();
    std::ofstream(bad, std::ios::binary) << "not a png at all";
    CHECK_THROWS_AS(read_png_gray(bad), IoFailure);
  }
}

TEST_CASE("segmentation debug export writes an indexed png") {
  TempDir dir("segdbg");
  const JointSchema schema = default_schema();
  const auto patients = generate_patients(svh::testfix::tiny_synth_config(60, 1), schema);
  const auto& img = patients[0].images.at(ImageKey::LH);
  const PixelTargets targets =
      build_pixel_targets(img, schema, MaskConfig{4.0, 6.0}, SmoothingConfig{});

  const std::string path = (dir.path / "seg.png").string();
  write_seg_debug_png(targets.seg, path);
  const std::string bytes = slurp(path);
  REQUIRE(bytes.size() > 8);
  CHECK(bytes.compare(1, 3, "PNG") == 0);
  CHECK(bytes.find("PLTE") != std::string::npos);
  CHECK(bytes.find("tRNS") != std::string::npos);
}

TEST_CASE("dataset writes, loads, and regenerates byte-identically") {
  const JointSchema schema = default_schema();
  SynthConfig cfg;
  cfg.seed = 5;
  cfg.n_patients = 2;

  TempDir a("ds_a");
  generate_dataset(cfg, schema, a.str());

  SUBCASE("file inventory per patient") {
    int pngs = 0, jsons = 0;
    for (const auto& e : fs::directory_iterator(a.path)) {
      pngs += e.path().extension() == ".png";
      jsons += e.path().extension() == ".json";
    }
    CHECK(pngs == 8);  // 2 patients x 4 images
    CHECK(jsons == 2);
  }

  SUBCASE("load_dataset round-trips annotations and pixels") {
    const auto original = generate_patients(cfg, schema);
    const auto loaded = load_dataset(a.str(), schema);
    REQUIRE(loaded.size() == original.size());
    for (size_t i = 0; i < loaded.size(); ++i) {
      CHECK(loaded[i].patient_id == original[i].patient_id);
      REQUIRE(loaded[i].images.size() == 4);
      for (const auto& [key, img] : original[i].images) {
        const AnnotatedImage& got = loaded[i].images.at(key);
        CHECK(got.limb == img.limb);
        CHECK(got.side == img.side);
        REQUIRE(got.joints.size() == img.joints.size());
        for (size_t k = 0; k < img.joints.size(); ++k) {
          CHECK(got.joints[k].type_id == img.joints[k].type_id);
          CHECK(got.joints[k].x == img.joints[k].x);  // json doubles round-trip
          CHECK(got.joints[k].y == img.joints[k].y);
          CHECK(got.joints[k].narrowing == img.joints[k].narrowing);
          CHECK(got.joints[k].erosion == img.joints[k].erosion);
        }
        REQUIRE(got.pixels.px.size() == img.pixels.px.size());
        for (size_t p = 0; p < got.pixels.px.size(); ++p)
          CHECK(std::abs(got.pixels.px[p] - img.pixels.px[p]) <= 0.5f / 255.0f + 1e-6f);
      }
    }
  }

  SUBCASE("regeneration is byte-identical") {
    TempDir b("ds_b");
    generate_dataset(cfg, schema, b.str());
    for (const auto& e : fs::directory_iterator(a.path)) {
      const fs::path twin = b.path / e.path().filename();
      REQUIRE(fs::exists(twin));
      CHECK(slurp(e.path()) == slurp(twin));
    }
  }

  SUBCASE("duplicate patient ids are rejected") {
    fs::copy_file(a.path / "P000.json", a.path / "P000_copy.json");
    CHECK_THROWS_AS(load_dataset(a.str(), schema), ConfigError);
  }

  SUBCASE("a missing png is an io failure") {
    fs::remove(a.path / "P001_LF.png");
    CHECK_THROWS_AS(load_dataset(a.str(), schema), IoFailure);
  }

  SUBCASE("malformed json is a config error") {
    std::ofstream(a.path / "P000.json", std::ios::trunc) << "{ not json";
    CHECK_THROWS_AS(load_dataset(a.str(), schema), ConfigError);
  }

  SUBCASE("loading a non-directory fails") {
    CHECK_THROWS_AS(load_dataset((a.path / "nope").string(), schema), IoFailure);
  }
}

TEST_CASE("prediction csv layout") {
  ImagePredictions ip;
  ip.patient_id = "P007";
  ip.key = ImageKey::RF;
  JointPrediction j0;
  j0.joint_type_id = 0;
  j0.expected_narrowing = 1.23456;
  j0.expected_erosion = 4.0;
  JointPrediction j5;
  j5.joint_type_id = 5;
  j5.expected_erosion = 0.25;
  ip.joints = {j0, j5};

  TempDir dir("csv");
  const std::string path = (dir.path / "pred.csv").string();

  SUBCASE("without truth") {
    write_predictions_csv({ip}, path);
    CHECK(slurp(path) ==
          "patient_id,image,joint,task,predicted\n"
          "P007,RF,0,narrowing,1.2346\n"
          "P007,RF,0,erosion,4.0000\n"
          "P007,RF,5,erosion,0.2500\n");
  }

  SUBCASE("with truth when available") {
    PatientRecord truth;
    truth.patient_id = "P007";
    AnnotatedImage img;
    img.limb = Limb::Foot;
    img.side = Side::Right;
    img.pixels = Image(4, 4);
    Joint t0;
    t0.type_id = 0;
    t0.narrowing = 1;
    t0.erosion = 3;
    img.joints.push_back(t0);  // joint 5 has no truth scores
    truth.images[ImageKey::RF] = img;
    const std::vector<PatientRecord> truths{truth};

    write_predictions_csv({ip}, path, &truths);
    CHECK(slurp(path) ==
          "patient_id,image,joint,task,predicted,truth\n"
          "P007,RF,0,narrowing,1.2346,1\n"
          "P007,RF,0,erosion,4.0000,3\n"
          "P007,RF,5,erosion,0.2500,\n");
  }
}

TEST_CASE("eval report json") {
  EvalReport r;
  r.rmse_narrowing = 0.75;
  r.rmse_erosion = 1.5;
  r.mean_center_error_px = 2.25;
  r.n_narrowing = 84;
  r.n_erosion = 88;

  const std::string text = eval_report_to_json(r);
  const auto parsed = nlohmann::json::parse(text);
  CHECK(parsed.at("rmse_narrowing").get<double>() == 0.75);
  CHECK(parsed.at("rmse_erosion").get<double>() == 1.5);
  CHECK(parsed.at("mean_center_error_px").get<double>() == 2.25);
  CHECK(parsed.at("n_narrowing").get<int64_t>() == 84);
  CHECK(parsed.at("n_erosion").get<int64_t>() == 88);

  TempDir dir("report");
  const std::string path = (dir.path / "report.json").string();
  write_eval_report(r, path);
  CHECK(slurp(path) == text);
}
