#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

#include "svh/config.hpp"
#include "svh/errors.hpp"

using namespace svh;
namespace fs = std::filesystem;
using nlohmann::json;

TEST_CASE("defaults dump lists every section with desk-scale values") {
  const RunConfig cfg = default_run_config();
  const std::string text = dump_run_config(cfg);
  CHECK(text.back() == '\n');

  const json j = json::parse(text);
  CHECK(j.size() == 6);
  CHECK(j["paths"]["output_dir"] == "out");
  CHECK(j["paths"]["data_dir"] == "");
  CHECK(j["paths"]["manifest"] == "");
  CHECK(j["synth"]["bar_width"] == 5.0);
  CHECK(j["synth"]["gap_per_grade"] == 1.5);
  CHECK(j["synth"]["score_zero_prob"] == 0.5);
  CHECK(j["mask"]["r"] == 32.0);
  CHECK(j["mask"]["R"] == 40.0);
  CHECK(j["smoothing"]["p"] == 0.1);
  CHECK(j["network"]["depth"] == 3);
  CHECK(j["network"]["base_channels"] == 8);
  CHECK(j["network"]["in_h"] == 64);
  CHECK(j["network"]["head_classes"] == json::array({22, 5, 6}));
  CHECK(j["train"]["epochs"] == 30);
  CHECK(j["train"]["batch_size"] == 4);
  CHECK(j["train"]["max_lr"] == 3e-3);
  CHECK(j["train"]["loss_weights"]["lambda_seg"] == 1.0);
  CHECK(j["train"]["augment"]["rotation_max"] == 15.0);
  // The embedded copies never appear as separate train keys.
  CHECK(!j["train"].contains("net"));
  CHECK(!j["train"].contains("mask"));
  CHECK(!j["train"].contains("smoothing"));
}

TEST_CASE("dump and parse round trip exactly") {
  RunConfig cfg = default_run_config();
  cfg.paths.data_dir = "data/run1";
  cfg.synth.noise_sigma = 0.0625;
  cfg.mask.r = 6.0;
  cfg.mask.R = 8.0;
  cfg.smoothing.p = 0.05;
  cfg.train.max_lr = 0.0123;
  cfg.train.seed = 42;
  cfg.train.net.depth = 1;
  cfg.train.net.base_channels = 4;
  cfg.train.net.in_h = cfg.train.net.in_w = 16;
  cfg.finalize();

  const std::string text = dump_run_config(cfg);
  const RunConfig back = parse_run_config(text);
  CHECK(dump_run_config(back) == text);
  CHECK(back.paths.data_dir == "data/run1");
  CHECK(back.train.max_lr == 0.0123);
  CHECK(back.train.net.depth == 1);
  // finalize mirrored the top-level sections into the training config.
  CHECK(back.train.mask.r == 6.0);
  CHECK(back.train.mask.R == 8.0);
  CHECK(back.train.smoothing.p == 0.05);
}

TEST_CASE("partial configs keep defaults elsewhere") {
  const RunConfig cfg = parse_run_config(R"({"train": {"epochs": 2}})");
  CHECK(cfg.train.epochs == 2);
  CHECK(cfg.train.batch_size == 4);
  CHECK(cfg.train.net.depth == 3);
  CHECK(cfg.synth.n_patients == 1);
  CHECK(cfg.mask.r == 32.0);

  const RunConfig net = parse_run_config(
      R"({"network": {"depth": 2, "in_h": 32, "in_w": 32}})");
  CHECK(net.train.net.depth == 2);
  CHECK(net.train.net.in_h == 32);
  CHECK(net.train.net.base_channels == 8);

  const RunConfig empty = parse_run_config("{}");
  CHECK(dump_run_config(empty) == dump_run_config(default_run_config()));
}

TEST_CASE("unknown keys and bad types are rejected with the key name") {
  CHECK_THROWS_AS(parse_run_config(R"({"bogus": 1})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"train": {"foo": 1}})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"synth": {"epochs": 3}})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"train": {"augment": {"flip": 1}}})"),
                  ConfigError);
  CHECK_THROWS_WITH_AS(parse_run_config(R"({"mask": {"radius": 3}})"),
                       doctest::Contains("radius"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_run_config(R"({"train": {"epochs": "three"}})"),
                       doctest::Contains("train.epochs"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"train": 7})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("not json"), ConfigError);
}

TEST_CASE("invalid values fail validation on load") {
  CHECK_THROWS_AS(parse_run_config(R"({"train": {"epochs": -1}})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"mask": {"r": 50}})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"smoothing": {"p": 1.5}})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"network": {"head_classes": [3, 5, 6]}})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"synth": {"n_patients": 0}})"),
                  ConfigError);
}

TEST_CASE("config files load from disk") {
  const fs::path dir =
      fs::temp_directory_path() / ("svh_config_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const fs::path path = dir / "run.json";
  {
    std::ofstream out(path);
    out << R"({"train": {"epochs": 5, "seed": 9}, "mask": {"r": 4, "R": 6}})";
  }
  const RunConfig cfg = load_run_config(path.string());
  CHECK(cfg.train.epochs == 5);
  CHECK(cfg.train.seed == 9);
  CHECK(cfg.train.mask.R == 6.0);

  CHECK_THROWS_AS(load_run_config((dir / "absent.json").string()), IoFailure);
  {
    std::ofstream out(dir / "bad.json");
    out << "{";
  }
  CHECK_THROWS_AS(load_run_config((dir / "bad.json").string()), ConfigError);
  fs::remove_all(dir);
}
