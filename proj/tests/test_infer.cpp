#include <cmath>
#include <numeric>

#include "doctest.h"
#include "svh/errors.hpp"
#include "svh/infer.hpp"
#include "svh/model.hpp"
#include "svh/rng.hpp"
#include "svh/schema.hpp"
#include "svh/synth.hpp"
#include "test_fixtures.hpp"

using namespace svh;

namespace {

NetworkConfig small_net() {
  NetworkConfig cfg;
  cfg.depth = 1;
  cfg.base_channels = 4;
  cfg.in_h = 16;
  cfg.in_w = 16;
  return cfg;
}

Image sample_image(uint64_t seed, Limb limb) {
  const JointSchema schema = default_schema();
  const SynthConfig cfg = svh::testfix::tiny_synth_config(seed, 1);
  const auto patients = generate_patients(cfg, schema);
  const ImageKey key = limb == Limb::Hand ? ImageKey::LH : ImageKey::LF;
  return patients.at(0).images.at(key).pixels;
}

}  // namespace

TEST_CASE("decode_expected on hand-computable distributions") {
  CHECK(decode_expected({0.2, 0.2, 0.2, 0.2, 0.2}) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(decode_expected({0.0, 0.0, 0.0, 1.0}) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(decode_expected({0.1, 0.2, 0.3, 0.2, 0.2}) == doctest::Approx(2.2).epsilon(1e-12));
  CHECK(decode_expected({1.0}) == 0.0);

  SUBCASE("shifting mass up one class adds exactly one") {
    const std::vector<double> p{0.35, 0.15, 0.3, 0.1, 0.1};
    std::vector<double> shifted(p.size() + 1, 0.0);
    for (size_t i = 0; i < p.size(); ++i) shifted[i + 1] = p[i];
    CHECK(decode_expected(shifted) ==
          doctest::Approx(decode_expected(p) + 1.0).epsilon(1e-12));
  }

  SUBCASE("unnormalized input is rejected") {
    CHECK_THROWS_AS(decode_expected({0.5, 0.4}), NotNormalized);
    CHECK_THROWS_AS(decode_expected({0.7, 0.7}), NotNormalized);
    CHECK_THROWS_AS(decode_expected({}), NotNormalized);
    // within the 1e-6 tolerance still decodes
    CHECK_NOTHROW(decode_expected({0.5, 0.5 + 5e-7}));
  }
}

TEST_CASE("predict_image structure and score ranges") {
  const JointSchema schema = default_schema();
  const NetworkConfig cfg = small_net();
  NetParams<float> params = init_params<float>(cfg, 123);

  for (const Limb limb : {Limb::Hand, Limb::Foot}) {
    CAPTURE(int(limb));
    const Image img = sample_image(31, limb);
    const auto preds = predict_image(params, cfg, schema, img, limb);
    const auto want_ids = schema.joint_ids_for(limb);
    REQUIRE(preds.size() == want_ids.size());

    int64_t support_total = 0;
    for (size_t i = 0; i < preds.size(); ++i) {
      const auto& p = preds[i];
      CHECK(p.joint_type_id == want_ids[i]);
      if (i > 0) CHECK(p.joint_type_id > preds[i - 1].joint_type_id);
      CHECK(task_applies(schema, p.joint_type_id, Task::Narrowing) ==
            p.expected_narrowing.has_value());
      CHECK(task_applies(schema, p.joint_type_id, Task::Erosion) ==
            p.expected_erosion.has_value());
      if (p.expected_narrowing) {
        const ScoreRange r = score_range(schema, Task::Narrowing, limb);
        CHECK(*p.expected_narrowing >= double(r.min));
        CHECK(*p.expected_narrowing <= double(r.max));
      }
      if (p.expected_erosion) {
        const ScoreRange r = score_range(schema, Task::Erosion, limb);
        CHECK(*p.expected_erosion >= double(r.min));
        CHECK(*p.expected_erosion <= double(r.max));
      }
      CHECK(p.center_x >= 0.0);
      CHECK(p.center_x <= double(img.w - 1));
      CHECK(p.center_y >= 0.0);
      CHECK(p.center_y <= double(img.h - 1));
      CHECK(p.support >= 0);
      support_total += p.support;
    }
    // claimed pixels cannot exceed the image; background may claim the rest
    CHECK(support_total <= int64_t(img.h) * img.w);

    // determinism: identical call, identical doubles
    const auto again = predict_image(params, cfg, schema, img, limb);
    REQUIRE(again.size() == preds.size());
    for (size_t i = 0; i < preds.size(); ++i) {
      CHECK(again[i].expected_narrowing == preds[i].expected_narrowing);
      CHECK(again[i].expected_erosion == preds[i].expected_erosion);
      CHECK(again[i].center_x == preds[i].center_x);
      CHECK(again[i].support == preds[i].support);
    }
  }
}

TEST_CASE("foot erosion is exactly double the shared per-pixel expectation") {
  // Feed the same pixels through the same network as a hand and as a foot.
  // The per-pixel distributions coincide, so for the joint types feet share
  // with hands the foot erosion must equal twice the hand erosion, and
  // narrowing must match exactly.
  const JointSchema schema = default_schema();
  const NetworkConfig cfg = small_net();
  NetParams<float> params = init_params<float>(cfg, 77);
  const Image img = sample_image(32, Limb::Foot);

  const auto hand = predict_image(params, cfg, schema, img, Limb::Hand);
  const auto foot = predict_image(params, cfg, schema, img, Limb::Foot);
  REQUIRE(foot.size() == schema.joint_ids_for(Limb::Foot).size());
  for (const auto& fp : foot) {
    const auto hit = std::find_if(hand.begin(), hand.end(), [&](const auto& hp) {
      return hp.joint_type_id == fp.joint_type_id;
    });
    REQUIRE(hit != hand.end());
    CHECK(fp.support == hit->support);
    CHECK(fp.center_x == hit->center_x);
    CHECK(fp.center_y == hit->center_y);
    if (fp.expected_narrowing)
      CHECK(*fp.expected_narrowing == *hit->expected_narrowing);
    REQUIRE(fp.expected_erosion.has_value());
    REQUIRE(hit->expected_erosion.has_value());
    CHECK(*fp.expected_erosion == doctest::Approx(2.0 * *hit->expected_erosion)
                                      .epsilon(1e-12));
    CHECK(*fp.expected_erosion <= 10.0);
  }
}

TEST_CASE("ensemble_predict averaging semantics") {
  const JointSchema schema = default_schema();
  const NetworkConfig cfg = small_net();
  NetParams<float> a = init_params<float>(cfg, 1);
  NetParams<float> b = init_params<float>(cfg, 2);
  NetParams<float> c = init_params<float>(cfg, 3);
  const Image img = sample_image(33, Limb::Hand);

  SUBCASE("empty member list is rejected") {
    CHECK_THROWS_AS(ensemble_predict({}, cfg, schema, img, Limb::Hand), EmptyEnsemble);
  }

  SUBCASE("a one-member ensemble equals the member bit for bit") {
    const auto single = ensemble_predict({&a}, cfg, schema, img, Limb::Hand);
    const auto direct = predict_image(a, cfg, schema, img, Limb::Hand);
    REQUIRE(single.size() == direct.size());
    for (size_t i = 0; i < single.size(); ++i) {
      CHECK(single[i].joint_type_id == direct[i].joint_type_id);
      CHECK(single[i].expected_narrowing == direct[i].expected_narrowing);
      CHECK(single[i].expected_erosion == direct[i].expected_erosion);
      CHECK(single[i].center_x == direct[i].center_x);
      CHECK(single[i].center_y == direct[i].center_y);
      CHECK(single[i].support == direct[i].support);
    }
  }

  SUBCASE("members average arithmetically; support sums") {
    const auto pa = predict_image(a, cfg, schema, img, Limb::Hand);
    const auto pb = predict_image(b, cfg, schema, img, Limb::Hand);
    const auto pc = predict_image(c, cfg, schema, img, Limb::Hand);
    const auto ens = ensemble_predict({&a, &b, &c}, cfg, schema, img, Limb::Hand);
    REQUIRE(ens.size() == pa.size());
    for (size_t i = 0; i < ens.size(); ++i) {
      if (ens[i].expected_narrowing) {
        const double mean = (*pa[i].expected_narrowing + *pb[i].expected_narrowing +
                             *pc[i].expected_narrowing) / 3.0;
        CHECK(*ens[i].expected_narrowing == doctest::Approx(mean).epsilon(1e-12));
      }
      if (ens[i].expected_erosion) {
        const double mean = (*pa[i].expected_erosion + *pb[i].expected_erosion +
                             *pc[i].expected_erosion) / 3.0;
        CHECK(*ens[i].expected_erosion == doctest::Approx(mean).epsilon(1e-12));
      }
      const double cx = (pa[i].center_x + pb[i].center_x + pc[i].center_x) / 3.0;
      CHECK(ens[i].center_x == doctest::Approx(cx).epsilon(1e-12));
      CHECK(ens[i].support == pa[i].support + pb[i].support + pc[i].support);
    }
  }

  SUBCASE("ensemble squared error never beats the member mean by Jensen") {
    // integer pseudo-truths from a fixed stream
    Rng rng(99);
    for (const Limb limb : {Limb::Hand, Limb::Foot}) {
      const Image limg = sample_image(34, limb);
      const auto pa = predict_image(a, cfg, schema, limg, limb);
      const auto pb = predict_image(b, cfg, schema, limg, limb);
      const auto pc = predict_image(c, cfg, schema, limg, limb);
      const auto ens = ensemble_predict({&a, &b, &c}, cfg, schema, limg, limb);
      double ens_mse = 0.0, member_mse = 0.0;
      int n = 0;
      auto add = [&](std::optional<double> e, std::optional<double> m1,
                     std::optional<double> m2, std::optional<double> m3, int hi) {
        if (!e) return;
        const double truth = double(rng.uniform_int(uint64_t(hi) + 1));
        ens_mse += (*e - truth) * (*e - truth);
        member_mse += ((*m1 - truth) * (*m1 - truth) + (*m2 - truth) * (*m2 - truth) +
                       (*m3 - truth) * (*m3 - truth)) / 3.0;
        ++n;
      };
      for (size_t i = 0; i < ens.size(); ++i) {
        add(ens[i].expected_narrowing, pa[i].expected_narrowing,
            pb[i].expected_narrowing, pc[i].expected_narrowing, 4);
        add(ens[i].expected_erosion, pa[i].expected_erosion, pb[i].expected_erosion,
            pc[i].expected_erosion, limb == Limb::Foot ? 10 : 5);
      }
      REQUIRE(n > 0);
      CHECK(ens_mse / n <= member_mse / n + 1e-9);
    }
  }
}
