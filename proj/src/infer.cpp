#include "svh/infer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "svh/errors.hpp"

namespace svh {

double decode_expected(const std::vector<double>& dist) {
  const double sum = std::accumulate(dist.begin(), dist.end(), 0.0);
  if (std::abs(sum - 1.0) > 1e-6)
    throw NotNormalized("distribution sums to " + std::to_string(sum) +
                        ", expected 1 within 1e-6");
  double e = 0.0;
  for (size_t c = 0; c < dist.size(); ++c) e += double(c) * dist[c];
  return e;
}

namespace {

double clamp_to(double v, const ScoreRange& r) {
  return std::min(double(r.max), std::max(double(r.min), v));
}

// Per-pixel softmax of planar logits, computed in double. probs[c * hw + px].
void softmax_planes(const Tensor<float>& logits, int nc, int64_t hw,
                    std::vector<double>& probs) {
  probs.assign(size_t(nc) * size_t(hw), 0.0);
  const float* L = logits.ptr();
#pragma omp parallel for schedule(static)
  for (int64_t px = 0; px < hw; ++px) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < nc; ++c) mx = std::max(mx, double(L[c * hw + px]));
    double z = 0.0;
    for (int c = 0; c < nc; ++c) {
      const double e = std::exp(double(L[c * hw + px]) - mx);
      probs[size_t(c * hw + px)] = e;
      z += e;
    }
    for (int c = 0; c < nc; ++c) probs[size_t(c * hw + px)] /= z;
  }
}

}  // namespace

std::vector<JointPrediction> predict_image(const NetParams<float>& params,
                                           const NetworkConfig& cfg,
                                           const JointSchema& schema,
                                           const Image& image, Limb limb) {
  if (image.h != cfg.in_h || image.w != cfg.in_w)
    throw ShapeMismatch("image " + std::to_string(image.h) + "x" +
                        std::to_string(image.w) + " does not match network input " +
                        std::to_string(cfg.in_h) + "x" + std::to_string(cfg.in_w));
  Workspace<float> ws;
  make_input(image, ws.input);
  forward(params, cfg, ws);

  const int64_t hw = int64_t(cfg.in_h) * cfg.in_w;
  std::vector<double> seg_p, nar_p, ero_p;
  softmax_planes(ws.seg_logits, JointSchema::kSegClasses, hw, seg_p);
  softmax_planes(ws.narrow_logits, kNarrowingClasses, hw, nar_p);
  softmax_planes(ws.erosion_logits, kErosionClasses, hw, ero_p);

  // winning class per pixel, ties to the lowest index
  std::vector<int> winner(size_t(hw), 0);
#pragma omp parallel for schedule(static)
  for (int64_t px = 0; px < hw; ++px) {
    int best = 0;
    double bp = seg_p[size_t(px)];
    for (int c = 1; c < JointSchema::kSegClasses; ++c)
      if (seg_p[size_t(c * hw + px)] > bp) {
        bp = seg_p[size_t(c * hw + px)];
        best = c;
      }
    winner[size_t(px)] = best;
  }

  const ScoreRange nar_range = score_range(schema, Task::Narrowing, limb);
  const ScoreRange ero_range = score_range(schema, Task::Erosion, limb);

  std::vector<JointPrediction> out;
  for (int j : schema.joint_ids_for(limb)) {
    JointPrediction p;
    p.joint_type_id = j;
    std::vector<double> nd(kNarrowingClasses, 0.0), ed(kErosionClasses, 0.0);
    double cx = 0.0, cy = 0.0, cw = 0.0;
    int64_t support = 0;
    for (int64_t px = 0; px < hw; ++px)
      support += winner[size_t(px)] == j;
    p.support = support;

    // accumulate damage distributions and the weighted centroid in one pass;
    // with no claimed pixel, weight every pixel by its class probability
    for (int64_t px = 0; px < hw; ++px) {
      const bool claimed = winner[size_t(px)] == j;
      if (support > 0 && !claimed) continue;
      const double w = support > 0 ? 1.0 : seg_p[size_t(j * hw + px)];
      for (int c = 0; c < kNarrowingClasses; ++c)
        nd[size_t(c)] += w * nar_p[size_t(c * hw + px)];
      for (int c = 0; c < kErosionClasses; ++c)
        ed[size_t(c)] += w * ero_p[size_t(c * hw + px)];
      const double cweight = seg_p[size_t(j * hw + px)];
      cx += cweight * double(px % cfg.in_w);
      cy += cweight * double(px / cfg.in_w);
      cw += cweight;
    }
    double norm = 0.0;
    if (support > 0) {
      norm = double(support);
    } else {
      for (int64_t px = 0; px < hw; ++px) norm += seg_p[size_t(j * hw + px)];
    }
    for (auto& v : nd) v /= norm;
    for (auto& v : ed) v /= norm;
    p.center_x = cx / cw;
    p.center_y = cy / cw;

    if (task_applies(schema, j, Task::Narrowing))
      p.expected_narrowing = clamp_to(decode_expected(nd), nar_range);
    if (task_applies(schema, j, Task::Erosion)) {
      double e = decode_expected(ed);
      if (limb == Limb::Foot) e *= 2.0;  // trained on half scores
      p.expected_erosion = clamp_to(e, ero_range);
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<JointPrediction> ensemble_predict(
    const std::vector<const NetParams<float>*>& members, const NetworkConfig& cfg,
    const JointSchema& schema, const Image& image, Limb limb) {
  if (members.empty()) throw EmptyEnsemble("ensemble has no members");
  std::vector<std::vector<JointPrediction>> per_member;
  per_member.reserve(members.size());
  for (const NetParams<float>* m : members)
    per_member.push_back(predict_image(*m, cfg, schema, image, limb));

  const ScoreRange nar_range = score_range(schema, Task::Narrowing, limb);
  const ScoreRange ero_range = score_range(schema, Task::Erosion, limb);
  const double n = double(members.size());

  std::vector<JointPrediction> out = per_member.front();
  for (size_t ji = 0; ji < out.size(); ++ji) {
    double nar = 0.0, ero = 0.0, cx = 0.0, cy = 0.0;
    int64_t support = 0;
    for (const auto& preds : per_member) {
      const JointPrediction& p = preds[ji];
      if (p.expected_narrowing) nar += *p.expected_narrowing;
      if (p.expected_erosion) ero += *p.expected_erosion;
      cx += p.center_x;
      cy += p.center_y;
      support += p.support;
    }
    JointPrediction& o = out[ji];
    if (o.expected_narrowing) o.expected_narrowing = clamp_to(nar / n, nar_range);
    if (o.expected_erosion) o.expected_erosion = clamp_to(ero / n, ero_range);
    o.center_x = cx / n;
    o.center_y = cy / n;
    o.support = support;
  }
  return out;
}

}  // namespace svh
