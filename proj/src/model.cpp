#include "svh/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "svh/errors.hpp"
#include "svh/kernels.hpp"
#include "svh/rng.hpp"
#include "svh/schema.hpp"

namespace svh {

using nlohmann::json;
namespace K = kernels;

void NetworkConfig::validate() const {
  if (depth < 1) throw ConfigError("network depth must be >= 1");
  if (base_channels < 2) throw ConfigError("base_channels must be >= 2");
  if (norm_groups < 1) throw ConfigError("norm_groups must be >= 1");
  const int div = 1 << depth;
  if (in_h < div || in_w < div || in_h % div != 0 || in_w % div != 0)
    throw ConfigError("input " + std::to_string(in_h) + "x" + std::to_string(in_w) +
                      " must be divisible by 2^depth = " + std::to_string(div));
  if (head_classes[0] != JointSchema::kSegClasses ||
      head_classes[1] != kNarrowingClasses || head_classes[2] != kErosionClasses)
    throw ConfigError("head class counts are fixed at (22, 5, 6)");
}

int NetworkConfig::channels_at(int level) const {
  return base_channels << level;
}

void LossWeights::validate() const {
  if (lambda_seg < 0 || lambda_narrow < 0 || lambda_erosion < 0 || !(sum() > 0))
    throw ConfigError("loss weights must be >= 0 and not all zero");
}

// Effective group count: the largest divisor of c not exceeding the target.
static int gn_groups(int c, int target) {
  for (int g = std::min(c, target); g >= 2; --g)
    if (c % g == 0) return g;
  return 1;
}

// Tensor index arithmetic into the layout order. Per encoder level: conv1
// w/b, norm1 scale/shift, conv2 w/b, norm2 scale/shift, down w/b (10).
// Bottleneck: the 8 block tensors. Per decoder level (deep to shallow): up
// w/b then the 8 block tensors. Heads: 3 x (w, b).
struct Idx {
  int depth;
  int enc(int level, int off) const { return 10 * level + off; }
  int bott(int off) const { return 10 * depth + off; }
  int dec(int level, int off) const {
    return 10 * depth + 8 + 10 * (depth - 1 - level) + off;
  }
  int head(int off) const { return 10 * depth + 8 + 10 * depth + off; }
};

static void push_block(std::vector<ParamInfo>& out, const std::string& prefix,
                       int c_in, int c) {
  out.push_back({prefix + ".conv1.weight", {c, c_in, 3, 3}, true, int64_t(c_in) * 9});
  out.push_back({prefix + ".conv1.bias", {c}, false, 0});
  out.push_back({prefix + ".norm1.scale", {c}, false, 0});
  out.push_back({prefix + ".norm1.shift", {c}, false, 0});
  out.push_back({prefix + ".conv2.weight", {c, c, 3, 3}, true, int64_t(c) * 9});
  out.push_back({prefix + ".conv2.bias", {c}, false, 0});
  out.push_back({prefix + ".norm2.scale", {c}, false, 0});
  out.push_back({prefix + ".norm2.shift", {c}, false, 0});
}

std::vector<ParamInfo> param_layout(const NetworkConfig& cfg) {
  cfg.validate();
  std::vector<ParamInfo> out;
  for (int i = 0; i < cfg.depth; ++i) {
    const int c_in = i == 0 ? 3 : cfg.channels_at(i);
    const int c = cfg.channels_at(i);
    const int c_next = cfg.channels_at(i + 1);
    push_block(out, "enc" + std::to_string(i), c_in, c);
    out.push_back({"enc" + std::to_string(i) + ".down.weight", {c_next, c, 3, 3},
                   true, int64_t(c) * 9});
    out.push_back({"enc" + std::to_string(i) + ".down.bias", {c_next}, false, 0});
  }
  push_block(out, "bottleneck", cfg.channels_at(cfg.depth), cfg.channels_at(cfg.depth));
  for (int i = cfg.depth - 1; i >= 0; --i) {
    const int c = cfg.channels_at(i);
    const int c_deep = cfg.channels_at(i + 1);
    // transposed conv: each output pixel sees one tap per input channel
    out.push_back({"dec" + std::to_string(i) + ".up.weight", {c_deep, c, 2, 2},
                   true, int64_t(c_deep)});
    out.push_back({"dec" + std::to_string(i) + ".up.bias", {c}, false, 0});
    push_block(out, "dec" + std::to_string(i), 2 * c, c);
  }
  const int c0 = cfg.channels_at(0);
  const char* head_names[3] = {"seg", "narrowing", "erosion"};
  for (int hd = 0; hd < 3; ++hd) {
    out.push_back({std::string("head.") + head_names[hd] + ".weight",
                   {cfg.head_classes[size_t(hd)], c0, 1, 1}, true, int64_t(c0)});
    out.push_back({std::string("head.") + head_names[hd] + ".bias",
                   {cfg.head_classes[size_t(hd)]}, false, 0});
  }
  return out;
}

int64_t param_count(const NetworkConfig& cfg) {
  int64_t n = 0;
  for (const ParamInfo& p : param_layout(cfg)) n += Tensor<float>::numel_of(p.shape);
  return n;
}

template <typename T>
NetParams<T> zeros_like_params(const NetworkConfig& cfg) {
  NetParams<T> p;
  for (const ParamInfo& info : param_layout(cfg)) p.t.emplace_back(info.shape);
  return p;
}

template <typename T>
NetParams<T> init_params(const NetworkConfig& cfg, uint64_t seed) {
  NetParams<T> p;
  Rng rng(seed);
  for (const ParamInfo& info : param_layout(cfg)) {
    Tensor<T> t(info.shape);
    if (info.fan_in > 0) {
      const double bound = 1.0 / std::sqrt(double(info.fan_in));
      for (int64_t i = 0; i < t.numel(); ++i)
        t[i] = T(rng.uniform(-bound, bound));
    } else if (info.name.size() > 6 &&
               info.name.compare(info.name.size() - 6, 6, ".scale") == 0) {
      t.fill(T(1));
    }  // biases and shifts stay zero
    p.t.push_back(std::move(t));
  }
  return p;
}

template <typename T>
void make_input(const Image& image, Tensor<T>& out) {
  const int h = image.h, w = image.w;
  out.reshape_to({3, h, w});
  T* p = out.ptr();
  const size_t hw = size_t(h) * size_t(w);
  for (size_t i = 0; i < hw; ++i) p[i] = T(image.px[i]);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      p[hw + size_t(y) * w + x] = w > 1 ? T(x) / T(w - 1) : T(0);
      p[2 * hw + size_t(y) * w + x] = h > 1 ? T(y) / T(h - 1) : T(0);
    }
}

namespace {

constexpr double kGnEps = 1e-5;

template <typename T>
void block_forward(const Tensor<T>& x, int c_in, int c, int h, int w,
                   const NetParams<T>& P, int base, int norm_groups,
                   BlockActs<T>& A) {
  const int g = gn_groups(c, norm_groups);
  A.a1.reshape_to({c, h, w});
  A.n1.reshape_to({c, h, w});
  A.r1.reshape_to({c, h, w});
  A.a2.reshape_to({c, h, w});
  A.n2.reshape_to({c, h, w});
  A.r2.reshape_to({c, h, w});
  A.gn1_mean.reshape_to({g});
  A.gn1_invstd.reshape_to({g});
  A.gn2_mean.reshape_to({g});
  A.gn2_invstd.reshape_to({g});
  K::conv2d_forward(x.ptr(), c_in, h, w, P.t[size_t(base)].ptr(),
                    P.t[size_t(base + 1)].ptr(), c, 3, 1, 1, A.a1.ptr(), h, w);
  K::groupnorm_forward(A.a1.ptr(), c, h, w, g, P.t[size_t(base + 2)].ptr(),
                       P.t[size_t(base + 3)].ptr(), T(kGnEps), A.n1.ptr(),
                       A.gn1_mean.ptr(), A.gn1_invstd.ptr());
  K::relu_forward(A.n1.ptr(), A.n1.numel(), A.r1.ptr());
  K::conv2d_forward(A.r1.ptr(), c, h, w, P.t[size_t(base + 4)].ptr(),
                    P.t[size_t(base + 5)].ptr(), c, 3, 1, 1, A.a2.ptr(), h, w);
  K::groupnorm_forward(A.a2.ptr(), c, h, w, g, P.t[size_t(base + 6)].ptr(),
                       P.t[size_t(base + 7)].ptr(), T(kGnEps), A.n2.ptr(),
                       A.gn2_mean.ptr(), A.gn2_invstd.ptr());
  K::relu_forward(A.n2.ptr(), A.n2.numel(), A.r2.ptr());
}

// Reverse of block_forward. dr2 is the gradient at the block output; dx (if
// non-null) receives the gradient at the block input. Parameter gradients go
// to G at the same base offsets (norm grads accumulate, conv grads overwrite).
template <typename T>
void block_backward(const Tensor<T>& x, int c_in, int c, int h, int w,
                    const NetParams<T>& P, NetParams<T>& G, int base,
                    int norm_groups, const BlockActs<T>& A, const Tensor<T>& dr2,
                    Tensor<T>* dx) {
  const int g = gn_groups(c, norm_groups);
  Tensor<T> dn2({c, h, w}), da2({c, h, w}), dr1({c, h, w}), dn1({c, h, w}),
      da1({c, h, w});
  K::relu_backward(A.n2.ptr(), dr2.ptr(), dr2.numel(), dn2.ptr());
  K::groupnorm_backward(A.a2.ptr(), dn2.ptr(), c, h, w, g,
                        P.t[size_t(base + 6)].ptr(), A.gn2_mean.ptr(),
                        A.gn2_invstd.ptr(), da2.ptr(), G.t[size_t(base + 6)].ptr(),
                        G.t[size_t(base + 7)].ptr());
  K::conv2d_backward_params(A.r1.ptr(), c, h, w, da2.ptr(), c, h, w, 3, 1, 1,
                            G.t[size_t(base + 4)].ptr(), G.t[size_t(base + 5)].ptr());
  K::conv2d_backward_input(da2.ptr(), c, h, w, P.t[size_t(base + 4)].ptr(), c,
                           3, 1, 1, dr1.ptr(), h, w);
  K::relu_backward(A.n1.ptr(), dr1.ptr(), dr1.numel(), dn1.ptr());
  K::groupnorm_backward(A.a1.ptr(), dn1.ptr(), c, h, w, g,
                        P.t[size_t(base + 2)].ptr(), A.gn1_mean.ptr(),
                        A.gn1_invstd.ptr(), da1.ptr(), G.t[size_t(base + 2)].ptr(),
                        G.t[size_t(base + 3)].ptr());
  K::conv2d_backward_params(x.ptr(), c_in, h, w, da1.ptr(), c, h, w, 3, 1, 1,
                            G.t[size_t(base)].ptr(), G.t[size_t(base + 1)].ptr());
  if (dx != nullptr) {
    dx->reshape_to({c_in, h, w});
    K::conv2d_backward_input(da1.ptr(), c, h, w, P.t[size_t(base)].ptr(), c_in,
                             3, 1, 1, dx->ptr(), h, w);
  }
}

}  // namespace

template <typename T>
void forward(const NetParams<T>& P, const NetworkConfig& cfg, Workspace<T>& ws) {
  cfg.validate();
  check_shape(ws.input, {3, cfg.in_h, cfg.in_w}, "network input");
  if (int(P.t.size()) != int(param_layout(cfg).size()))
    throw ShapeMismatch("parameter list does not match the architecture");
  const Idx ix{cfg.depth};
  const int depth = cfg.depth;
  ws.enc.resize(size_t(depth));
  ws.down.resize(size_t(depth));
  ws.up.resize(size_t(depth));
  ws.cat.resize(size_t(depth));
  ws.dec.resize(size_t(depth));

  const Tensor<T>* x = &ws.input;
  for (int i = 0; i < depth; ++i) {
    const int c_in = i == 0 ? 3 : cfg.channels_at(i);
    const int c = cfg.channels_at(i);
    const int c_next = cfg.channels_at(i + 1);
    const int h = cfg.in_h >> i, w = cfg.in_w >> i;
    block_forward(*x, c_in, c, h, w, P, ix.enc(i, 0), cfg.norm_groups, ws.enc[size_t(i)]);
    ws.down[size_t(i)].reshape_to({c_next, h / 2, w / 2});
    K::conv2d_forward(ws.enc[size_t(i)].r2.ptr(), c, h, w,
                      P.t[size_t(ix.enc(i, 8))].ptr(), P.t[size_t(ix.enc(i, 9))].ptr(),
                      c_next, 3, 2, 1, ws.down[size_t(i)].ptr(), h / 2, w / 2);
    x = &ws.down[size_t(i)];
  }

  const int cb = cfg.channels_at(depth);
  block_forward(*x, cb, cb, cfg.in_h >> depth, cfg.in_w >> depth, P, ix.bott(0),
                cfg.norm_groups, ws.bottleneck);

  const Tensor<T>* deep = &ws.bottleneck.r2;
  for (int i = depth - 1; i >= 0; --i) {
    const int c = cfg.channels_at(i);
    const int c_deep = cfg.channels_at(i + 1);
    const int h = cfg.in_h >> i, w = cfg.in_w >> i;
    ws.up[size_t(i)].reshape_to({c, h, w});
    K::upconv2x_forward(deep->ptr(), c_deep, h / 2, w / 2,
                        P.t[size_t(ix.dec(i, 0))].ptr(), P.t[size_t(ix.dec(i, 1))].ptr(),
                        c, ws.up[size_t(i)].ptr());
    // concat [upsampled ; skip] along channels
    ws.cat[size_t(i)].reshape_to({2 * c, h, w});
    const size_t plane = size_t(c) * h * w;
    std::memcpy(ws.cat[size_t(i)].ptr(), ws.up[size_t(i)].ptr(), plane * sizeof(T));
    std::memcpy(ws.cat[size_t(i)].ptr() + plane, ws.enc[size_t(i)].r2.ptr(),
                plane * sizeof(T));
    block_forward(ws.cat[size_t(i)], 2 * c, c, h, w, P, ix.dec(i, 2),
                  cfg.norm_groups, ws.dec[size_t(i)]);
    deep = &ws.dec[size_t(i)].r2;
  }

  const int c0 = cfg.channels_at(0);
  const Tensor<T>& trunk = ws.dec[0].r2;
  Tensor<T>* logits[3] = {&ws.seg_logits, &ws.narrow_logits, &ws.erosion_logits};
  for (int hd = 0; hd < 3; ++hd) {
    const int nc = cfg.head_classes[size_t(hd)];
    logits[hd]->reshape_to({nc, cfg.in_h, cfg.in_w});
    K::conv2d_forward(trunk.ptr(), c0, cfg.in_h, cfg.in_w,
                      P.t[size_t(ix.head(2 * hd))].ptr(),
                      P.t[size_t(ix.head(2 * hd + 1))].ptr(), nc, 1, 1, 0,
                      logits[hd]->ptr(), cfg.in_h, cfg.in_w);
  }
}

namespace {

// Cross-entropy of one head over its included pixels. Per-pixel terms are
// computed independently (parallel-safe, dlogits writes are disjoint) and
// reduced serially in pixel order so results are thread-count invariant.
template <typename T, typename Included, typename TargetMass>
double head_loss(const Tensor<T>& logits, int nc, int64_t hw, double scale,
                 Included&& included, TargetMass&& target_mass, Tensor<T>* dl) {
  std::vector<double> per_px(size_t(hw), 0.0);
  const T* L = logits.ptr();
#pragma omp parallel for schedule(static)
  for (int64_t px = 0; px < hw; ++px) {
    if (!included(px)) {
      if (dl != nullptr)
        for (int c = 0; c < nc; ++c) (*dl)[int64_t(c) * hw + px] = T(0);
      continue;
    }
    double mx = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < nc; ++c)
      mx = std::max(mx, double(L[int64_t(c) * hw + px]));
    double z = 0.0;
    for (int c = 0; c < nc; ++c) z += std::exp(double(L[int64_t(c) * hw + px]) - mx);
    const double logz = std::log(z) + mx;
    double ce = 0.0;
    for (int c = 0; c < nc; ++c) {
      const double q = target_mass(px, c);
      const double lp = double(L[int64_t(c) * hw + px]) - logz;
      if (q != 0.0) ce -= q * lp;
      if (dl != nullptr)
        (*dl)[int64_t(c) * hw + px] = T((std::exp(lp) - q) * scale);
    }
    per_px[size_t(px)] = ce;
  }
  double sum = 0.0;
  for (int64_t px = 0; px < hw; ++px) sum += per_px[size_t(px)];
  return sum;
}

template <typename T>
LossTerms loss_impl(const Tensor<T>& segL, const Tensor<T>& narL,
                    const Tensor<T>& eroL, const PixelTargets& tg,
                    const LossWeights& w, Tensor<T>* dseg, Tensor<T>* dnar,
                    Tensor<T>* dero) {
  w.validate();
  const int64_t hw = int64_t(tg.h) * tg.w;
  check_shape(segL, {JointSchema::kSegClasses, tg.h, tg.w}, "seg logits");
  check_shape(narL, {kNarrowingClasses, tg.h, tg.w}, "narrowing logits");
  check_shape(eroL, {kErosionClasses, tg.h, tg.w}, "erosion logits");
  if (dseg != nullptr) dseg->reshape_to(segL.shape);
  if (dnar != nullptr) dnar->reshape_to(narL.shape);
  if (dero != nullptr) dero->reshape_to(eroL.shape);

  LossTerms out;
  const uint8_t* seg = tg.seg.ptr();
  const uint8_t* nv = tg.narrowing_valid.ptr();
  const uint8_t* ev = tg.erosion_valid.ptr();
  for (int64_t i = 0; i < hw; ++i) {
    out.seg_pixels += seg[i] != kIgnoreClass;
    out.narrowing_pixels += nv[i] != 0;
    out.erosion_pixels += ev[i] != 0;
  }
  if (out.seg_pixels + out.narrowing_pixels + out.erosion_pixels == 0)
    throw NoSupervision("no pixel contributes to any loss term");

  const double lsum = w.sum();
  if (out.seg_pixels > 0) {
    const double scale = w.lambda_seg / (lsum * double(out.seg_pixels));
    out.seg = head_loss(
                  segL, JointSchema::kSegClasses, hw, scale,
                  [&](int64_t px) { return seg[px] != kIgnoreClass; },
                  [&](int64_t px, int c) { return seg[px] == c ? 1.0 : 0.0; },
                  dseg) /
              double(out.seg_pixels);
  } else if (dseg != nullptr) {
    dseg->zero();
  }
  const double* nq = tg.narrowing_target.ptr();
  if (out.narrowing_pixels > 0) {
    const double scale = w.lambda_narrow / (lsum * double(out.narrowing_pixels));
    out.narrowing = head_loss(
                        narL, kNarrowingClasses, hw, scale,
                        [&](int64_t px) { return nv[px] != 0; },
                        [&](int64_t px, int c) { return nq[px * kNarrowingClasses + c]; },
                        dnar) /
                    double(out.narrowing_pixels);
  } else if (dnar != nullptr) {
    dnar->zero();
  }
  const double* eq = tg.erosion_target.ptr();
  if (out.erosion_pixels > 0) {
    const double scale = w.lambda_erosion / (lsum * double(out.erosion_pixels));
    out.erosion = head_loss(
                      eroL, kErosionClasses, hw, scale,
                      [&](int64_t px) { return ev[px] != 0; },
                      [&](int64_t px, int c) { return eq[px * kErosionClasses + c]; },
                      dero) /
                  double(out.erosion_pixels);
  } else if (dero != nullptr) {
    dero->zero();
  }
  out.total = (w.lambda_seg * out.seg + w.lambda_narrow * out.narrowing +
               w.lambda_erosion * out.erosion) /
              lsum;
  return out;
}

}  // namespace

template <typename T>
LossTerms compute_loss(const Tensor<T>& seg_logits, const Tensor<T>& narrow_logits,
                       const Tensor<T>& erosion_logits, const PixelTargets& targets,
                       const LossWeights& w) {
  return loss_impl<T>(seg_logits, narrow_logits, erosion_logits, targets, w,
                      nullptr, nullptr, nullptr);
}

template <typename T>
LossTerms loss_and_dlogits(Workspace<T>& ws, const PixelTargets& targets,
                           const LossWeights& w) {
  return loss_impl<T>(ws.seg_logits, ws.narrow_logits, ws.erosion_logits,
                      targets, w, &ws.dseg, &ws.dnarrow, &ws.derosion);
}

template <typename T>
void backward(const NetParams<T>& P, const NetworkConfig& cfg, Workspace<T>& ws,
              NetParams<T>& G) {
  const Idx ix{cfg.depth};
  const int depth = cfg.depth;
  {
    const std::vector<ParamInfo> layout = param_layout(cfg);
    G.t.resize(layout.size());
    for (size_t i = 0; i < layout.size(); ++i) G.t[i].reshape_to(layout[i].shape);
  }
  G.zero();  // norm-parameter gradients accumulate below

  const int c0 = cfg.channels_at(0);
  const int H = cfg.in_h, W = cfg.in_w;
  const Tensor<T>& trunk = ws.dec[0].r2;
  Tensor<T> dr2({c0, H, W});
  dr2.zero();
  Tensor<T> tmp({c0, H, W});
  const Tensor<T>* dheads[3] = {&ws.dseg, &ws.dnarrow, &ws.derosion};
  for (int hd = 0; hd < 3; ++hd) {
    const int nc = cfg.head_classes[size_t(hd)];
    K::conv2d_backward_params(trunk.ptr(), c0, H, W, dheads[hd]->ptr(), nc, H, W,
                              1, 1, 0, G.t[size_t(ix.head(2 * hd))].ptr(),
                              G.t[size_t(ix.head(2 * hd + 1))].ptr());
    K::conv2d_backward_input(dheads[hd]->ptr(), nc, H, W,
                             P.t[size_t(ix.head(2 * hd))].ptr(), c0, 1, 1, 0,
                             tmp.ptr(), H, W);
    T* d = dr2.ptr();
    const T* s = tmp.ptr();
    for (int64_t i = 0; i < dr2.numel(); ++i) d[i] += s[i];
  }

  // decoder, shallow to deep; remember skip gradients for the encoder walk
  auto dskip = std::vector<Tensor<T>>(size_t(depth));
  for (int i = 0; i < depth; ++i) {
    const int c = cfg.channels_at(i);
    const int c_deep = cfg.channels_at(i + 1);
    const int h = cfg.in_h >> i, w = cfg.in_w >> i;
    Tensor<T> dcat({2 * c, h, w});
    block_backward(ws.cat[size_t(i)], 2 * c, c, h, w, P, G, ix.dec(i, 2),
                   cfg.norm_groups, ws.dec[size_t(i)], dr2, &dcat);
    const size_t plane = size_t(c) * h * w;
    Tensor<T> dup({c, h, w});
    dskip[size_t(i)] = Tensor<T>({c, h, w});
    std::memcpy(dup.ptr(), dcat.ptr(), plane * sizeof(T));
    std::memcpy(dskip[size_t(i)].ptr(), dcat.ptr() + plane, plane * sizeof(T));
    const Tensor<T>& deep =
        i == depth - 1 ? ws.bottleneck.r2 : ws.dec[size_t(i + 1)].r2;
    K::upconv2x_backward_params(deep.ptr(), c_deep, h / 2, w / 2, dup.ptr(), c,
                                h, w, G.t[size_t(ix.dec(i, 0))].ptr(),
                                G.t[size_t(ix.dec(i, 1))].ptr());
    dr2.reshape_to({c_deep, h / 2, w / 2});
    K::upconv2x_backward_input(dup.ptr(), c, h, w, P.t[size_t(ix.dec(i, 0))].ptr(),
                               c_deep, dr2.ptr(), h / 2, w / 2);
  }

  const int cb = cfg.channels_at(depth);
  const int hb = cfg.in_h >> depth, wb = cfg.in_w >> depth;
  Tensor<T> ddown({cb, hb, wb});
  block_backward(ws.down[size_t(depth - 1)], cb, cb, hb, wb, P, G, ix.bott(0),
                 cfg.norm_groups, ws.bottleneck, dr2, &ddown);

  for (int i = depth - 1; i >= 0; --i) {
    const int c = cfg.channels_at(i);
    const int c_next = cfg.channels_at(i + 1);
    const int h = cfg.in_h >> i, w = cfg.in_w >> i;
    K::conv2d_backward_params(ws.enc[size_t(i)].r2.ptr(), c, h, w, ddown.ptr(),
                              c_next, h / 2, w / 2, 3, 2, 1,
                              G.t[size_t(ix.enc(i, 8))].ptr(),
                              G.t[size_t(ix.enc(i, 9))].ptr());
    Tensor<T> dr2e({c, h, w});
    K::conv2d_backward_input(ddown.ptr(), c_next, h / 2, w / 2,
                             P.t[size_t(ix.enc(i, 8))].ptr(), c, 3, 2, 1,
                             dr2e.ptr(), h, w);
    {
      T* d = dr2e.ptr();
      const T* s = dskip[size_t(i)].ptr();
      for (int64_t j = 0; j < dr2e.numel(); ++j) d[j] += s[j];
    }
    const Tensor<T>& x_in = i == 0 ? ws.input : ws.down[size_t(i - 1)];
    const int c_in = i == 0 ? 3 : c;
    if (i > 0) {
      block_backward(x_in, c_in, c, h, w, P, G, ix.enc(i, 0), cfg.norm_groups,
                     ws.enc[size_t(i)], dr2e, &ddown);
    } else {
      // input gradients are never consumed
      block_backward(x_in, c_in, c, h, w, P, G, ix.enc(i, 0), cfg.norm_groups,
                     ws.enc[size_t(i)], dr2e, static_cast<Tensor<T>*>(nullptr));
    }
  }
}

template <typename T>
LossTerms loss_and_grad(const NetParams<T>& params, const NetworkConfig& cfg,
                        const Image& image, const PixelTargets& targets,
                        const LossWeights& w, Workspace<T>& ws,
                        NetParams<T>& grads) {
  if (image.h != cfg.in_h || image.w != cfg.in_w)
    throw ShapeMismatch("image " + std::to_string(image.h) + "x" +
                        std::to_string(image.w) + " does not match network input " +
                        std::to_string(cfg.in_h) + "x" + std::to_string(cfg.in_w));
  make_input(image, ws.input);
  forward(params, cfg, ws);
  LossTerms terms = loss_and_dlogits(ws, targets, w);
  backward(params, cfg, ws, grads);
  return terms;
}

GradCheckReport gradient_check(const NetworkConfig& cfg, uint64_t seed, double h) {
  cfg.validate();
  Rng rng(seed);
  Image img(cfg.in_h, cfg.in_w);
  for (auto& p : img.px) p = float(rng.uniform());

  // small fixture covering all three heads plus ignore and background pixels
  AnnotatedImage ann;
  ann.pixels = img;
  ann.limb = Limb::Hand;
  ann.joints = {
      {0, cfg.in_w * 0.3, cfg.in_h * 0.3, 1, 2},          // both tasks
      {12, cfg.in_w * 0.75, cfg.in_h * 0.3, 3, std::nullopt},  // narrowing only
      {18, cfg.in_w * 0.5, cfg.in_h * 0.75, std::nullopt, 1},  // erosion only
  };
  const PixelTargets targets = build_pixel_targets(
      ann, default_schema(), MaskConfig{2.0, 3.0}, SmoothingConfig{0.1});
  const LossWeights w;

  NetParams<double> params = init_params<double>(cfg, seed);
  Workspace<double> ws;
  NetParams<double> grads;
  loss_and_grad(params, cfg, img, targets, w, ws, grads);

  make_input(img, ws.input);
  auto eval = [&] {
    forward(params, cfg, ws);
    return compute_loss(ws.seg_logits, ws.narrow_logits, ws.erosion_logits,
                        targets, w)
        .total;
  };

  const std::vector<ParamInfo> layout = param_layout(cfg);
  GradCheckReport rep;
  for (size_t pi = 0; pi < params.t.size(); ++pi) {
    for (int64_t j = 0; j < params.t[pi].numel(); ++j) {
      const double keep = params.t[pi][j];
      params.t[pi][j] = keep + h;
      const double lp = eval();
      params.t[pi][j] = keep - h;
      const double lm = eval();
      params.t[pi][j] = keep;
      const double fd = (lp - lm) / (2.0 * h);
      const double an = grads.t[pi][j];
      // the floor keeps finite-difference cancellation noise on dead
      // parameters from registering as a large relative error
      const double rel =
          std::abs(an - fd) / std::max({1e-6, std::abs(an), std::abs(fd)});
      ++rep.checked;
      if (rel > rep.max_rel_err) {
        rep.max_rel_err = rel;
        rep.worst_param = layout[pi].name;
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// checkpoint serialization
// ---------------------------------------------------------------------------

static json config_to_json(const NetworkConfig& cfg) {
  return json{{"depth", cfg.depth},
              {"base_channels", cfg.base_channels},
              {"in_h", cfg.in_h},
              {"in_w", cfg.in_w},
              {"norm_groups", cfg.norm_groups},
              {"head_classes", cfg.head_classes}};
}

static NetworkConfig config_from_json(const json& j) {
  NetworkConfig cfg;
  cfg.depth = j.at("depth").get<int>();
  cfg.base_channels = j.at("base_channels").get<int>();
  cfg.in_h = j.at("in_h").get<int>();
  cfg.in_w = j.at("in_w").get<int>();
  cfg.norm_groups = j.at("norm_groups").get<int>();
  const auto hc = j.at("head_classes").get<std::vector<int>>();
  if (hc.size() != 3) throw IoFailure("checkpoint head_classes must have 3 entries");
  std::copy(hc.begin(), hc.end(), cfg.head_classes.begin());
  cfg.validate();
  return cfg;
}

static void append_u32(std::string& out, uint32_t v) {
  out.push_back(char(v & 0xff));
  out.push_back(char((v >> 8) & 0xff));
  out.push_back(char((v >> 16) & 0xff));
  out.push_back(char((v >> 24) & 0xff));
}

static uint32_t read_u32(const std::string& s, size_t off) {
  return uint32_t(uint8_t(s[off])) | uint32_t(uint8_t(s[off + 1])) << 8 |
         uint32_t(uint8_t(s[off + 2])) << 16 | uint32_t(uint8_t(s[off + 3])) << 24;
}

static constexpr uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const NetworkConfig& cfg,
                     const NetParams<float>& params, const std::string& meta_json) {
  const std::vector<ParamInfo> layout = param_layout(cfg);
  if (params.t.size() != layout.size())
    throw ShapeMismatch("checkpoint: parameter list does not match the config");
  json meta;
  try {
    meta = meta_json.empty() ? json::object() : json::parse(meta_json);
  } catch (const json::exception& e) {
    throw IoFailure(std::string("checkpoint metadata is not valid JSON: ") + e.what());
  }
  json manifest = json::array();
  for (size_t i = 0; i < layout.size(); ++i) {
    check_shape(params.t[i], layout[i].shape, layout[i].name.c_str());
    manifest.push_back({{"name", layout[i].name}, {"shape", layout[i].shape}});
  }
  const json header{{"config", config_to_json(cfg)},
                    {"meta", meta},
                    {"params", manifest}};
  const std::string hs = header.dump();

  std::string blob = "SVHC";
  append_u32(blob, kCheckpointVersion);
  append_u32(blob, uint32_t(hs.size()));
  blob += hs;
  for (const Tensor<float>& t : params.t)
    for (int64_t i = 0; i < t.numel(); ++i) {
      uint32_t bits;
      std::memcpy(&bits, &t[i], 4);
      append_u32(blob, bits);
    }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure("cannot open checkpoint for writing: " + path);
  out.write(blob.data(), std::streamsize(blob.size()));
  if (!out) throw IoFailure("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open checkpoint: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string blob = ss.str();
  if (blob.size() < 12 || blob.compare(0, 4, "SVHC") != 0)
    throw IoFailure("not a checkpoint file: " + path);
  if (read_u32(blob, 4) != kCheckpointVersion)
    throw IoFailure("unsupported checkpoint version in " + path);
  const uint32_t hlen = read_u32(blob, 8);
  if (blob.size() < 12 + size_t(hlen))
    throw IoFailure("truncated checkpoint header: " + path);
  json header;
  try {
    header = json::parse(blob.substr(12, hlen));
  } catch (const json::exception& e) {
    throw IoFailure(std::string("corrupt checkpoint header: ") + e.what());
  }

  Checkpoint cp;
  try {
    cp.config = config_from_json(header.at("config"));
    cp.meta_json = header.at("meta").dump();
  } catch (const json::exception& e) {
    throw IoFailure(std::string("checkpoint header missing field: ") + e.what());
  }
  const std::vector<ParamInfo> layout = param_layout(cp.config);
  const auto& manifest = header.at("params");
  if (manifest.size() != layout.size())
    throw IoFailure("checkpoint parameter manifest does not match the config");

  size_t off = 12 + hlen;
  for (size_t i = 0; i < layout.size(); ++i) {
    if (manifest[i].at("name").get<std::string>() != layout[i].name ||
        manifest[i].at("shape").get<std::vector<int>>() != layout[i].shape)
      throw IoFailure("checkpoint tensor " + std::to_string(i) +
                      " does not match the architecture layout");
    Tensor<float> t(layout[i].shape);
    if (off + size_t(t.numel()) * 4 > blob.size())
      throw IoFailure("truncated checkpoint tensor data: " + path);
    for (int64_t j = 0; j < t.numel(); ++j, off += 4) {
      const uint32_t bits = read_u32(blob, off);
      std::memcpy(&t[j], &bits, 4);
    }
    cp.params.t.push_back(std::move(t));
  }
  if (off != blob.size())
    throw IoFailure("trailing bytes after checkpoint tensors: " + path);
  return cp;
}

// ---------------------------------------------------------------------------
// explicit instantiations
// ---------------------------------------------------------------------------

template struct NetParams<float>;
template struct NetParams<double>;

#define SVH_INSTANTIATE(T)                                                     \
  template NetParams<T> zeros_like_params<T>(const NetworkConfig&);            \
  template NetParams<T> init_params<T>(const NetworkConfig&, uint64_t);        \
  template void make_input<T>(const Image&, Tensor<T>&);                       \
  template void forward<T>(const NetParams<T>&, const NetworkConfig&,          \
                           Workspace<T>&);                                     \
  template LossTerms compute_loss<T>(const Tensor<T>&, const Tensor<T>&,       \
                                     const Tensor<T>&, const PixelTargets&,    \
                                     const LossWeights&);                      \
  template LossTerms loss_and_dlogits<T>(Workspace<T>&, const PixelTargets&,   \
                                         const LossWeights&);                  \
  template void backward<T>(const NetParams<T>&, const NetworkConfig&,         \
                            Workspace<T>&, NetParams<T>&);                     \
  template LossTerms loss_and_grad<T>(const NetParams<T>&, const NetworkConfig&, \
                                      const Image&, const PixelTargets&,       \
                                      const LossWeights&, Workspace<T>&,       \
                                      NetParams<T>&);

SVH_INSTANTIATE(float)
SVH_INSTANTIATE(double)

}  // namespace svh
