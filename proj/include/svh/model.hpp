#pragma once
#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "svh/image.hpp"
#include "svh/targets.hpp"
#include "svh/tensor.hpp"

namespace svh {

// Symmetric encoder/decoder with skip connections, three 1x1 heads on the
// shared full-resolution trunk output.
struct NetworkConfig {
  int depth = 3;          // encoder levels (each halves the resolution)
  int base_channels = 8;  // channels at full resolution; doubles per level
  int in_h = 64, in_w = 64;
  int norm_groups = 4;    // target group count for channel-group norm
  std::array<int, 3> head_classes = {22, 5, 6};  // seg, narrowing, erosion

  void validate() const;
  // base * 2^level; level `depth` is the bottleneck width.
  int channels_at(int level) const;
};

struct LossWeights {
  double lambda_seg = 1.0, lambda_narrow = 1.0, lambda_erosion = 1.0;
  void validate() const;
  double sum() const { return lambda_seg + lambda_narrow + lambda_erosion; }
};

struct ParamInfo {
  std::string name;
  std::vector<int> shape;
  bool decay = false;    // true only for convolution kernels
  int64_t fan_in = 0;    // inputs per output unit; 0 for bias/scale/shift
};

// Architecture traversal order: encoder shallow-to-deep, bottleneck,
// decoder deep-to-shallow, heads. Fixed given the config.
std::vector<ParamInfo> param_layout(const NetworkConfig& cfg);
int64_t param_count(const NetworkConfig& cfg);

template <typename T>
struct NetParams {
  std::vector<Tensor<T>> t;  // aligned with param_layout

  void zero() {
    for (auto& x : t) x.zero();
  }
  int64_t numel() const {
    int64_t n = 0;
    for (const auto& x : t) n += x.numel();
    return n;
  }
};

template <typename T>
NetParams<T> zeros_like_params(const NetworkConfig& cfg);

// Fan-in-scaled uniform kernels, zero biases, unit scales / zero shifts,
// drawn from a single seeded stream in layout order.
template <typename T>
NetParams<T> init_params(const NetworkConfig& cfg, uint64_t seed);

// Activation storage for one forward/backward pass; reused across calls.
template <typename T>
struct BlockActs {
  Tensor<T> a1, n1, r1, a2, n2, r2;  // conv/norm/relu outputs, both convs
  Tensor<T> gn1_mean, gn1_invstd, gn2_mean, gn2_invstd;
};

template <typename T>
struct Workspace {
  Tensor<T> input;  // [3][H][W]: intensity + x + y coordinate channels
  std::vector<BlockActs<T>> enc;
  std::vector<Tensor<T>> down;  // strided-conv outputs per level
  BlockActs<T> bottleneck;
  std::vector<Tensor<T>> up;   // transposed-conv outputs per decoder level
  std::vector<Tensor<T>> cat;  // [up ; skip] concatenations
  std::vector<BlockActs<T>> dec;
  Tensor<T> seg_logits, narrow_logits, erosion_logits;  // [C][H][W]
  Tensor<T> dseg, dnarrow, derosion;                    // loss gradients
};

// Builds the 3-channel input: intensity plus x/(w-1) and y/(h-1) coordinate
// channels (corner pixels hit exactly 0 and 1).
template <typename T>
void make_input(const Image& image, Tensor<T>& out);

// Full forward pass; logits land in ws.{seg,narrow,erosion}_logits.
template <typename T>
void forward(const NetParams<T>& params, const NetworkConfig& cfg,
             Workspace<T>& ws);

struct LossTerms {
  double total = 0.0;
  double seg = 0.0, narrowing = 0.0, erosion = 0.0;
  int64_t seg_pixels = 0, narrowing_pixels = 0, erosion_pixels = 0;
};

// Normalized weighted average of the three per-pixel cross-entropies, each
// a mean over its included pixels, computed in double regardless of T.
// Throws NoSupervision when every pixel of every term is excluded.
template <typename T>
LossTerms compute_loss(const Tensor<T>& seg_logits, const Tensor<T>& narrow_logits,
                       const Tensor<T>& erosion_logits, const PixelTargets& targets,
                       const LossWeights& w);

// Same loss, and additionally writes dL/dlogits into ws.dseg/dnarrow/derosion.
template <typename T>
LossTerms loss_and_dlogits(Workspace<T>& ws, const PixelTargets& targets,
                           const LossWeights& w);

// Reverse pass from ws.d* through the network; writes exact gradients for
// every parameter into `grads` (overwriting, not accumulating).
template <typename T>
void backward(const NetParams<T>& params, const NetworkConfig& cfg,
              Workspace<T>& ws, NetParams<T>& grads);

// Convenience: input -> forward -> loss -> backward for one image.
template <typename T>
LossTerms loss_and_grad(const NetParams<T>& params, const NetworkConfig& cfg,
                        const Image& image, const PixelTargets& targets,
                        const LossWeights& w, Workspace<T>& ws,
                        NetParams<T>& grads);

// Max relative error between analytic gradients and central finite
// differences (step h) on a small double-precision network; used by the CLI
// and the acceptance gate.
struct GradCheckReport {
  double max_rel_err = 0.0;
  int64_t checked = 0;
  std::string worst_param;
};
GradCheckReport gradient_check(const NetworkConfig& cfg, uint64_t seed, double h);

// Checkpoint: "SVHC" magic, format version, JSON header (config + caller
// metadata + parameter manifest), then float32 tensors in layout order.
// Round-trips bit-exactly.
void save_checkpoint(const std::string& path, const NetworkConfig& cfg,
                     const NetParams<float>& params, const std::string& meta_json);
struct Checkpoint {
  NetworkConfig config;
  NetParams<float> params;
  std::string meta_json;
};
Checkpoint load_checkpoint(const std::string& path);

extern template struct NetParams<float>;
extern template struct NetParams<double>;

}  // namespace svh
