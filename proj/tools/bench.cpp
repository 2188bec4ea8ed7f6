// Benchmark of the OpenMP compute kernels against their serial reference
// twins. Each case times both variants on a desk-scale shape and verifies
// the outputs are bit-identical.
#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "svh/kernels.hpp"
#include "svh/rng.hpp"

using svh::Rng;
namespace k = svh::kernels;

namespace {

using FloatBuf = std::shared_ptr<std::vector<float>>;

FloatBuf random_buffer(size_t n, Rng& rng) {
  auto buf = std::make_shared<std::vector<float>>(n);
  for (auto& v : *buf) v = float(rng.uniform(-1.0, 1.0));
  return buf;
}

FloatBuf zero_buffer(size_t n) {
  return std::make_shared<std::vector<float>>(n);
}

// Best-of-N wall time for one call, in milliseconds.
double time_ms(const std::function<void()>& fn, int reps) {
  double best = 1e300;
  for (int i = 0; i < reps; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return best;
}

// The closures share ownership of their buffers, so a case stays valid
// after the block that built it ends.
struct Case {
  std::string name;
  std::function<void()> serial, parallel;
  std::function<bool()> equal;  // compares the two output buffers
};

bool report(const Case& c, int reps) {
  // Run both paths once so the equality check sees final outputs.
  c.serial();
  c.parallel();
  const bool exact = c.equal();
  const double ts = time_ms(c.serial, reps);
  const double tp = time_ms(c.parallel, reps);
  std::printf("%-28s %10.3f %10.3f %8.2fx   %s\n", c.name.c_str(), ts, tp,
              ts / tp, exact ? "bit-exact" : "MISMATCH");
  return exact;
}

bool same_bits(const FloatBuf& a, const FloatBuf& b) {
  return a->size() == b->size() &&
         std::memcmp(a->data(), b->data(), a->size() * sizeof(float)) == 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kernel benchmark: serial reference vs OpenMP"};
  bool quick = false;
  int reps = 20;
  app.add_flag("--quick", quick, "Few repetitions (smoke run)");
  app.add_option("--reps", reps, "Repetitions per timing")->capture_default_str();
  CLI11_PARSE(app, argc, argv);
  if (quick) reps = 2;

  std::printf("threads: %d, reps: %d (best-of)\n", omp_get_max_threads(), reps);
  std::printf("%-28s %10s %10s %9s   %s\n", "kernel", "serial ms", "openmp ms",
              "speedup", "outputs");

  Rng rng(2024);
  std::vector<Case> cases;

  // conv 3x3 stride 1, the workhorse shape of the full-resolution level
  {
    const int ic = 8, oc = 8, h = 64, w = 64;
    auto x = random_buffer(size_t(ic) * h * w, rng);
    auto wts = random_buffer(size_t(oc) * ic * 9, rng);
    auto b = random_buffer(size_t(oc), rng);
    auto y0 = zero_buffer(size_t(oc) * h * w);
    auto y1 = zero_buffer(size_t(oc) * h * w);
    cases.push_back({"conv3x3 8->8 64x64",
                     [=] {
                       k::reference::conv2d_forward(x->data(), ic, h, w,
                                                    wts->data(), b->data(), oc,
                                                    3, 1, 1, y0->data(), h, w);
                     },
                     [=] {
                       k::conv2d_forward(x->data(), ic, h, w, wts->data(),
                                         b->data(), oc, 3, 1, 1, y1->data(), h,
                                         w);
                     },
                     [=] { return same_bits(y0, y1); }});
  }

  // strided conv, the encoder downsampling shape
  {
    const int ic = 8, oc = 16, h = 64, w = 64, oh = 32, ow = 32;
    auto x = random_buffer(size_t(ic) * h * w, rng);
    auto wts = random_buffer(size_t(oc) * ic * 9, rng);
    auto b = random_buffer(size_t(oc), rng);
    auto y0 = zero_buffer(size_t(oc) * oh * ow);
    auto y1 = zero_buffer(size_t(oc) * oh * ow);
    cases.push_back({"conv3x3 s2 8->16 64x64",
                     [=] {
                       k::reference::conv2d_forward(x->data(), ic, h, w,
                                                    wts->data(), b->data(), oc,
                                                    3, 2, 1, y0->data(), oh, ow);
                     },
                     [=] {
                       k::conv2d_forward(x->data(), ic, h, w, wts->data(),
                                         b->data(), oc, 3, 2, 1, y1->data(), oh,
                                         ow);
                     },
                     [=] { return same_bits(y0, y1); }});
  }

  // conv backward passes on the workhorse shape
  {
    const int ic = 8, oc = 8, h = 64, w = 64;
    auto x = random_buffer(size_t(ic) * h * w, rng);
    auto dy = random_buffer(size_t(oc) * h * w, rng);
    auto wts = random_buffer(size_t(oc) * ic * 9, rng);
    auto dx0 = zero_buffer(size_t(ic) * h * w);
    auto dx1 = zero_buffer(size_t(ic) * h * w);
    cases.push_back({"conv3x3 dx 8->8 64x64",
                     [=] {
                       k::reference::conv2d_backward_input(
                           dy->data(), oc, h, w, wts->data(), ic, 3, 1, 1,
                           dx0->data(), h, w);
                     },
                     [=] {
                       k::conv2d_backward_input(dy->data(), oc, h, w,
                                                wts->data(), ic, 3, 1, 1,
                                                dx1->data(), h, w);
                     },
                     [=] { return same_bits(dx0, dx1); }});

    auto dw0 = zero_buffer(size_t(oc) * ic * 9);
    auto db0 = zero_buffer(size_t(oc));
    auto dw1 = zero_buffer(size_t(oc) * ic * 9);
    auto db1 = zero_buffer(size_t(oc));
    cases.push_back({"conv3x3 dw/db 8->8 64x64",
                     [=] {
                       k::reference::conv2d_backward_params(
                           x->data(), ic, h, w, dy->data(), oc, h, w, 3, 1, 1,
                           dw0->data(), db0->data());
                     },
                     [=] {
                       k::conv2d_backward_params(x->data(), ic, h, w, dy->data(),
                                                 oc, h, w, 3, 1, 1, dw1->data(),
                                                 db1->data());
                     },
                     [=] { return same_bits(dw0, dw1) && same_bits(db0, db1); }});
  }

  // decoder upsampling shape
  {
    const int ic = 32, oc = 16, h = 16, w = 16;
    auto x = random_buffer(size_t(ic) * h * w, rng);
    auto wts = random_buffer(size_t(ic) * oc * 4, rng);
    auto b = random_buffer(size_t(oc), rng);
    auto y0 = zero_buffer(size_t(oc) * 4 * h * w);
    auto y1 = zero_buffer(size_t(oc) * 4 * h * w);
    cases.push_back({"upconv2x 32->16 16x16",
                     [=] {
                       k::reference::upconv2x_forward(x->data(), ic, h, w,
                                                      wts->data(), b->data(),
                                                      oc, y0->data());
                     },
                     [=] {
                       k::upconv2x_forward(x->data(), ic, h, w, wts->data(),
                                           b->data(), oc, y1->data());
                     },
                     [=] { return same_bits(y0, y1); }});
  }

  // normalization over the bottleneck feature map
  {
    const int c = 32, h = 32, w = 32, groups = 4;
    auto x = random_buffer(size_t(c) * h * w, rng);
    auto scale = random_buffer(size_t(c), rng);
    auto shift = random_buffer(size_t(c), rng);
    auto y0 = zero_buffer(size_t(c) * h * w);
    auto y1 = zero_buffer(size_t(c) * h * w);
    auto m0 = zero_buffer(size_t(groups));
    auto v0 = zero_buffer(size_t(groups));
    auto m1 = zero_buffer(size_t(groups));
    auto v1 = zero_buffer(size_t(groups));
    cases.push_back({"groupnorm 32ch 32x32",
                     [=] {
                       k::reference::groupnorm_forward(
                           x->data(), c, h, w, groups, scale->data(),
                           shift->data(), 1e-5f, y0->data(), m0->data(),
                           v0->data());
                     },
                     [=] {
                       k::groupnorm_forward(x->data(), c, h, w, groups,
                                            scale->data(), shift->data(), 1e-5f,
                                            y1->data(), m1->data(), v1->data());
                     },
                     [=] { return same_bits(y0, y1); }});
  }

  // elementwise activation over one batch of feature maps
  {
    const int64_t n = int64_t(8) * 64 * 64 * 4;
    auto x = random_buffer(size_t(n), rng);
    auto y0 = zero_buffer(size_t(n));
    auto y1 = zero_buffer(size_t(n));
    cases.push_back(
        {"relu 131072",
         [=] { k::reference::relu_forward(x->data(), n, y0->data()); },
         [=] { k::relu_forward(x->data(), n, y1->data()); },
         [=] { return same_bits(y0, y1); }});
  }

  // augmentation resampling
  {
    const int h = 64, w = 64;
    auto x = random_buffer(size_t(h) * w, rng);
    auto m = std::make_shared<std::array<double, 6>>(
        std::array<double, 6>{0.98, 0.05, 1.2, -0.05, 0.98, -0.7});
    auto y0 = zero_buffer(size_t(h) * w);
    auto y1 = zero_buffer(size_t(h) * w);
    cases.push_back({"affine warp 64x64",
                     [=] {
                       k::reference::warp_affine_bilinear(
                           x->data(), h, w, m->data(), y0->data(), h, w);
                     },
                     [=] {
                       k::warp_affine_bilinear(x->data(), h, w, m->data(),
                                               y1->data(), h, w);
                     },
                     [=] { return same_bits(y0, y1); }});
  }

  // nearest-center pixel classification
  {
    const int h = 64, w = 64;
    auto centers = std::make_shared<std::vector<k::MaskCenter>>();
    for (int i = 0; i < 21; ++i)
      centers->push_back({i, rng.uniform(4.0, 60.0), rng.uniform(4.0, 60.0)});
    auto s0 = std::make_shared<std::vector<uint8_t>>(size_t(h) * w);
    auto s1 = std::make_shared<std::vector<uint8_t>>(size_t(h) * w);
    cases.push_back(
        {"mask 21 centers 64x64",
         [=] {
           k::reference::mask_from_centers(centers->data(),
                                           int(centers->size()), 32.0, 40.0, h,
                                           w, s0->data(), 21);
         },
         [=] {
           k::mask_from_centers(centers->data(), int(centers->size()), 32.0,
                                40.0, h, w, s1->data(), 21);
         },
         [=] {
           return s0->size() == s1->size() &&
                  std::memcmp(s0->data(), s1->data(), s0->size()) == 0;
         }});
  }

  bool all_exact = true;
  for (const auto& c : cases) all_exact = report(c, reps) && all_exact;
  if (!all_exact) {
    std::fprintf(stderr, "error: at least one kernel pair disagreed\n");
    return 2;
  }
  return 0;
}
