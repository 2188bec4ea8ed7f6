#pragma once
#include <cmath>
#include <cstdint>
#include <vector>

namespace svh::kernels {

// Layouts: activations [c][h][w], conv weights [oc][ic][k][k], transposed
// conv weights [ic][oc][2][2], all row-major.
//
// Every kernel exists twice: the OpenMP variant used by the pipeline and a
// serial reference twin under kernels::reference. Both call the same
// per-row/per-group body, so for any thread count the parallel variant is
// bit-identical to the reference (each output element is written by exactly
// one thread, with a fixed inner accumulation order).

inline constexpr uint8_t kIgnoreClass = 255;

struct MaskCenter {
  int type_id;
  double x, y;
};

// The shared bodies must be compiled exactly once and called as-is from both
// the serial and the OpenMP variant: if the compiler inlines or clones them
// per call site it may contract mul+add chains into FMAs differently, which
// would break the bit-identity between the two variants. GCC needs noipa
// (noinline alone still allows constant-propagation clones).
#if defined(__GNUC__) && !defined(__clang__)
#define SVH_NOINLINE __attribute__((noipa))
#elif defined(_MSC_VER)
#define SVH_NOINLINE __declspec(noinline)
#else
#define SVH_NOINLINE __attribute__((noinline))
#endif

namespace detail {

inline int conv_ox_begin(int pad, int kx, int stride) {
  return pad - kx <= 0 ? 0 : (pad - kx + stride - 1) / stride;
}

inline int conv_ox_end(int iw, int pad, int kx, int stride, int ow) {
  int last = (iw - 1 + pad - kx) / stride;  // iw-1+pad-kx >= 0 for valid shapes
  return last + 1 < ow ? last + 1 : ow;
}

// One output row of a zero-padded convolution.
template <typename T>
SVH_NOINLINE inline void conv2d_row(const T* x, int ic_n, int ih, int iw, const T* w,
                       const T* b, int k, int stride, int pad, T* y, int ow,
                       int oc, int oy) {
  T* yrow = y + size_t(oy) * size_t(ow);
  const T bias = b[oc];
  for (int ox = 0; ox < ow; ++ox) yrow[ox] = bias;
  for (int ic = 0; ic < ic_n; ++ic) {
    const T* xplane = x + size_t(ic) * size_t(ih) * size_t(iw);
    const T* wplane = w + (size_t(oc) * size_t(ic_n) + size_t(ic)) * size_t(k) * size_t(k);
    for (int ky = 0; ky < k; ++ky) {
      const int iy = oy * stride - pad + ky;
      if (iy < 0 || iy >= ih) continue;
      const T* xrow = xplane + size_t(iy) * size_t(iw);
      for (int kx = 0; kx < k; ++kx) {
        const T wv = wplane[ky * k + kx];
        const int ox0 = conv_ox_begin(pad, kx, stride);
        const int ox1 = conv_ox_end(iw, pad, kx, stride, ow);
        const int shift = -pad + kx;
        if (stride == 1) {
          const T* xs = xrow + ox0 + shift;
          for (int ox = ox0; ox < ox1; ++ox) yrow[ox] += wv * xs[ox - ox0];
        } else {
          for (int ox = ox0; ox < ox1; ++ox)
            yrow[ox] += wv * xrow[ox * stride + shift];
        }
      }
    }
  }
}

// One input-gradient row: scatter of dy through the kernel.
template <typename T>
SVH_NOINLINE inline void conv2d_dx_row(const T* dy, int oc_n, int oh, int ow, const T* w,
                          int ic_n, int k, int stride, int pad, T* dx, int ih,
                          int iw, int ic, int iy) {
  T* dxrow = dx + (size_t(ic) * size_t(ih) + size_t(iy)) * size_t(iw);
  for (int ix = 0; ix < iw; ++ix) dxrow[ix] = T(0);
  for (int oc = 0; oc < oc_n; ++oc) {
    const T* dyplane = dy + size_t(oc) * size_t(oh) * size_t(ow);
    const T* wplane = w + (size_t(oc) * size_t(ic_n) + size_t(ic)) * size_t(k) * size_t(k);
    for (int ky = 0; ky < k; ++ky) {
      const int num = iy + pad - ky;
      if (num < 0 || num % stride != 0) continue;
      const int oy = num / stride;
      if (oy >= oh) continue;
      const T* dyrow = dyplane + size_t(oy) * size_t(ow);
      for (int kx = 0; kx < k; ++kx) {
        const T wv = wplane[ky * k + kx];
        const int ox0 = conv_ox_begin(pad, kx, stride);
        const int ox1 = conv_ox_end(iw, pad, kx, stride, ow);
        const int shift = -pad + kx;
        if (stride == 1) {
          T* dxs = dxrow + ox0 + shift;
          for (int ox = ox0; ox < ox1; ++ox) dxs[ox - ox0] += wv * dyrow[ox];
        } else {
          for (int ox = ox0; ox < ox1; ++ox)
            dxrow[ox * stride + shift] += wv * dyrow[ox];
        }
      }
    }
  }
}

// Weight gradients for one (oc, ic) kernel slice.
template <typename T>
SVH_NOINLINE inline void conv2d_dw_slice(const T* x, int ih, int iw, const T* dy, int oh,
                            int ow, int ic_n, int k, int stride, int pad, T* dw,
                            int oc, int ic) {
  const T* xplane = x + size_t(ic) * size_t(ih) * size_t(iw);
  const T* dyplane = dy + size_t(oc) * size_t(oh) * size_t(ow);
  T* dwslice = dw + (size_t(oc) * size_t(ic_n) + size_t(ic)) * size_t(k) * size_t(k);
  for (int ky = 0; ky < k; ++ky) {
    for (int kx = 0; kx < k; ++kx) {
      T acc = T(0);
      const int ox0 = conv_ox_begin(pad, kx, stride);
      const int ox1 = conv_ox_end(iw, pad, kx, stride, ow);
      const int shift = -pad + kx;
      for (int oy = 0; oy < oh; ++oy) {
        const int iy = oy * stride - pad + ky;
        if (iy < 0 || iy >= ih) continue;
        const T* xrow = xplane + size_t(iy) * size_t(iw);
        const T* dyrow = dyplane + size_t(oy) * size_t(ow);
        if (stride == 1) {
          const T* xs = xrow + ox0 + shift;
          for (int ox = ox0; ox < ox1; ++ox) acc += dyrow[ox] * xs[ox - ox0];
        } else {
          for (int ox = ox0; ox < ox1; ++ox)
            acc += dyrow[ox] * xrow[ox * stride + shift];
        }
      }
      dwslice[ky * k + kx] = acc;
    }
  }
}

// One output row of the kernel-2 stride-2 transposed convolution. Each
// output pixel receives exactly one kernel tap: (ky,kx) = (oy%2, ox%2).
template <typename T>
SVH_NOINLINE inline void upconv2x_row(const T* x, int ic_n, int ih, int iw, const T* w,
                         const T* b, int oc_n, T* y, int ow, int oc, int oy) {
  T* yrow = y + size_t(oy) * size_t(ow);
  const T bias = b[oc];
  for (int ox = 0; ox < ow; ++ox) yrow[ox] = bias;
  const int iy = oy / 2;
  const int ky = oy % 2;
  for (int ic = 0; ic < ic_n; ++ic) {
    const T* xrow = x + (size_t(ic) * size_t(ih) + size_t(iy)) * size_t(iw);
    const T* wk = w + ((size_t(ic) * size_t(oc_n) + size_t(oc)) * 2 + size_t(ky)) * 2;
    const T w0 = wk[0], w1 = wk[1];
    for (int ix = 0; ix < iw; ++ix) {
      yrow[2 * ix] += w0 * xrow[ix];
      yrow[2 * ix + 1] += w1 * xrow[ix];
    }
  }
}

template <typename T>
SVH_NOINLINE inline void upconv2x_dx_row(const T* dy, int oc_n, int oh, int ow, const T* w,
                            T* dx, int iw, int ic, int iy) {
  T* dxrow = dx + size_t(iy) * size_t(iw);
  for (int ix = 0; ix < iw; ++ix) dxrow[ix] = T(0);
  for (int oc = 0; oc < oc_n; ++oc) {
    const T* wk = w + (size_t(ic) * size_t(oc_n) + size_t(oc)) * 4;
    for (int ky = 0; ky < 2; ++ky) {
      const T* dyrow = dy + (size_t(oc) * size_t(oh) + size_t(2 * iy + ky)) * size_t(ow);
      const T w0 = wk[ky * 2 + 0], w1 = wk[ky * 2 + 1];
      for (int ix = 0; ix < iw; ++ix)
        dxrow[ix] += w0 * dyrow[2 * ix] + w1 * dyrow[2 * ix + 1];
    }
  }
}

template <typename T>
SVH_NOINLINE inline void upconv2x_dw_slice(const T* x, int ih, int iw, const T* dy, int oc_n,
                              int oh, int ow, T* dw, int ic) {
  const T* xplane = x + size_t(ic) * size_t(ih) * size_t(iw);
  for (int oc = 0; oc < oc_n; ++oc) {
    T* dwk = dw + (size_t(ic) * size_t(oc_n) + size_t(oc)) * 4;
    for (int ky = 0; ky < 2; ++ky) {
      for (int kx = 0; kx < 2; ++kx) {
        T acc = T(0);
        for (int iy = 0; iy < ih; ++iy) {
          const T* xrow = xplane + size_t(iy) * size_t(iw);
          const T* dyrow =
              dy + (size_t(oc) * size_t(oh) + size_t(2 * iy + ky)) * size_t(ow);
          for (int ix = 0; ix < iw; ++ix) acc += xrow[ix] * dyrow[2 * ix + kx];
        }
        dwk[ky * 2 + kx] = acc;
      }
    }
  }
}

// Group-normalize one group: two-pass mean/variance over the group's
// channels, then per-channel affine.
template <typename T>
SVH_NOINLINE inline void groupnorm_group(const T* x, int c, int hw, int cpg, const T* scale,
                            const T* shift, T eps, T* y, T* mean, T* invstd,
                            int g) {
  (void)c;
  const int64_t n = int64_t(cpg) * hw;
  const T* xg = x + size_t(g) * size_t(cpg) * size_t(hw);
  T* yg = y + size_t(g) * size_t(cpg) * size_t(hw);
  T mu = T(0);
  for (int64_t i = 0; i < n; ++i) mu += xg[i];
  mu /= T(n);
  T var = T(0);
  for (int64_t i = 0; i < n; ++i) {
    const T d = xg[i] - mu;
    var += d * d;
  }
  var /= T(n);
  const T is = T(1) / std::sqrt(var + eps);
  mean[g] = mu;
  invstd[g] = is;
  for (int j = 0; j < cpg; ++j) {
    const int ch = g * cpg + j;
    const T a = scale[ch] * is;
    const T o = shift[ch] - scale[ch] * is * mu;
    const T* xr = xg + size_t(j) * size_t(hw);
    T* yr = yg + size_t(j) * size_t(hw);
    for (int i = 0; i < hw; ++i) yr[i] = a * xr[i] + o;
  }
}

template <typename T>
SVH_NOINLINE inline void groupnorm_group_backward(const T* x, const T* dy, int hw, int cpg,
                                     const T* scale, const T* mean,
                                     const T* invstd, T* dx, T* dscale,
                                     T* dshift, int g) {
  const int64_t n = int64_t(cpg) * hw;
  const T* xg = x + size_t(g) * size_t(cpg) * size_t(hw);
  const T* dyg = dy + size_t(g) * size_t(cpg) * size_t(hw);
  T* dxg = dx + size_t(g) * size_t(cpg) * size_t(hw);
  const T mu = mean[g], is = invstd[g];
  // per-channel affine grads plus the two group sums needed for dx
  T s1 = T(0), s2 = T(0);
  for (int j = 0; j < cpg; ++j) {
    const int ch = g * cpg + j;
    const T* xr = xg + size_t(j) * size_t(hw);
    const T* dyr = dyg + size_t(j) * size_t(hw);
    T dsc = T(0), dsh = T(0), c1 = T(0), c2 = T(0);
    for (int i = 0; i < hw; ++i) {
      const T a = (xr[i] - mu) * is;
      const T h = dyr[i] * scale[ch];
      dsc += dyr[i] * a;
      dsh += dyr[i];
      c1 += h;
      c2 += h * a;
    }
    dscale[ch] += dsc;
    dshift[ch] += dsh;
    s1 += c1;
    s2 += c2;
  }
  const T inv_n = T(1) / T(n);
  for (int j = 0; j < cpg; ++j) {
    const int ch = g * cpg + j;
    const T* xr = xg + size_t(j) * size_t(hw);
    const T* dyr = dyg + size_t(j) * size_t(hw);
    T* dxr = dxg + size_t(j) * size_t(hw);
    for (int i = 0; i < hw; ++i) {
      const T a = (xr[i] - mu) * is;
      const T h = dyr[i] * scale[ch];
      dxr[i] = is * (h - (s1 + a * s2) * inv_n);
    }
  }
}

SVH_NOINLINE inline void bilinear_row(const float* x, int h, int w, const double m[6],
                         float* y, int ow, int oy) {
  float* yrow = y + size_t(oy) * size_t(ow);
  for (int ox = 0; ox < ow; ++ox) {
    const double sx = m[0] * ox + m[1] * oy + m[2];
    const double sy = m[3] * ox + m[4] * oy + m[5];
    const double fx0 = std::floor(sx);
    const double fy0 = std::floor(sy);
    const int x0 = int(fx0), y0 = int(fy0);
    const double ax = sx - fx0, ay = sy - fy0;
    auto sample = [&](int yy, int xx) -> double {
      if (yy < 0 || yy >= h || xx < 0 || xx >= w) return 0.0;
      return double(x[size_t(yy) * size_t(w) + size_t(xx)]);
    };
    const double v = (1.0 - ay) * ((1.0 - ax) * sample(y0, x0) + ax * sample(y0, x0 + 1)) +
                     ay * ((1.0 - ax) * sample(y0 + 1, x0) + ax * sample(y0 + 1, x0 + 1));
    yrow[ox] = float(v);
  }
}

// Three-way pixel rule: distance to the nearest center classifies the pixel
// as that joint (d <= r), ignore (r < d <= R) or background (d > R).
// Squared distances avoid the sqrt; the comparison is exact either way.
SVH_NOINLINE inline void mask_row(const MaskCenter* centers, int n, double r, double R,
                     int w, uint8_t* seg, int background_class, int y) {
  const double r2 = r * r, R2 = R * R;
  uint8_t* row = seg + size_t(y) * size_t(w);
  for (int x = 0; x < w; ++x) {
    double best = -1.0;
    int best_type = -1;
    for (int i = 0; i < n; ++i) {
      const double dx = double(x) - centers[i].x;
      const double dy = double(y) - centers[i].y;
      const double d2 = dx * dx + dy * dy;
      if (best < 0.0 || d2 < best || (d2 == best && centers[i].type_id < best_type)) {
        best = d2;
        best_type = centers[i].type_id;
      }
    }
    if (best_type < 0 || best > R2)
      row[x] = uint8_t(background_class);
    else if (best <= r2)
      row[x] = uint8_t(best_type);
    else
      row[x] = kIgnoreClass;
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// serial reference implementations
// ---------------------------------------------------------------------------
namespace reference {

template <typename T>
void conv2d_forward(const T* x, int ic, int ih, int iw, const T* w, const T* b,
                    int oc, int k, int stride, int pad, T* y, int oh, int ow) {
  for (int c = 0; c < oc; ++c)
    for (int oy = 0; oy < oh; ++oy)
      detail::conv2d_row(x, ic, ih, iw, w, b, k, stride, pad,
                         y + size_t(c) * size_t(oh) * size_t(ow), ow, c, oy);
}

template <typename T>
void conv2d_backward_input(const T* dy, int oc, int oh, int ow, const T* w,
                           int ic, int k, int stride, int pad, T* dx, int ih,
                           int iw) {
  for (int c = 0; c < ic; ++c)
    for (int iy = 0; iy < ih; ++iy)
      detail::conv2d_dx_row(dy, oc, oh, ow, w, ic, k, stride, pad, dx, ih, iw,
                            c, iy);
}

template <typename T>
void conv2d_backward_params(const T* x, int ic, int ih, int iw, const T* dy,
                            int oc, int oh, int ow, int k, int stride, int pad,
                            T* dw, T* db) {
  for (int c = 0; c < oc; ++c) {
    T acc = T(0);
    const T* dyplane = dy + size_t(c) * size_t(oh) * size_t(ow);
    for (int64_t i = 0; i < int64_t(oh) * ow; ++i) acc += dyplane[i];
    db[c] = acc;
  }
  for (int c = 0; c < oc; ++c)
    for (int i = 0; i < ic; ++i)
      detail::conv2d_dw_slice(x, ih, iw, dy, oh, ow, ic, k, stride, pad, dw, c, i);
}

template <typename T>
void upconv2x_forward(const T* x, int ic, int ih, int iw, const T* w,
                      const T* b, int oc, T* y) {
  const int oh = 2 * ih, ow = 2 * iw;
  for (int c = 0; c < oc; ++c)
    for (int oy = 0; oy < oh; ++oy)
      detail::upconv2x_row(x, ic, ih, iw, w, b, oc,
                           y + size_t(c) * size_t(oh) * size_t(ow), ow, c, oy);
}

template <typename T>
void upconv2x_backward_input(const T* dy, int oc, int oh, int ow, const T* w,
                             int ic, T* dx, int ih, int iw) {
  for (int c = 0; c < ic; ++c)
    for (int iy = 0; iy < ih; ++iy)
      detail::upconv2x_dx_row(dy, oc, oh, ow, w,
                              dx + size_t(c) * size_t(ih) * size_t(iw), iw, c, iy);
}

template <typename T>
void upconv2x_backward_params(const T* x, int ic, int ih, int iw, const T* dy,
                              int oc, int oh, int ow, T* dw, T* db) {
  for (int c = 0; c < oc; ++c) {
    T acc = T(0);
    const T* dyplane = dy + size_t(c) * size_t(oh) * size_t(ow);
    for (int64_t i = 0; i < int64_t(oh) * ow; ++i) acc += dyplane[i];
    db[c] = acc;
  }
  for (int i = 0; i < ic; ++i)
    detail::upconv2x_dw_slice(x, ih, iw, dy, oc, oh, ow, dw, i);
}

template <typename T>
void groupnorm_forward(const T* x, int c, int h, int w, int groups,
                       const T* scale, const T* shift, T eps, T* y, T* mean,
                       T* invstd) {
  const int cpg = c / groups;
  for (int g = 0; g < groups; ++g)
    detail::groupnorm_group(x, c, h * w, cpg, scale, shift, eps, y, mean,
                            invstd, g);
}

template <typename T>
void groupnorm_backward(const T* x, const T* dy, int c, int h, int w,
                        int groups, const T* scale, const T* mean,
                        const T* invstd, T* dx, T* dscale, T* dshift) {
  const int cpg = c / groups;
  for (int g = 0; g < groups; ++g)
    detail::groupnorm_group_backward(x, dy, h * w, cpg, scale, mean, invstd,
                                     dx, dscale, dshift, g);
}

template <typename T>
void relu_forward(const T* x, int64_t n, T* y) {
  for (int64_t i = 0; i < n; ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
}

template <typename T>
void relu_backward(const T* x, const T* dy, int64_t n, T* dx) {
  for (int64_t i = 0; i < n; ++i) dx[i] = x[i] > T(0) ? dy[i] : T(0);
}

// y(ox,oy) = x(m0*ox + m1*oy + m2, m3*ox + m4*oy + m5), bilinear, reads
// outside the source as 0.
inline void warp_affine_bilinear(const float* x, int h, int w,
                                 const double m[6], float* y, int oh, int ow) {
  for (int oy = 0; oy < oh; ++oy) detail::bilinear_row(x, h, w, m, y, ow, oy);
}

inline void mask_from_centers(const MaskCenter* centers, int n, double r,
                              double R, int h, int w, uint8_t* seg,
                              int background_class) {
  for (int y = 0; y < h; ++y)
    detail::mask_row(centers, n, r, R, w, seg, background_class, y);
}

}  // namespace reference

// ---------------------------------------------------------------------------
// OpenMP variants
// ---------------------------------------------------------------------------

template <typename T>
void conv2d_forward(const T* x, int ic, int ih, int iw, const T* w, const T* b,
                    int oc, int k, int stride, int pad, T* y, int oh, int ow) {
#pragma omp parallel for collapse(2) schedule(static)
  for (int c = 0; c < oc; ++c)
    for (int oy = 0; oy < oh; ++oy)
      detail::conv2d_row(x, ic, ih, iw, w, b, k, stride, pad,
                         y + size_t(c) * size_t(oh) * size_t(ow), ow, c, oy);
}

template <typename T>
void conv2d_backward_input(const T* dy, int oc, int oh, int ow, const T* w,
                           int ic, int k, int stride, int pad, T* dx, int ih,
                           int iw) {
#pragma omp parallel for collapse(2) schedule(static)
  for (int c = 0; c < ic; ++c)
    for (int iy = 0; iy < ih; ++iy)
      detail::conv2d_dx_row(dy, oc, oh, ow, w, ic, k, stride, pad, dx, ih, iw,
                            c, iy);
}

template <typename T>
void conv2d_backward_params(const T* x, int ic, int ih, int iw, const T* dy,
                            int oc, int oh, int ow, int k, int stride, int pad,
                            T* dw, T* db) {
#pragma omp parallel for schedule(static)
  for (int c = 0; c < oc; ++c) {
    T acc = T(0);
    const T* dyplane = dy + size_t(c) * size_t(oh) * size_t(ow);
    for (int64_t i = 0; i < int64_t(oh) * ow; ++i) acc += dyplane[i];
    db[c] = acc;
  }
#pragma omp parallel for collapse(2) schedule(static)
  for (int c = 0; c < oc; ++c)
    for (int i = 0; i < ic; ++i)
      detail::conv2d_dw_slice(x, ih, iw, dy, oh, ow, ic, k, stride, pad, dw, c, i);
}

template <typename T>
void upconv2x_forward(const T* x, int ic, int ih, int iw, const T* w,
                      const T* b, int oc, T* y) {
  const int oh = 2 * ih, ow = 2 * iw;
#pragma omp parallel for collapse(2) schedule(static)
  for (int c = 0; c < oc; ++c)
    for (int oy = 0; oy < oh; ++oy)
      detail::upconv2x_row(x, ic, ih, iw, w, b, oc,
                           y + size_t(c) * size_t(oh) * size_t(ow), ow, c, oy);
}

template <typename T>
void upconv2x_backward_input(const T* dy, int oc, int oh, int ow, const T* w,
                             int ic, T* dx, int ih, int iw) {
#pragma omp parallel for collapse(2) schedule(static)
  for (int c = 0; c < ic; ++c)
    for (int iy = 0; iy < ih; ++iy)
      detail::upconv2x_dx_row(dy, oc, oh, ow, w,
                              dx + size_t(c) * size_t(ih) * size_t(iw), iw, c, iy);
}

template <typename T>
void upconv2x_backward_params(const T* x, int ic, int ih, int iw, const T* dy,
                              int oc, int oh, int ow, T* dw, T* db) {
#pragma omp parallel for schedule(static)
  for (int c = 0; c < oc; ++c) {
    T acc = T(0);
    const T* dyplane = dy + size_t(c) * size_t(oh) * size_t(ow);
    for (int64_t i = 0; i < int64_t(oh) * ow; ++i) acc += dyplane[i];
    db[c] = acc;
  }
#pragma omp parallel for schedule(static)
  for (int i = 0; i < ic; ++i)
    detail::upconv2x_dw_slice(x, ih, iw, dy, oc, oh, ow, dw, i);
}

template <typename T>
void groupnorm_forward(const T* x, int c, int h, int w, int groups,
                       const T* scale, const T* shift, T eps, T* y, T* mean,
                       T* invstd) {
  const int cpg = c / groups;
#pragma omp parallel for schedule(static)
  for (int g = 0; g < groups; ++g)
    detail::groupnorm_group(x, c, h * w, cpg, scale, shift, eps, y, mean,
                            invstd, g);
}

template <typename T>
void groupnorm_backward(const T* x, const T* dy, int c, int h, int w,
                        int groups, const T* scale, const T* mean,
                        const T* invstd, T* dx, T* dscale, T* dshift) {
  const int cpg = c / groups;
#pragma omp parallel for schedule(static)
  for (int g = 0; g < groups; ++g)
    detail::groupnorm_group_backward(x, dy, h * w, cpg, scale, mean, invstd,
                                     dx, dscale, dshift, g);
}

template <typename T>
void relu_forward(const T* x, int64_t n, T* y) {
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
}

template <typename T>
void relu_backward(const T* x, const T* dy, int64_t n, T* dx) {
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) dx[i] = x[i] > T(0) ? dy[i] : T(0);
}

inline void warp_affine_bilinear(const float* x, int h, int w,
                                 const double m[6], float* y, int oh, int ow) {
#pragma omp parallel for schedule(static)
  for (int oy = 0; oy < oh; ++oy) detail::bilinear_row(x, h, w, m, y, ow, oy);
}

inline void mask_from_centers(const MaskCenter* centers, int n, double r,
                              double R, int h, int w, uint8_t* seg,
                              int background_class) {
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y)
    detail::mask_row(centers, n, r, R, w, seg, background_class, y);
}

}  // namespace svh::kernels
