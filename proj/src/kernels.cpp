#include "edgenet/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <limits>

namespace edgenet {

namespace {
std::atomic<int> g_threads{1};
}

void set_num_threads(int n) { g_threads.store(n < 1 ? 1 : n); }
int num_threads() { return g_threads.load(); }

namespace kernels {

// All loops parallelize over independent output elements; the reduction for
// any single output element stays on one thread in a fixed order, so results
// do not depend on the thread count.

void conv2d_f32(const float* in, int64_t n, int64_t c, int64_t h, int64_t w,
                const float* weight, int64_t cout, int64_t kh, int64_t kw,
                const float* bias, int sh, int sw, int ph, int pw, float* out,
                int64_t hout, int64_t wout) {
  const int64_t in_hw = h * w;
  const int64_t k_chw = c * kh * kw;
#pragma omp parallel for collapse(2) num_threads(num_threads()) \
    schedule(static)
  for (int64_t ni = 0; ni < n; ++ni) {
    for (int64_t co = 0; co < cout; ++co) {
      const float* wf = weight + co * k_chw;
      float* op = out + (ni * cout + co) * hout * wout;
      for (int64_t oy = 0; oy < hout; ++oy) {
        for (int64_t ox = 0; ox < wout; ++ox) {
          float acc = bias ? bias[co] : 0.0f;
          const int64_t iy0 = oy * sh - ph;
          const int64_t ix0 = ox * sw - pw;
          for (int64_t ci = 0; ci < c; ++ci) {
            const float* ip = in + (ni * c + ci) * in_hw;
            const float* wp = wf + ci * kh * kw;
            for (int64_t ky = 0; ky < kh; ++ky) {
              const int64_t iy = iy0 + ky;
              if (iy < 0 || iy >= h) continue;
              for (int64_t kx = 0; kx < kw; ++kx) {
                const int64_t ix = ix0 + kx;
                if (ix < 0 || ix >= w) continue;
                acc += ip[iy * w + ix] * wp[ky * kw + kx];
              }
            }
          }
          op[oy * wout + ox] = acc;
        }
      }
    }
  }
}

void depthwise_conv2d_f32(const float* in, int64_t n, int64_t c, int64_t h,
                          int64_t w, const float* weight, int64_t kh,
                          int64_t kw, const float* bias, int sh, int sw,
                          int ph, int pw, float* out, int64_t hout,
                          int64_t wout) {
  const int64_t in_hw = h * w;
#pragma omp parallel for collapse(2) num_threads(num_threads()) \
    schedule(static)
  for (int64_t ni = 0; ni < n; ++ni) {
    for (int64_t ci = 0; ci < c; ++ci) {
      const float* ip = in + (ni * c + ci) * in_hw;
      const float* wp = weight + ci * kh * kw;
      float* op = out + (ni * c + ci) * hout * wout;
      for (int64_t oy = 0; oy < hout; ++oy) {
        for (int64_t ox = 0; ox < wout; ++ox) {
          float acc = bias ? bias[ci] : 0.0f;
          for (int64_t ky = 0; ky < kh; ++ky) {
            const int64_t iy = oy * sh - ph + ky;
            if (iy < 0 || iy >= h) continue;
            for (int64_t kx = 0; kx < kw; ++kx) {
              const int64_t ix = ox * sw - pw + kx;
              if (ix < 0 || ix >= w) continue;
              acc += ip[iy * w + ix] * wp[ky * kw + kx];
            }
          }
          op[oy * wout + ox] = acc;
        }
      }
    }
  }
}

void fully_connected_f32(const float* in, int64_t n, int64_t in_features,
                         const float* weight, int64_t out_features,
                         const float* bias, float* out) {
#pragma omp parallel for collapse(2) num_threads(num_threads()) \
    schedule(static)
  for (int64_t ni = 0; ni < n; ++ni) {
    for (int64_t o = 0; o < out_features; ++o) {
      const float* ip = in + ni * in_features;
      const float* wp = weight + o * in_features;
      float acc = bias ? bias[o] : 0.0f;
      for (int64_t i = 0; i < in_features; ++i) acc += ip[i] * wp[i];
      out[ni * out_features + o] = acc;
    }
  }
}

void maxpool2d_f32(const float* in, int64_t n, int64_t c, int64_t h, int64_t w,
                   int kh, int kw, int sh, int sw, int ph, int pw, float* out,
                   int64_t hout, int64_t wout) {
#pragma omp parallel for collapse(2) num_threads(num_threads()) \
    schedule(static)
  for (int64_t ni = 0; ni < n; ++ni) {
    for (int64_t ci = 0; ci < c; ++ci) {
      const float* ip = in + (ni * c + ci) * h * w;
      float* op = out + (ni * c + ci) * hout * wout;
      for (int64_t oy = 0; oy < hout; ++oy) {
        for (int64_t ox = 0; ox < wout; ++ox) {
          float best = -std::numeric_limits<float>::infinity();
          for (int ky = 0; ky < kh; ++ky) {
            const int64_t iy = oy * sh - ph + ky;
            if (iy < 0 || iy >= h) continue;
            for (int kx = 0; kx < kw; ++kx) {
              const int64_t ix = ox * sw - pw + kx;
              if (ix < 0 || ix >= w) continue;
              best = std::max(best, ip[iy * w + ix]);
            }
          }
          op[oy * wout + ox] = best;
        }
      }
    }
  }
}

void avgpool2d_f32(const float* in, int64_t n, int64_t c, int64_t h, int64_t w,
                   int kh, int kw, int sh, int sw, int ph, int pw, float* out,
                   int64_t hout, int64_t wout) {
  const float inv_area = 1.0f / static_cast<float>(kh * kw);
#pragma omp parallel for collapse(2) num_threads(num_threads()) \
    schedule(static)
  for (int64_t ni = 0; ni < n; ++ni) {
    for (int64_t ci = 0; ci < c; ++ci) {
      const float* ip = in + (ni * c + ci) * h * w;
      float* op = out + (ni * c + ci) * hout * wout;
      for (int64_t oy = 0; oy < hout; ++oy) {
        for (int64_t ox = 0; ox < wout; ++ox) {
          float acc = 0.0f;
          for (int ky = 0; ky < kh; ++ky) {
            const int64_t iy = oy * sh - ph + ky;
            if (iy < 0 || iy >= h) continue;
            for (int kx = 0; kx < kw; ++kx) {
              const int64_t ix = ox * sw - pw + kx;
              if (ix < 0 || ix >= w) continue;
              acc += ip[iy * w + ix];
            }
          }
          op[oy * wout + ox] = acc * inv_area;
        }
      }
    }
  }
}

void global_avgpool_f32(const float* in, int64_t n, int64_t c, int64_t h,
                        int64_t w, float* out) {
  const int64_t hw = h * w;
#pragma omp parallel for collapse(2) num_threads(num_threads()) \
    schedule(static)
  for (int64_t ni = 0; ni < n; ++ni) {
    for (int64_t ci = 0; ci < c; ++ci) {
      const float* ip = in + (ni * c + ci) * hw;
      double acc = 0.0;
      for (int64_t i = 0; i < hw; ++i) acc += ip[i];
      out[ni * c + ci] = static_cast<float>(acc / static_cast<double>(hw));
    }
  }
}

namespace {

inline uint8_t requant_acc(int32_t acc, double mult, int out_zp) {
  const double v = round_half_up(static_cast<double>(acc) * mult) + out_zp;
  return static_cast<uint8_t>(std::clamp(v, 0.0, 255.0));
}

inline int32_t conv_acc_u8(const uint8_t* in, int64_t c, int64_t h, int64_t w,
                           int in_zp, const uint8_t* wf, int64_t kh,
                           int64_t kw, int w_zp, int64_t iy0, int64_t ix0,
                           int64_t in_hw, bool depthwise, int64_t ci_fixed) {
  int32_t acc = 0;
  const int64_t c_lo = depthwise ? ci_fixed : 0;
  const int64_t c_hi = depthwise ? ci_fixed + 1 : c;
  for (int64_t ci = c_lo; ci < c_hi; ++ci) {
    const uint8_t* ip = in + ci * in_hw;
    const uint8_t* wp = depthwise ? wf : wf + ci * kh * kw;
    for (int64_t ky = 0; ky < kh; ++ky) {
      const int64_t iy = iy0 + ky;
      for (int64_t kx = 0; kx < kw; ++kx) {
        const int64_t ix = ix0 + kx;
        // Zero padding lives at the input zero point, contributing nothing.
        const int32_t xv = (iy < 0 || iy >= h || ix < 0 || ix >= w)
                               ? 0
                               : static_cast<int32_t>(ip[iy * w + ix]) - in_zp;
        const int32_t wv = static_cast<int32_t>(wp[ky * kw + kx]) - w_zp;
        acc += xv * wv;
      }
    }
  }
  return acc;
}

}  // namespace

void conv2d_u8_requant(const uint8_t* in, int64_t n, int64_t c, int64_t h,
                       int64_t w, int in_zp, const uint8_t* weight,
                       int64_t cout, int64_t kh, int64_t kw, int w_zp,
                       const int32_t* bias, int sh, int sw, int ph, int pw,
                       double mult, int out_zp, uint8_t* out, int64_t hout,
                       int64_t wout) {
  const int64_t in_hw = h * w;
  const int64_t k_chw = c * kh * kw;
#pragma omp parallel for collapse(2) num_threads(num_threads()) \
    schedule(static)
  for (int64_t ni = 0; ni < n; ++ni) {
    for (int64_t co = 0; co < cout; ++co) {
      const uint8_t* base = in + ni * c * in_hw;
      const uint8_t* wf = weight + co * k_chw;
      uint8_t* op = out + (ni * cout + co) * hout * wout;
      for (int64_t oy = 0; oy < hout; ++oy) {
        for (int64_t ox = 0; ox < wout; ++ox) {
          int32_t acc = conv_acc_u8(base, c, h, w, in_zp, wf, kh, kw, w_zp,
                                    oy * sh - ph, ox * sw - pw, in_hw, false,
                                    0);
          if (bias) acc += bias[co];
          op[oy * wout + ox] = requant_acc(acc, mult, out_zp);
        }
      }
    }
  }
}

void conv2d_u8_dequant(const uint8_t* in, int64_t n, int64_t c, int64_t h,
                       int64_t w, int in_zp, const uint8_t* weight,
                       int64_t cout, int64_t kh, int64_t kw, int w_zp,
                       const float* bias_f32, int sh, int sw, int ph, int pw,
                       double acc_scale, float* out, int64_t hout,
                       int64_t wout) {
  const int64_t in_hw = h * w;
  const int64_t k_chw = c * kh * kw;
#pragma omp parallel for collapse(2) num_threads(num_threads()) \
    schedule(static)
  for (int64_t ni = 0; ni < n; ++ni) {
    for (int64_t co = 0; co < cout; ++co) {
      const uint8_t* base = in + ni * c * in_hw;
      const uint8_t* wf = weight + co * k_chw;
      float* op = out + (ni * cout + co) * hout * wout;
      for (int64_t oy = 0; oy < hout; ++oy) {
        for (int64_t ox = 0; ox < wout; ++ox) {
          const int32_t acc = conv_acc_u8(base, c, h, w, in_zp, wf, kh, kw,
                                          w_zp, oy * sh - ph, ox * sw - pw,
                                          in_hw, false, 0);
          double v = static_cast<double>(acc) * acc_scale;
          if (bias_f32) v += bias_f32[co];
          op[oy * wout + ox] = static_cast<float>(v);
        }
      }
    }
  }
}

void depthwise_conv2d_u8_requant(const uint8_t* in, int64_t n, int64_t c,
                                 int64_t h, int64_t w, int in_zp,
                                 const uint8_t* weight, int64_t kh, int64_t kw,
                                 int w_zp, const int32_t* bias, int sh, int sw,
                                 int ph, int pw, double mult, int out_zp,
                                 uint8_t* out, int64_t hout, int64_t wout) {
  const int64_t in_hw = h * w;
#pragma omp parallel for collapse(2) num_threads(num_threads()) \
    schedule(static)
  for (int64_t ni = 0; ni < n; ++ni) {
    for (int64_t ci = 0; ci < c; ++ci) {
      const uint8_t* base = in + ni * c * in_hw;
      const uint8_t* wf = weight + ci * kh * kw;
      uint8_t* op = out + (ni * c + ci) * hout * wout;
      for (int64_t oy = 0; oy < hout; ++oy) {
        for (int64_t ox = 0; ox < wout; ++ox) {
          int32_t acc = conv_acc_u8(base, c, h, w, in_zp, wf, kh, kw, w_zp,
                                    oy * sh - ph, ox * sw - pw, in_hw, true,
                                    ci);
          if (bias) acc += bias[ci];
          op[oy * wout + ox] = requant_acc(acc, mult, out_zp);
        }
      }
    }
  }
}

void depthwise_conv2d_u8_dequant(const uint8_t* in, int64_t n, int64_t c,
                                 int64_t h, int64_t w, int in_zp,
                                 const uint8_t* weight, int64_t kh, int64_t kw,
                                 int w_zp, const float* bias_f32, int sh,
                                 int sw, int ph, int pw, double acc_scale,
                                 float* out, int64_t hout, int64_t wout) {
  const int64_t in_hw = h * w;
#pragma omp parallel for collapse(2) num_threads(num_threads()) \
    schedule(static)
  for (int64_t ni = 0; ni < n; ++ni) {
    for (int64_t ci = 0; ci < c; ++ci) {
      const uint8_t* base = in + ni * c * in_hw;
      const uint8_t* wf = weight + ci * kh * kw;
      float* op = out + (ni * c + ci) * hout * wout;
      for (int64_t oy = 0; oy < hout; ++oy) {
        for (int64_t ox = 0; ox < wout; ++ox) {
          const int32_t acc = conv_acc_u8(base, c, h, w, in_zp, wf, kh, kw,
                                          w_zp, oy * sh - ph, ox * sw - pw,
                                          in_hw, true, ci);
          double v = static_cast<double>(acc) * acc_scale;
          if (bias_f32) v += bias_f32[ci];
          op[oy * wout + ox] = static_cast<float>(v);
        }
      }
    }
  }
}

void fully_connected_u8_requant(const uint8_t* in, int64_t n,
                                int64_t in_features, int in_zp,
                                const uint8_t* weight, int64_t out_features,
                                int w_zp, const int32_t* bias, double mult,
                                int out_zp, uint8_t* out) {
#pragma omp parallel for collapse(2) num_threads(num_threads()) \
    schedule(static)
  for (int64_t ni = 0; ni < n; ++ni) {
    for (int64_t o = 0; o < out_features; ++o) {
      const uint8_t* ip = in + ni * in_features;
      const uint8_t* wp = weight + o * in_features;
      int32_t acc = bias ? bias[o] : 0;
      for (int64_t i = 0; i < in_features; ++i)
        acc += (static_cast<int32_t>(ip[i]) - in_zp) *
               (static_cast<int32_t>(wp[i]) - w_zp);
      out[ni * out_features + o] = requant_acc(acc, mult, out_zp);
    }
  }
}

void fully_connected_u8_dequant(const uint8_t* in, int64_t n,
                                int64_t in_features, int in_zp,
                                const uint8_t* weight, int64_t out_features,
                                int w_zp, const float* bias_f32,
                                double acc_scale, float* out) {
#pragma omp parallel for collapse(2) num_threads(num_threads()) \
    schedule(static)
  for (int64_t ni = 0; ni < n; ++ni) {
    for (int64_t o = 0; o < out_features; ++o) {
      const uint8_t* ip = in + ni * in_features;
      const uint8_t* wp = weight + o * in_features;
      int32_t acc = 0;
      for (int64_t i = 0; i < in_features; ++i)
        acc += (static_cast<int32_t>(ip[i]) - in_zp) *
               (static_cast<int32_t>(wp[i]) - w_zp);
      double v = static_cast<double>(acc) * acc_scale;
      if (bias_f32) v += bias_f32[o];
      out[ni * out_features + o] = static_cast<float>(v);
    }
  }
}

}  // namespace kernels
}  // namespace edgenet
