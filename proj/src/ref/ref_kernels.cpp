#include "ref/ref_kernels.hpp"

#include <limits>

namespace refkern {

int64_t conv_out_dim(int64_t in, int k, int s, int p) {
  return (in + 2 * p - k) / s + 1;
}

static float at(const std::vector<float>& v, int64_t idx) { return v[idx]; }

std::vector<float> conv2d(const std::vector<float>& in, int64_t n, int64_t c,
                          int64_t h, int64_t w, const std::vector<float>& wt,
                          int64_t cout, int64_t kh, int64_t kw,
                          const std::vector<float>& bias, int sh, int sw,
                          int ph, int pw) {
  const int64_t ho = conv_out_dim(h, (int)kh, sh, ph);
  const int64_t wo = conv_out_dim(w, (int)kw, sw, pw);
  std::vector<float> out(n * cout * ho * wo, 0.0f);
  for (int64_t ni = 0; ni < n; ++ni)
    for (int64_t co = 0; co < cout; ++co)
      for (int64_t oy = 0; oy < ho; ++oy)
        for (int64_t ox = 0; ox < wo; ++ox) {
          float acc = bias.empty() ? 0.0f : bias[co];
          for (int64_t ci = 0; ci < c; ++ci)
            for (int64_t ky = 0; ky < kh; ++ky)
              for (int64_t kx = 0; kx < kw; ++kx) {
                const int64_t iy = oy * sh - ph + ky;
                const int64_t ix = ox * sw - pw + kx;
                if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
                acc += at(in, ((ni * c + ci) * h + iy) * w + ix) *
                       at(wt, ((co * c + ci) * kh + ky) * kw + kx);
              }
          out[((ni * cout + co) * ho + oy) * wo + ox] = acc;
        }
  return out;
}

std::vector<float> depthwise_conv2d(const std::vector<float>& in, int64_t n,
                                    int64_t c, int64_t h, int64_t w,
                                    const std::vector<float>& wt, int64_t kh,
                                    int64_t kw, const std::vector<float>& bias,
                                    int sh, int sw, int ph, int pw) {
  const int64_t ho = conv_out_dim(h, (int)kh, sh, ph);
  const int64_t wo = conv_out_dim(w, (int)kw, sw, pw);
  std::vector<float> out(n * c * ho * wo, 0.0f);
  for (int64_t ni = 0; ni < n; ++ni)
    for (int64_t ci = 0; ci < c; ++ci)
      for (int64_t oy = 0; oy < ho; ++oy)
        for (int64_t ox = 0; ox < wo; ++ox) {
          float acc = bias.empty() ? 0.0f : bias[ci];
          for (int64_t ky = 0; ky < kh; ++ky)
            for (int64_t kx = 0; kx < kw; ++kx) {
              const int64_t iy = oy * sh - ph + ky;
              const int64_t ix = ox * sw - pw + kx;
              if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
              acc += at(in, ((ni * c + ci) * h + iy) * w + ix) *
                     at(wt, (ci * kh + ky) * kw + kx);
            }
          out[((ni * c + ci) * ho + oy) * wo + ox] = acc;
        }
  return out;
}

std::vector<float> fully_connected(const std::vector<float>& in, int64_t n,
                                   int64_t in_features,
                                   const std::vector<float>& wt,
                                   int64_t out_features,
                                   const std::vector<float>& bias) {
  std::vector<float> out(n * out_features, 0.0f);
  for (int64_t ni = 0; ni < n; ++ni)
    for (int64_t o = 0; o < out_features; ++o) {
      float acc = bias.empty() ? 0.0f : bias[o];
      for (int64_t i = 0; i < in_features; ++i)
        acc += in[ni * in_features + i] * wt[o * in_features + i];
      out[ni * out_features + o] = acc;
    }
  return out;
}

std::vector<float> maxpool2d(const std::vector<float>& in, int64_t n,
                             int64_t c, int64_t h, int64_t w, int kh, int kw,
                             int sh, int sw, int ph, int pw) {
  const int64_t ho = conv_out_dim(h, kh, sh, ph);
  const int64_t wo = conv_out_dim(w, kw, sw, pw);
  std::vector<float> out(n * c * ho * wo, 0.0f);
  for (int64_t ni = 0; ni < n; ++ni)
    for (int64_t ci = 0; ci < c; ++ci)
      for (int64_t oy = 0; oy < ho; ++oy)
        for (int64_t ox = 0; ox < wo; ++ox) {
          float best = -std::numeric_limits<float>::infinity();
          for (int ky = 0; ky < kh; ++ky)
            for (int kx = 0; kx < kw; ++kx) {
              const int64_t iy = oy * sh - ph + ky;
              const int64_t ix = ox * sw - pw + kx;
              if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
              const float v = at(in, ((ni * c + ci) * h + iy) * w + ix);
              if (v > best) best = v;
            }
          out[((ni * c + ci) * ho + oy) * wo + ox] = best;
        }
  return out;
}

std::vector<float> avgpool2d(const std::vector<float>& in, int64_t n,
                             int64_t c, int64_t h, int64_t w, int kh, int kw,
                             int sh, int sw, int ph, int pw) {
  const int64_t ho = conv_out_dim(h, kh, sh, ph);
  const int64_t wo = conv_out_dim(w, kw, sw, pw);
  std::vector<float> out(n * c * ho * wo, 0.0f);
  for (int64_t ni = 0; ni < n; ++ni)
    for (int64_t ci = 0; ci < c; ++ci)
      for (int64_t oy = 0; oy < ho; ++oy)
        for (int64_t ox = 0; ox < wo; ++ox) {
          float acc = 0.0f;
          for (int ky = 0; ky < kh; ++ky)
            for (int kx = 0; kx < kw; ++kx) {
              const int64_t iy = oy * sh - ph + ky;
              const int64_t ix = ox * sw - pw + kx;
              if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
              acc += at(in, ((ni * c + ci) * h + iy) * w + ix);
            }
          out[((ni * c + ci) * ho + oy) * wo + ox] =
              acc / static_cast<float>(kh * kw);
        }
  return out;
}

std::vector<float> global_avgpool(const std::vector<float>& in, int64_t n,
                                  int64_t c, int64_t h, int64_t w) {
  std::vector<float> out(n * c, 0.0f);
  for (int64_t ni = 0; ni < n; ++ni)
    for (int64_t ci = 0; ci < c; ++ci) {
      double acc = 0.0;
      for (int64_t i = 0; i < h * w; ++i)
        acc += in[(ni * c + ci) * h * w + i];
      out[ni * c + ci] = static_cast<float>(acc / double(h * w));
    }
  return out;
}

}  // namespace refkern
