#pragma once

#include <cmath>
#include <cstdint>

#include "edgenet/tensor.hpp"

namespace edgenet {

// Number of OpenMP threads used by the kernels below. Default 1. Results are
// bit-identical for any value: parallelism is over independent output
// elements and each accumulation keeps a fixed serial order.
void set_num_threads(int n);
int num_threads();

namespace kernels {

void conv2d_f32(const float* in, int64_t n, int64_t c, int64_t h, int64_t w,
                const float* weight, int64_t cout, int64_t kh, int64_t kw,
                const float* bias, int sh, int sw, int ph, int pw, float* out,
                int64_t hout, int64_t wout);

void depthwise_conv2d_f32(const float* in, int64_t n, int64_t c, int64_t h,
                          int64_t w, const float* weight, int64_t kh,
                          int64_t kw, const float* bias, int sh, int sw,
                          int ph, int pw, float* out, int64_t hout,
                          int64_t wout);

void fully_connected_f32(const float* in, int64_t n, int64_t in_features,
                         const float* weight, int64_t out_features,
                         const float* bias, float* out);

void maxpool2d_f32(const float* in, int64_t n, int64_t c, int64_t h, int64_t w,
                   int kh, int kw, int sh, int sw, int ph, int pw, float* out,
                   int64_t hout, int64_t wout);

// Divisor is the full kernel area; zero padding contributes zeros.
void avgpool2d_f32(const float* in, int64_t n, int64_t c, int64_t h, int64_t w,
                   int kh, int kw, int sh, int sw, int ph, int pw, float* out,
                   int64_t hout, int64_t wout);

void global_avgpool_f32(const float* in, int64_t n, int64_t c, int64_t h,
                        int64_t w, float* out);

// Integer kernels: accumulate sum((q_in - zp_in) * (q_w - zp_w)) in i32.
// requant path (PTQ): out_q = clamp(round_half_up(acc_plus_bias * mult) + zp_out).
// dequant path (DQ): out_f32 = acc * (s_in * s_w) + bias_f32.

void conv2d_u8_requant(const uint8_t* in, int64_t n, int64_t c, int64_t h,
                       int64_t w, int in_zp, const uint8_t* weight,
                       int64_t cout, int64_t kh, int64_t kw, int w_zp,
                       const int32_t* bias, int sh, int sw, int ph, int pw,
                       double mult, int out_zp, uint8_t* out, int64_t hout,
                       int64_t wout);

void conv2d_u8_dequant(const uint8_t* in, int64_t n, int64_t c, int64_t h,
                       int64_t w, int in_zp, const uint8_t* weight,
                       int64_t cout, int64_t kh, int64_t kw, int w_zp,
                       const float* bias_f32, int sh, int sw, int ph, int pw,
                       double acc_scale, float* out, int64_t hout,
                       int64_t wout);

void depthwise_conv2d_u8_requant(const uint8_t* in, int64_t n, int64_t c,
                                 int64_t h, int64_t w, int in_zp,
                                 const uint8_t* weight, int64_t kh, int64_t kw,
                                 int w_zp, const int32_t* bias, int sh, int sw,
                                 int ph, int pw, double mult, int out_zp,
                                 uint8_t* out, int64_t hout, int64_t wout);

void depthwise_conv2d_u8_dequant(const uint8_t* in, int64_t n, int64_t c,
                                 int64_t h, int64_t w, int in_zp,
                                 const uint8_t* weight, int64_t kh, int64_t kw,
                                 int w_zp, const float* bias_f32, int sh,
                                 int sw, int ph, int pw, double acc_scale,
                                 float* out, int64_t hout, int64_t wout);

void fully_connected_u8_requant(const uint8_t* in, int64_t n,
                                int64_t in_features, int in_zp,
                                const uint8_t* weight, int64_t out_features,
                                int w_zp, const int32_t* bias, double mult,
                                int out_zp, uint8_t* out);

void fully_connected_u8_dequant(const uint8_t* in, int64_t n,
                                int64_t in_features, int in_zp,
                                const uint8_t* weight, int64_t out_features,
                                int w_zp, const float* bias_f32,
                                double acc_scale, float* out);

}  // namespace kernels

// round_half_up on doubles: floor(x + 0.5). Shared by quantization and
// requantization so every rounding site agrees.
inline double round_half_up(double x) { return std::floor(x + 0.5); }

}  // namespace edgenet
