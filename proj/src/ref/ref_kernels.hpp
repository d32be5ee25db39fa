#pragma once

#include <cstdint>
#include <vector>

// Serial brute-force reference kernels. Plain quadruple loops, no OpenMP, no
// shared code with the production kernels. Tests use them as the oracle; the
// benchmark compares them against the parallel implementations.
namespace refkern {

std::vector<float> conv2d(const std::vector<float>& in, int64_t n, int64_t c,
                          int64_t h, int64_t w, const std::vector<float>& wt,
                          int64_t cout, int64_t kh, int64_t kw,
                          const std::vector<float>& bias, int sh, int sw,
                          int ph, int pw);

std::vector<float> depthwise_conv2d(const std::vector<float>& in, int64_t n,
                                    int64_t c, int64_t h, int64_t w,
                                    const std::vector<float>& wt, int64_t kh,
                                    int64_t kw, const std::vector<float>& bias,
                                    int sh, int sw, int ph, int pw);

std::vector<float> fully_connected(const std::vector<float>& in, int64_t n,
                                   int64_t in_features,
                                   const std::vector<float>& wt,
                                   int64_t out_features,
                                   const std::vector<float>& bias);

std::vector<float> maxpool2d(const std::vector<float>& in, int64_t n,
                             int64_t c, int64_t h, int64_t w, int kh, int kw,
                             int sh, int sw, int ph, int pw);

std::vector<float> avgpool2d(const std::vector<float>& in, int64_t n,
                             int64_t c, int64_t h, int64_t w, int kh, int kw,
                             int sh, int sw, int ph, int pw);

std::vector<float> global_avgpool(const std::vector<float>& in, int64_t n,
                                  int64_t c, int64_t h, int64_t w);

int64_t conv_out_dim(int64_t in, int k, int s, int p);

}  // namespace refkern
