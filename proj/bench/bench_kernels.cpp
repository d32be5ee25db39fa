#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <string>
#include <vector>

#include "edgenet/kernels.hpp"
#include "ref/ref_kernels.hpp"

// Wall-clock comparison of the OpenMP kernels against the serial reference
// loops, with a correctness spot check on every shape. Build with the default
// Release flags; pass a thread count as argv[1] (default: 1).

namespace {

std::vector<float> random_vec(size_t n, uint32_t seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  std::vector<float> v(n);
  for (float& x : v) x = dist(rng);
  return v;
}

double max_abs_diff(const std::vector<float>& a, const std::vector<float>& b) {
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(static_cast<double>(a[i]) - b[i]));
  return m;
}

template <typename F>
double time_best_of(int reps, F&& fn) {
  double best = 1e30;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
  }
  return best;
}

struct ConvCase {
  const char* name;
  int64_t c, h, w, cout, k;
};

}  // namespace

int main(int argc, char** argv) {
  const int threads = argc > 1 ? std::atoi(argv[1]) : 1;
  edgenet::set_num_threads(threads);
  std::printf("threads: %d\n", threads);
  std::printf("%-28s %12s %12s %8s %10s\n", "case", "serial_ms", "parallel_ms",
              "ratio", "max_diff");

  const ConvCase conv_cases[] = {
      {"conv 16x32x32 -> 32 k3", 16, 32, 32, 32, 3},
      {"conv 32x16x16 -> 64 k3", 32, 16, 16, 64, 3},
      {"conv 64x8x8 -> 128 k3", 64, 8, 8, 128, 3},
  };
  for (const ConvCase& cc : conv_cases) {
    const int64_t n = 1, s = 1, p = 1;
    const int64_t ho = refkern::conv_out_dim(cc.h, static_cast<int>(cc.k),
                                             static_cast<int>(s),
                                             static_cast<int>(p));
    const int64_t wo = refkern::conv_out_dim(cc.w, static_cast<int>(cc.k),
                                             static_cast<int>(s),
                                             static_cast<int>(p));
    const auto in = random_vec(n * cc.c * cc.h * cc.w, 11);
    const auto wt = random_vec(cc.cout * cc.c * cc.k * cc.k, 22);
    const auto bias = random_vec(cc.cout, 33);

    std::vector<float> ref_out, par_out(n * cc.cout * ho * wo);
    const double t_ref = time_best_of(5, [&]() {
      ref_out = refkern::conv2d(in, n, cc.c, cc.h, cc.w, wt, cc.cout, cc.k,
                                cc.k, bias, 1, 1, 1, 1);
    });
    const double t_par = time_best_of(5, [&]() {
      edgenet::kernels::conv2d_f32(in.data(), n, cc.c, cc.h, cc.w, wt.data(),
                                   cc.cout, cc.k, cc.k, bias.data(), 1, 1, 1,
                                   1, par_out.data(), ho, wo);
    });
    const double diff = max_abs_diff(ref_out, par_out);
    std::printf("%-28s %12.3f %12.3f %8.2f %10.2e\n", cc.name, t_ref * 1e3,
                t_par * 1e3, t_ref / t_par, diff);
    if (diff > 1e-4) {
      std::printf("FAIL: conv outputs disagree\n");
      return 1;
    }
  }

  {
    const int64_t n = 8, in_f = 4096, out_f = 1024;
    const auto in = random_vec(n * in_f, 44);
    const auto wt = random_vec(out_f * in_f, 55);
    const auto bias = random_vec(out_f, 66);
    std::vector<float> ref_out, par_out(n * out_f);
    const double t_ref = time_best_of(5, [&]() {
      ref_out = refkern::fully_connected(in, n, in_f, wt, out_f, bias);
    });
    const double t_par = time_best_of(5, [&]() {
      edgenet::kernels::fully_connected_f32(in.data(), n, in_f, wt.data(),
                                            out_f, bias.data(),
                                            par_out.data());
    });
    const double diff = max_abs_diff(ref_out, par_out);
    std::printf("%-28s %12.3f %12.3f %8.2f %10.2e\n", "fc 8x4096 -> 1024",
                t_ref * 1e3, t_par * 1e3, t_ref / t_par, diff);
    if (diff > 1e-4) {
      std::printf("FAIL: fc outputs disagree\n");
      return 1;
    }
  }

  {
    const int64_t n = 1, c = 64, h = 64, w = 64;
    const auto in = random_vec(n * c * h * w, 77);
    const auto wt = random_vec(c * 3 * 3, 88);
    const auto bias = random_vec(c, 99);
    const int64_t ho = refkern::conv_out_dim(h, 3, 1, 1);
    const int64_t wo = refkern::conv_out_dim(w, 3, 1, 1);
    std::vector<float> ref_out, par_out(n * c * ho * wo);
    const double t_ref = time_best_of(5, [&]() {
      ref_out = refkern::depthwise_conv2d(in, n, c, h, w, wt, 3, 3, bias, 1, 1,
                                          1, 1);
    });
    const double t_par = time_best_of(5, [&]() {
      edgenet::kernels::depthwise_conv2d_f32(in.data(), n, c, h, w, wt.data(),
                                             3, 3, bias.data(), 1, 1, 1, 1,
                                             par_out.data(), ho, wo);
    });
    const double diff = max_abs_diff(ref_out, par_out);
    std::printf("%-28s %12.3f %12.3f %8.2f %10.2e\n", "depthwise 64x64x64 k3",
                t_ref * 1e3, t_par * 1e3, t_ref / t_par, diff);
    if (diff > 1e-4) {
      std::printf("FAIL: depthwise outputs disagree\n");
      return 1;
    }
  }

  std::printf("all outputs match\n");
  return 0;
}
