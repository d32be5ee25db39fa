#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>
#include <string>
#include <vector>

#include "edgenet/graph.hpp"
#include "edgenet/tensor.hpp"

namespace testutil {

inline edgenet::Tensor random_tensor(std::vector<int64_t> shape, uint64_t seed,
                                     float lo = -1.0f, float hi = 1.0f) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> dist(lo, hi);
  edgenet::Tensor t = edgenet::Tensor::zeros_f32(std::move(shape));
  for (float& v : t.f32) v = dist(rng);
  return t;
}

inline std::vector<float> random_vec(size_t n, uint64_t seed, float lo = -1.0f,
                                     float hi = 1.0f) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> dist(lo, hi);
  std::vector<float> v(n);
  for (float& x : v) x = dist(rng);
  return v;
}

inline bool bits_equal(const std::vector<float>& a,
                       const std::vector<float>& b) {
  if (a.size() != b.size()) return false;
  return a.empty() ||
         std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

inline double rel_err(double got, double want) {
  return std::fabs(got - want) / std::max(std::fabs(want), 1e-12);
}

inline edgenet::LayerSpec make_layer(const std::string& name,
                                     edgenet::LayerKind kind,
                                     std::vector<std::string> inputs,
                                     const std::string& output) {
  edgenet::LayerSpec l;
  l.name = name;
  l.kind = kind;
  l.inputs = std::move(inputs);
  l.output = output;
  return l;
}

inline edgenet::LayerSpec conv_layer(const std::string& name,
                                     const std::string& in,
                                     const std::string& out, int cin, int cout,
                                     int k, int stride = 1, int pad = 0) {
  auto l = make_layer(name, edgenet::LayerKind::Conv2D, {in}, out);
  l.attrs.in_channels = cin;
  l.attrs.out_channels = cout;
  l.attrs.kernel_h = l.attrs.kernel_w = k;
  l.attrs.stride_h = l.attrs.stride_w = stride;
  l.attrs.pad_h = l.attrs.pad_w = pad;
  l.weight = edgenet::Tensor::zeros_f32({cout, cin, k, k});
  l.bias = edgenet::Tensor::zeros_f32({cout});
  return l;
}

inline edgenet::LayerSpec dw_layer(const std::string& name,
                                   const std::string& in,
                                   const std::string& out, int c, int k,
                                   int stride = 1, int pad = 0) {
  auto l = make_layer(name, edgenet::LayerKind::DepthwiseConv2D, {in}, out);
  l.attrs.in_channels = l.attrs.out_channels = c;
  l.attrs.kernel_h = l.attrs.kernel_w = k;
  l.attrs.stride_h = l.attrs.stride_w = stride;
  l.attrs.pad_h = l.attrs.pad_w = pad;
  l.weight = edgenet::Tensor::zeros_f32({c, 1, k, k});
  l.bias = edgenet::Tensor::zeros_f32({c});
  return l;
}

inline edgenet::LayerSpec fc_layer(const std::string& name,
                                   const std::string& in,
                                   const std::string& out, int in_features,
                                   int out_features) {
  auto l = make_layer(name, edgenet::LayerKind::FullyConnected, {in}, out);
  l.attrs.in_channels = in_features;
  l.attrs.out_channels = out_features;
  l.weight = edgenet::Tensor::zeros_f32({out_features, in_features});
  l.bias = edgenet::Tensor::zeros_f32({out_features});
  return l;
}

inline edgenet::LayerSpec pool_layer(const std::string& name,
                                     edgenet::LayerKind kind,
                                     const std::string& in,
                                     const std::string& out, int k, int stride,
                                     int pad = 0) {
  auto l = make_layer(name, kind, {in}, out);
  l.attrs.kernel_h = l.attrs.kernel_w = k;
  l.attrs.stride_h = l.attrs.stride_w = stride;
  l.attrs.pad_h = l.attrs.pad_w = pad;
  return l;
}

inline void fill_weights(edgenet::Graph& g, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> wd(-0.5f, 0.5f);
  std::uniform_real_distribution<float> bd(-0.1f, 0.1f);
  for (edgenet::LayerSpec& l : g.layers) {
    if (!edgenet::layer_kind_has_weights(l.kind)) continue;
    if (l.kind == edgenet::LayerKind::BatchNormFolded) {
      std::uniform_real_distribution<float> gd(0.8f, 1.2f);
      for (float& w : l.weight->f32) w = gd(rng);
      for (float& b : l.bias->f32) b = bd(rng);
      continue;
    }
    for (float& w : l.weight->f32) w = wd(rng);
    if (l.bias.has_value())
      for (float& b : l.bias->f32) b = bd(rng);
  }
}

// conv(3x3, pad 1) -> relu -> gap -> flatten -> fc classifier.
inline edgenet::Graph tiny_conv_net(int cin, int h, int w, int cout,
                                    int classes, uint64_t seed) {
  edgenet::Graph g;
  g.name = "tiny";
  g.input.name = "input";
  g.input.shape = {1, cin, h, w};
  g.num_classes = classes;
  g.output = "logits";
  g.layers.push_back(conv_layer("conv1", "input", "conv1_out", cin, cout, 3,
                                1, 1));
  g.layers.push_back(
      make_layer("relu1", edgenet::LayerKind::ReLU, {"conv1_out"}, "relu1_out"));
  g.layers.push_back(make_layer("gap", edgenet::LayerKind::GlobalAvgPool,
                                {"relu1_out"}, "gap_out"));
  g.layers.push_back(
      make_layer("flatten", edgenet::LayerKind::Flatten, {"gap_out"}, "flat_out"));
  g.layers.push_back(fc_layer("fc", "flat_out", "logits", cout, classes));
  fill_weights(g, seed);
  return g;
}

}  // namespace testutil
