#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "edgenet/graph.hpp"

namespace edgenet {

// Deterministic cost model, per single sample (batch dim excluded):
//   Conv2D            cout * cin * kh * kw * hout * wout
//   DepthwiseConv2D   c * kh * kw * hout * wout
//   FullyConnected    in_features * out_features
//   everything else   0 (elementwise / pooling / reshape convention)
struct CostReport {
  std::map<std::string, int64_t> macs_per_layer;  // keyed by layer name
  int64_t total_macs = 0;
  int64_t param_count = 0;       // weight + bias elements, any dtype
  int64_t serialized_bytes = 0;  // exact size save_model would produce
};

CostReport count_macs(const Graph& g);

int64_t layer_macs(const LayerSpec& layer,
                   const std::map<std::string, std::vector<int64_t>>& shapes);

}  // namespace edgenet
