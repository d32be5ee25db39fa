#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "edgenet/graph.hpp"

namespace edgenet {

struct PruneConfig {
  double prune_ratio = 0.0;        // fraction of filters to remove, [0, 1)
  int channel_granularity = 16;    // kept count is a multiple of this
  bool protect_residual_io = true; // skip channel sets crossing Add layers
};

struct PruneLayerEntry {
  std::string layer;
  int channels_before = 0;
  int channels_after = 0;
  std::vector<int> removed;  // filter indices, ascending
};

struct PruneReport {
  double prune_ratio = 0.0;
  int channel_granularity = 0;
  std::vector<PruneLayerEntry> layers;
  int64_t params_before = 0;
  int64_t params_after = 0;
  double compression_rate = 0.0;  // params_before / params_after

  std::string to_json() const;
  static PruneReport from_json(const std::string& text);
};

// Sum of |w| over each filter of a conv / each row of an FC weight.
std::vector<double> l1_filter_importance(const Tensor& weight);

// kept = clamp(cg * round_half_up((1 - pr) * channels / cg), cg, channels)
int rounded_keep_count(int channels, double prune_ratio,
                       int channel_granularity);

// Structured L1 filter pruning: removes whole filters of Conv2D /
// FullyConnected layers (kept count from rounded_keep_count, ties at equal
// importance keep the lower index) and the matching input channels of every
// downstream consumer. The final classifier and, by default, channel sets
// feeding Add layers are never pruned. prune_ratio 0 returns the graph
// unchanged.
struct PruneResult {
  Graph graph;
  PruneReport report;
};

PruneResult prune_structured(const Graph& g, const PruneConfig& cfg);

// Diagnostic global magnitude mask: zeroes round_half_up(pr * n) smallest-|w|
// weight elements across all Conv2D / DepthwiseConv2D / FullyConnected weight
// tensors (biases excluded), ties broken by lower global index. Shapes and
// parameter counts are unchanged. Returns the masked graph and the resulting
// exact-zero fraction of the considered weights.
struct UnstructuredResult {
  Graph graph;
  double sparsity = 0.0;
};

UnstructuredResult prune_unstructured_mask(const Graph& g, double prune_ratio);

}  // namespace edgenet
