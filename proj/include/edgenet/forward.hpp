#pragma once

#include <map>
#include <string>
#include <vector>

#include "edgenet/graph.hpp"

namespace edgenet {

// Runs the graph on one input batch and returns the terminal tensor as f32.
// Deterministic: identical inputs give bit-identical outputs on one build,
// independent of the thread count. Allocates its scratch per call, so a
// Graph may be shared across threads.
Tensor forward(const Graph& g, const Tensor& input);

// Same, but returns every produced activation (f32 view) keyed by tensor
// name, input included. Used by calibration and diagnostics.
std::map<std::string, Tensor> forward_collect(const Graph& g,
                                              const Tensor& input);

// Numerically stabilized softmax over the last dimension of a 1-D or 2-D
// tensor; internal math in double. Errors: EmptyInput, NonFiniteInput.
std::vector<float> softmax(const std::vector<float>& logits);
std::vector<double> softmax_d(const std::vector<double>& logits);

}  // namespace edgenet
