#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "edgenet/tensor.hpp"

namespace edgenet {

enum class LayerKind {
  Conv2D,
  DepthwiseConv2D,
  FullyConnected,
  BatchNormFolded,
  ReLU,
  ReLU6,
  MaxPool,
  AvgPool,
  GlobalAvgPool,
  Add,
  Flatten,
  Softmax,
};

const char* layer_kind_name(LayerKind k);
LayerKind layer_kind_from_name(const std::string& s);
bool layer_kind_has_weights(LayerKind k);

struct LayerAttrs {
  int in_channels = 0;
  int out_channels = 0;
  int kernel_h = 0;
  int kernel_w = 0;
  int stride_h = 1;
  int stride_w = 1;
  int pad_h = 0;
  int pad_w = 0;
};

enum class QuantMode { PTQ, DQ };

const char* quant_mode_name(QuantMode m);
QuantMode quant_mode_from_name(const std::string& s);

// Attached to a layer rewritten for integer execution. For weighted kinds the
// f32 weight is replaced by weight_q; PTQ additionally fixes activation params
// from calibration and pre-scales the bias into i32 by s_in * s_w. DQ keeps
// the f32 bias and derives activation ranges per inference.
struct QuantizedLayerInfo {
  QuantMode mode = QuantMode::PTQ;
  Tensor weight_q;                // dtype U8, per-tensor QuantParams
  std::vector<int32_t> bias_q;    // PTQ only; empty otherwise
  QuantParams input_qp;           // PTQ only
  QuantParams output_qp;          // PTQ only
};

struct LayerSpec {
  std::string name;
  LayerKind kind = LayerKind::ReLU;
  LayerAttrs attrs;
  std::vector<std::string> inputs;  // tensor names
  std::string output;               // tensor name, unique in the graph
  std::optional<Tensor> weight;     // conv/fc kernel, BatchNormFolded scale
  std::optional<Tensor> bias;       // conv/fc bias, BatchNormFolded shift
  std::optional<QuantizedLayerInfo> quant;
};

struct InputSpec {
  std::string name = "input";
  std::vector<int64_t> shape;  // includes leading batch dim
};

// Layers are stored in topological order; validate() enforces it.
struct Graph {
  std::string name;
  InputSpec input;
  std::vector<LayerSpec> layers;
  std::string output;  // terminal tensor name
  int num_classes = 0;
};

// Shape inference for every tensor in the graph (input included).
// Throws ShapeMismatch / InvalidGraph / MissingWeight on inconsistency.
std::map<std::string, std::vector<int64_t>> infer_shapes(const Graph& g);

// Full structural validation: unique names, topological input references,
// weight presence and shapes, single terminal equal to g.output, final
// classifier width equal to num_classes.
void validate(const Graph& g);

const LayerSpec* find_layer(const Graph& g, const std::string& name);
int layer_index_by_output(const Graph& g, const std::string& tensor);

std::vector<int64_t> conv_output_shape(const std::vector<int64_t>& in,
                                       const LayerAttrs& a, int out_channels);
std::vector<int64_t> pool_output_shape(const std::vector<int64_t>& in,
                                       const LayerAttrs& a);

}  // namespace edgenet
