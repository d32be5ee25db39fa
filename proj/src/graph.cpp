#include "edgenet/graph.hpp"

#include <algorithm>
#include <set>

namespace edgenet {

const char* layer_kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::Conv2D: return "Conv2D";
    case LayerKind::DepthwiseConv2D: return "DepthwiseConv2D";
    case LayerKind::FullyConnected: return "FullyConnected";
    case LayerKind::BatchNormFolded: return "BatchNormFolded";
    case LayerKind::ReLU: return "ReLU";
    case LayerKind::ReLU6: return "ReLU6";
    case LayerKind::MaxPool: return "MaxPool";
    case LayerKind::AvgPool: return "AvgPool";
    case LayerKind::GlobalAvgPool: return "GlobalAvgPool";
    case LayerKind::Add: return "Add";
    case LayerKind::Flatten: return "Flatten";
    case LayerKind::Softmax: return "Softmax";
  }
  return "?";
}

LayerKind layer_kind_from_name(const std::string& s) {
  static const std::pair<const char*, LayerKind> table[] = {
      {"Conv2D", LayerKind::Conv2D},
      {"DepthwiseConv2D", LayerKind::DepthwiseConv2D},
      {"FullyConnected", LayerKind::FullyConnected},
      {"BatchNormFolded", LayerKind::BatchNormFolded},
      {"ReLU", LayerKind::ReLU},
      {"ReLU6", LayerKind::ReLU6},
      {"MaxPool", LayerKind::MaxPool},
      {"AvgPool", LayerKind::AvgPool},
      {"GlobalAvgPool", LayerKind::GlobalAvgPool},
      {"Add", LayerKind::Add},
      {"Flatten", LayerKind::Flatten},
      {"Softmax", LayerKind::Softmax},
  };
  for (const auto& [name, kind] : table)
    if (s == name) return kind;
  fail(ErrorCode::UnsupportedLayerKind, "unknown layer kind '" + s + "'");
}

bool layer_kind_has_weights(LayerKind k) {
  return k == LayerKind::Conv2D || k == LayerKind::DepthwiseConv2D ||
         k == LayerKind::FullyConnected || k == LayerKind::BatchNormFolded;
}

const char* quant_mode_name(QuantMode m) {
  return m == QuantMode::PTQ ? "ptq" : "dq";
}

QuantMode quant_mode_from_name(const std::string& s) {
  if (s == "ptq") return QuantMode::PTQ;
  if (s == "dq") return QuantMode::DQ;
  fail(ErrorCode::ParseError, "unknown quant mode '" + s + "'");
}

std::vector<int64_t> conv_output_shape(const std::vector<int64_t>& in,
                                       const LayerAttrs& a, int out_channels) {
  if (in.size() != 4)
    fail(ErrorCode::ShapeMismatch,
         "conv expects NCHW input, got " + shape_to_string(in));
  const int64_t h = in[2], w = in[3];
  const int64_t hout = (h + 2 * a.pad_h - a.kernel_h) / a.stride_h + 1;
  const int64_t wout = (w + 2 * a.pad_w - a.kernel_w) / a.stride_w + 1;
  if (hout <= 0 || wout <= 0)
    fail(ErrorCode::ShapeMismatch, "kernel larger than padded input");
  return {in[0], out_channels, hout, wout};
}

std::vector<int64_t> pool_output_shape(const std::vector<int64_t>& in,
                                       const LayerAttrs& a) {
  return conv_output_shape(in, a, static_cast<int>(in[1]));
}

namespace {

const Tensor& need_weight(const LayerSpec& l) {
  if (l.quant.has_value()) return l.quant->weight_q;
  if (!l.weight.has_value())
    fail(ErrorCode::MissingWeight, "layer '" + l.name + "' has no weight");
  return *l.weight;
}

std::vector<int64_t> layer_output_shape(
    const LayerSpec& l, const std::vector<std::vector<int64_t>>& ins) {
  auto expect_inputs = [&](size_t n) {
    if (ins.size() != n)
      fail(ErrorCode::InvalidGraph, "layer '" + l.name + "' expects " +
                                        std::to_string(n) + " inputs, has " +
                                        std::to_string(ins.size()));
  };
  switch (l.kind) {
    case LayerKind::Conv2D: {
      expect_inputs(1);
      const Tensor& w = need_weight(l);
      if (w.shape.size() != 4)
        fail(ErrorCode::ShapeMismatch, "conv weight must be (Cout,Cin,Kh,Kw)");
      if (ins[0].size() != 4 || ins[0][1] != w.shape[1])
        fail(ErrorCode::ShapeMismatch,
             "layer '" + l.name + "': input " + shape_to_string(ins[0]) +
                 " does not match weight " + shape_to_string(w.shape));
      return conv_output_shape(ins[0], l.attrs, static_cast<int>(w.shape[0]));
    }
    case LayerKind::DepthwiseConv2D: {
      expect_inputs(1);
      const Tensor& w = need_weight(l);
      if (w.shape.size() != 4 || w.shape[1] != 1)
        fail(ErrorCode::ShapeMismatch, "depthwise weight must be (C,1,Kh,Kw)");
      if (ins[0].size() != 4 || ins[0][1] != w.shape[0])
        fail(ErrorCode::ShapeMismatch,
             "layer '" + l.name + "': channel count mismatch");
      return conv_output_shape(ins[0], l.attrs, static_cast<int>(w.shape[0]));
    }
    case LayerKind::FullyConnected: {
      expect_inputs(1);
      const Tensor& w = need_weight(l);
      if (w.shape.size() != 2)
        fail(ErrorCode::ShapeMismatch, "fc weight must be (out,in)");
      if (ins[0].size() != 2 || ins[0][1] != w.shape[1])
        fail(ErrorCode::ShapeMismatch,
             "layer '" + l.name + "': input " + shape_to_string(ins[0]) +
                 " does not match weight " + shape_to_string(w.shape));
      return {ins[0][0], w.shape[0]};
    }
    case LayerKind::BatchNormFolded: {
      expect_inputs(1);
      const Tensor& w = need_weight(l);
      if (ins[0].size() != 4 || w.shape.size() != 1 || w.shape[0] != ins[0][1])
        fail(ErrorCode::ShapeMismatch,
             "layer '" + l.name + "': per-channel params must match channels");
      return ins[0];
    }
    case LayerKind::ReLU:
    case LayerKind::ReLU6:
      expect_inputs(1);
      return ins[0];
    case LayerKind::MaxPool:
    case LayerKind::AvgPool:
      expect_inputs(1);
      return pool_output_shape(ins[0], l.attrs);
    case LayerKind::GlobalAvgPool:
      expect_inputs(1);
      if (ins[0].size() != 4)
        fail(ErrorCode::ShapeMismatch, "global pool expects NCHW");
      return {ins[0][0], ins[0][1], 1, 1};
    case LayerKind::Add:
      expect_inputs(2);
      if (ins[0] != ins[1])
        fail(ErrorCode::ShapeMismatch,
             "layer '" + l.name + "': Add inputs " + shape_to_string(ins[0]) +
                 " vs " + shape_to_string(ins[1]));
      return ins[0];
    case LayerKind::Flatten: {
      expect_inputs(1);
      int64_t features = 1;
      for (size_t i = 1; i < ins[0].size(); ++i) features *= ins[0][i];
      return {ins[0][0], features};
    }
    case LayerKind::Softmax:
      expect_inputs(1);
      if (ins[0].size() != 2)
        fail(ErrorCode::ShapeMismatch, "softmax expects (N, classes)");
      return ins[0];
  }
  fail(ErrorCode::UnsupportedLayerKind, "layer '" + l.name + "'");
}

}  // namespace

std::map<std::string, std::vector<int64_t>> infer_shapes(const Graph& g) {
  std::map<std::string, std::vector<int64_t>> shapes;
  if (g.input.shape.empty())
    fail(ErrorCode::InvalidGraph, "graph input shape is empty");
  shapes[g.input.name] = g.input.shape;
  for (const LayerSpec& l : g.layers) {
    std::vector<std::vector<int64_t>> ins;
    for (const std::string& in : l.inputs) {
      auto it = shapes.find(in);
      if (it == shapes.end())
        fail(ErrorCode::InvalidGraph, "layer '" + l.name +
                                          "' consumes unknown tensor '" + in +
                                          "' (layers must be topological)");
      ins.push_back(it->second);
    }
    if (shapes.count(l.output))
      fail(ErrorCode::InvalidGraph,
           "tensor '" + l.output + "' produced twice");
    shapes[l.output] = layer_output_shape(l, ins);
  }
  return shapes;
}

// num_classes 0 marks a non-classifier subgraph (a cascade segment): the
// terminal-width rule is skipped for those.
void validate(const Graph& g) {
  if (g.layers.empty()) fail(ErrorCode::InvalidGraph, "graph has no layers");
  if (g.num_classes < 0)
    fail(ErrorCode::InvalidGraph, "num_classes must not be negative");
  std::set<std::string> names;
  for (const LayerSpec& l : g.layers)
    if (!names.insert(l.name).second)
      fail(ErrorCode::InvalidGraph, "duplicate layer name '" + l.name + "'");

  auto shapes = infer_shapes(g);

  // Weight sanity beyond what inference touches.
  for (const LayerSpec& l : g.layers) {
    if (layer_kind_has_weights(l.kind)) {
      const Tensor& w = need_weight(l);
      check_tensor(w, "weight of '" + l.name + "'");
      const Tensor* b = nullptr;
      if (l.quant.has_value() && l.quant->mode == QuantMode::PTQ) {
        // bias lives in quant->bias_q
      } else if (l.bias.has_value()) {
        b = &*l.bias;
      }
      if (b) {
        check_tensor(*b, "bias of '" + l.name + "'");
        if (b->shape.size() != 1 || b->shape[0] != w.shape[0])
          fail(ErrorCode::ShapeMismatch,
               "bias of '" + l.name + "' must have one entry per filter");
      }
    } else if (l.weight.has_value() || l.bias.has_value()) {
      fail(ErrorCode::InvalidGraph,
           "layer '" + l.name + "' of kind " + layer_kind_name(l.kind) +
               " cannot carry weights");
    }
  }

  // Exactly one unconsumed tensor, and it is the declared output.
  std::map<std::string, int> consumers;
  consumers[g.input.name] = 0;
  for (const LayerSpec& l : g.layers) consumers[l.output] = 0;
  for (const LayerSpec& l : g.layers)
    for (const std::string& in : l.inputs) consumers[in]++;
  if (!consumers.count(g.output))
    fail(ErrorCode::InvalidGraph,
         "declared output '" + g.output + "' is not produced");
  for (const auto& [tensor, uses] : consumers) {
    if (uses == 0 && tensor != g.output && tensor != g.input.name)
      fail(ErrorCode::InvalidGraph, "tensor '" + tensor + "' is never used");
    if (uses > 0 && tensor == g.output)
      fail(ErrorCode::InvalidGraph,
           "terminal tensor '" + tensor + "' is consumed inside the graph");
  }

  if (g.num_classes > 0) {
    const auto& out_shape = shapes.at(g.output);
    if (out_shape.size() != 2 || out_shape[1] != g.num_classes)
      fail(ErrorCode::InvalidGraph,
           "terminal tensor must be (N, num_classes), got " +
               shape_to_string(out_shape));
  }
}

const LayerSpec* find_layer(const Graph& g, const std::string& name) {
  for (const LayerSpec& l : g.layers)
    if (l.name == name) return &l;
  return nullptr;
}

int layer_index_by_output(const Graph& g, const std::string& tensor) {
  for (size_t i = 0; i < g.layers.size(); ++i)
    if (g.layers[i].output == tensor) return static_cast<int>(i);
  return -1;
}

}  // namespace edgenet
