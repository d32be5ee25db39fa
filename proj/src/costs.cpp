#include "edgenet/costs.hpp"

#include "edgenet/serialize.hpp"

namespace edgenet {

int64_t layer_macs(const LayerSpec& layer,
                   const std::map<std::string, std::vector<int64_t>>& shapes) {
  const auto& out = shapes.at(layer.output);
  switch (layer.kind) {
    case LayerKind::Conv2D: {
      const Tensor& w =
          layer.quant.has_value() ? layer.quant->weight_q : *layer.weight;
      // cout * cin * kh * kw * hout * wout
      return w.shape[0] * w.shape[1] * w.shape[2] * w.shape[3] * out[2] *
             out[3];
    }
    case LayerKind::DepthwiseConv2D: {
      const Tensor& w =
          layer.quant.has_value() ? layer.quant->weight_q : *layer.weight;
      return w.shape[0] * w.shape[2] * w.shape[3] * out[2] * out[3];
    }
    case LayerKind::FullyConnected: {
      const Tensor& w =
          layer.quant.has_value() ? layer.quant->weight_q : *layer.weight;
      return w.shape[0] * w.shape[1];
    }
    default:
      return 0;  // elementwise, pooling and reshape cost nothing here
  }
}

CostReport count_macs(const Graph& g) {
  CostReport r;
  const auto shapes = infer_shapes(g);
  for (const LayerSpec& l : g.layers) {
    const int64_t m = layer_macs(l, shapes);
    r.macs_per_layer[l.name] = m;
    r.total_macs += m;
    if (l.quant.has_value()) {
      r.param_count += l.quant->weight_q.numel();
      r.param_count += static_cast<int64_t>(l.quant->bias_q.size());
    } else if (l.weight.has_value()) {
      r.param_count += l.weight->numel();
    }
    if (l.bias.has_value()) r.param_count += l.bias->numel();
  }
  r.serialized_bytes = static_cast<int64_t>(serialize_model(g).size());
  return r;
}

}  // namespace edgenet
