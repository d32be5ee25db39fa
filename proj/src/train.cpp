#include "edgenet/train.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "edgenet/forward.hpp"

namespace edgenet {

namespace {

// Head math runs entirely in double so finite-difference checks of the
// gradient are meaningful; parameters round-trip through f32 storage.
struct DTens {
  std::vector<int64_t> shape;
  std::vector<double> v;
};

DTens from_tensor(const Tensor& t) {
  if (t.dtype != DType::F32)
    fail(ErrorCode::UnsupportedLayerKind, "head features must be f32");
  DTens d;
  d.shape = t.shape;
  d.v.assign(t.f32.begin(), t.f32.end());
  return d;
}

bool trainable_kind(LayerKind k) {
  switch (k) {
    case LayerKind::Conv2D:
    case LayerKind::ReLU:
    case LayerKind::ReLU6:
    case LayerKind::GlobalAvgPool:
    case LayerKind::Flatten:
    case LayerKind::FullyConnected:
      return true;
    default:
      return false;
  }
}

void check_trainable(const Graph& head) {
  for (const LayerSpec& l : head.layers) {
    if (!trainable_kind(l.kind))
      fail(ErrorCode::UnsupportedLayerKind,
           "no backward pass for layer '" + l.name + "' (" +
               layer_kind_name(l.kind) + ")");
    if (l.quant.has_value())
      fail(ErrorCode::UnsupportedLayerKind,
           "cannot train quantized layer '" + l.name + "'");
    if (layer_kind_has_weights(l.kind) &&
        (!l.weight.has_value() || l.weight->dtype != DType::F32))
      fail(ErrorCode::MissingWeight, "layer '" + l.name + "' needs f32 weights");
  }
}

struct ParamLayout {
  // Offset of each layer's weight / bias block in the flat vector, or SIZE_MAX
  // when the layer has none. Order: layer by layer, weight then bias.
  std::vector<size_t> weight_off, bias_off;
  size_t total = 0;
};

ParamLayout build_layout(const Graph& head) {
  ParamLayout lay;
  for (const LayerSpec& l : head.layers) {
    size_t w = SIZE_MAX, b = SIZE_MAX;
    if (layer_kind_has_weights(l.kind)) {
      w = lay.total;
      lay.total += l.weight->f32.size();
      if (l.bias.has_value()) {
        b = lay.total;
        lay.total += l.bias->f32.size();
      }
    }
    lay.weight_off.push_back(w);
    lay.bias_off.push_back(b);
  }
  return lay;
}

DTens conv2d_fwd(const DTens& x, const LayerSpec& l) {
  const std::vector<int64_t> os = conv_output_shape(
      x.shape, l.attrs, static_cast<int>(l.weight->shape[0]));
  const int64_t N = x.shape[0], Ci = x.shape[1], H = x.shape[2],
                W = x.shape[3];
  const int64_t Co = os[1], Ho = os[2], Wo = os[3];
  const int64_t Kh = l.weight->shape[2], Kw = l.weight->shape[3];
  DTens y{os, std::vector<double>(N * Co * Ho * Wo, 0.0)};
  const auto& w = l.weight->f32;
  for (int64_t n = 0; n < N; ++n)
    for (int64_t co = 0; co < Co; ++co)
      for (int64_t oy = 0; oy < Ho; ++oy)
        for (int64_t ox = 0; ox < Wo; ++ox) {
          double acc = l.bias ? static_cast<double>(l.bias->f32[co]) : 0.0;
          for (int64_t ci = 0; ci < Ci; ++ci)
            for (int64_t ky = 0; ky < Kh; ++ky)
              for (int64_t kx = 0; kx < Kw; ++kx) {
                const int64_t iy = oy * l.attrs.stride_h - l.attrs.pad_h + ky;
                const int64_t ix = ox * l.attrs.stride_w - l.attrs.pad_w + kx;
                if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
                acc += static_cast<double>(
                           w[((co * Ci + ci) * Kh + ky) * Kw + kx]) *
                       x.v[((n * Ci + ci) * H + iy) * W + ix];
              }
          y.v[((n * Co + co) * Ho + oy) * Wo + ox] = acc;
        }
  return y;
}

void conv2d_bwd(const DTens& x, const DTens& gy, const LayerSpec& l,
                DTens& gx, double* gw, double* gb) {
  const int64_t N = x.shape[0], Ci = x.shape[1], H = x.shape[2],
                W = x.shape[3];
  const int64_t Co = gy.shape[1], Ho = gy.shape[2], Wo = gy.shape[3];
  const int64_t Kh = l.weight->shape[2], Kw = l.weight->shape[3];
  const auto& w = l.weight->f32;
  for (int64_t n = 0; n < N; ++n)
    for (int64_t co = 0; co < Co; ++co)
      for (int64_t oy = 0; oy < Ho; ++oy)
        for (int64_t ox = 0; ox < Wo; ++ox) {
          const double g = gy.v[((n * Co + co) * Ho + oy) * Wo + ox];
          if (gb) gb[co] += g;
          for (int64_t ci = 0; ci < Ci; ++ci)
            for (int64_t ky = 0; ky < Kh; ++ky)
              for (int64_t kx = 0; kx < Kw; ++kx) {
                const int64_t iy = oy * l.attrs.stride_h - l.attrs.pad_h + ky;
                const int64_t ix = ox * l.attrs.stride_w - l.attrs.pad_w + kx;
                if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
                const int64_t wi = ((co * Ci + ci) * Kh + ky) * Kw + kx;
                const int64_t xi = ((n * Ci + ci) * H + iy) * W + ix;
                gw[wi] += g * x.v[xi];
                gx.v[xi] += g * static_cast<double>(w[wi]);
              }
        }
}

DTens fc_fwd(const DTens& x, const LayerSpec& l) {
  const int64_t N = x.shape[0], I = x.shape[1];
  const int64_t O = l.weight->shape[0];
  DTens y{{N, O}, std::vector<double>(N * O, 0.0)};
  const auto& w = l.weight->f32;
  for (int64_t n = 0; n < N; ++n)
    for (int64_t o = 0; o < O; ++o) {
      double acc = l.bias ? static_cast<double>(l.bias->f32[o]) : 0.0;
      for (int64_t i = 0; i < I; ++i)
        acc += static_cast<double>(w[o * I + i]) * x.v[n * I + i];
      y.v[n * O + o] = acc;
    }
  return y;
}

void fc_bwd(const DTens& x, const DTens& gy, const LayerSpec& l, DTens& gx,
            double* gw, double* gb) {
  const int64_t N = x.shape[0], I = x.shape[1], O = gy.shape[1];
  const auto& w = l.weight->f32;
  for (int64_t n = 0; n < N; ++n)
    for (int64_t o = 0; o < O; ++o) {
      const double g = gy.v[n * O + o];
      if (gb) gb[o] += g;
      for (int64_t i = 0; i < I; ++i) {
        gw[o * I + i] += g * x.v[n * I + i];
        gx.v[n * I + i] += g * static_cast<double>(w[o * I + i]);
      }
    }
}

DTens run_head_layer(const LayerSpec& l, const DTens& x) {
  switch (l.kind) {
    case LayerKind::Conv2D:
      return conv2d_fwd(x, l);
    case LayerKind::FullyConnected:
      return fc_fwd(x, l);
    case LayerKind::ReLU: {
      DTens y = x;
      for (double& v : y.v) v = std::max(v, 0.0);
      return y;
    }
    case LayerKind::ReLU6: {
      DTens y = x;
      for (double& v : y.v) v = std::clamp(v, 0.0, 6.0);
      return y;
    }
    case LayerKind::GlobalAvgPool: {
      const int64_t N = x.shape[0], C = x.shape[1], H = x.shape[2],
                    W = x.shape[3];
      DTens y{{N, C, 1, 1}, std::vector<double>(N * C, 0.0)};
      for (int64_t n = 0; n < N; ++n)
        for (int64_t c = 0; c < C; ++c) {
          double acc = 0.0;
          for (int64_t i = 0; i < H * W; ++i) acc += x.v[(n * C + c) * H * W + i];
          y.v[n * C + c] = acc / static_cast<double>(H * W);
        }
      return y;
    }
    case LayerKind::Flatten: {
      int64_t feat = 1;
      for (size_t i = 1; i < x.shape.size(); ++i) feat *= x.shape[i];
      DTens y{{x.shape[0], feat}, x.v};
      return y;
    }
    default:
      fail(ErrorCode::UnsupportedLayerKind, layer_kind_name(l.kind));
  }
}

void backward_head_layer(const LayerSpec& l, const DTens& x, const DTens& gy,
                         DTens& gx, double* gw, double* gb) {
  switch (l.kind) {
    case LayerKind::Conv2D:
      conv2d_bwd(x, gy, l, gx, gw, gb);
      return;
    case LayerKind::FullyConnected:
      fc_bwd(x, gy, l, gx, gw, gb);
      return;
    case LayerKind::ReLU:
      for (size_t i = 0; i < x.v.size(); ++i)
        if (x.v[i] > 0.0) gx.v[i] += gy.v[i];
      return;
    case LayerKind::ReLU6:
      for (size_t i = 0; i < x.v.size(); ++i)
        if (x.v[i] > 0.0 && x.v[i] < 6.0) gx.v[i] += gy.v[i];
      return;
    case LayerKind::GlobalAvgPool: {
      const int64_t N = x.shape[0], C = x.shape[1];
      const int64_t HW = x.shape[2] * x.shape[3];
      for (int64_t n = 0; n < N; ++n)
        for (int64_t c = 0; c < C; ++c) {
          const double g = gy.v[n * C + c] / static_cast<double>(HW);
          for (int64_t i = 0; i < HW; ++i) gx.v[(n * C + c) * HW + i] += g;
        }
      return;
    }
    case LayerKind::Flatten:
      for (size_t i = 0; i < gy.v.size(); ++i) gx.v[i] += gy.v[i];
      return;
    default:
      fail(ErrorCode::UnsupportedLayerKind, layer_kind_name(l.kind));
  }
}

std::vector<double> head_logits(const Graph& head, const Tensor& feature,
                                std::map<std::string, DTens>* keep) {
  std::map<std::string, DTens> env;
  env[head.input.name] = from_tensor(feature);
  for (const LayerSpec& l : head.layers)
    env[l.output] = run_head_layer(l, env.at(l.inputs[0]));
  std::vector<double> logits = env.at(head.output).v;
  if (keep) *keep = std::move(env);
  return logits;
}

double sample_loss(const std::vector<double>& probs, int label) {
  return -std::log(std::max(probs[label], 1e-300));
}

double head_mean_loss(const Graph& head, const std::vector<Tensor>& features,
                      const std::vector<int>& labels) {
  double total = 0.0;
  for (size_t i = 0; i < features.size(); ++i) {
    const std::vector<double> p =
        softmax_d(head_logits(head, features[i], nullptr));
    total += sample_loss(p, labels[i]);
  }
  return total / static_cast<double>(features.size());
}

std::vector<double> train_one_head(Graph& head,
                                   const std::vector<Tensor>& features,
                                   const std::vector<int>& labels,
                                   const TrainConfig& cfg, uint64_t stream) {
  if (cfg.epochs < 0 || cfg.batch_size <= 0 || cfg.learning_rate <= 0.0)
    fail(ErrorCode::ParseError, "train config: epochs >= 0, batch_size >= 1, "
                                "learning_rate > 0 required");
  std::seed_seq seq{cfg.seed, stream};
  std::mt19937_64 rng(seq);
  std::vector<size_t> order(features.size());
  std::iota(order.begin(), order.end(), size_t{0});

  std::vector<double> losses;
  for (int e = 0; e < cfg.epochs; ++e) {
    std::shuffle(order.begin(), order.end(), rng);
    for (size_t b0 = 0; b0 < order.size();
         b0 += static_cast<size_t>(cfg.batch_size)) {
      const size_t b1 =
          std::min(order.size(), b0 + static_cast<size_t>(cfg.batch_size));
      std::vector<Tensor> bx;
      std::vector<int> by;
      for (size_t i = b0; i < b1; ++i) {
        bx.push_back(features[order[i]]);
        by.push_back(labels[order[i]]);
      }
      LossGrad lg = head_loss_and_grad(head, bx, by);
      for (double& gval : lg.grad) gval *= -cfg.learning_rate;
      head_add_to_parameters(head, lg.grad);
    }
    losses.push_back(head_mean_loss(head, features, labels));
  }
  return losses;
}

}  // namespace

LossGrad head_loss_and_grad(const Graph& head,
                            const std::vector<Tensor>& features,
                            const std::vector<int>& labels) {
  if (features.empty())
    fail(ErrorCode::EmptyTrainingSet, "no samples for loss");
  if (features.size() != labels.size())
    fail(ErrorCode::LengthMismatch, "features vs labels");
  check_trainable(head);
  const ParamLayout lay = build_layout(head);

  LossGrad out;
  out.grad.assign(lay.total, 0.0);
  const double inv_n = 1.0 / static_cast<double>(features.size());

  for (size_t si = 0; si < features.size(); ++si) {
    std::map<std::string, DTens> env;
    const std::vector<double> logits = head_logits(head, features[si], &env);
    const int classes = static_cast<int>(logits.size());
    if (labels[si] < 0 || labels[si] >= classes)
      fail(ErrorCode::LabelOutOfRange, std::to_string(labels[si]));
    const std::vector<double> p = softmax_d(logits);
    out.loss += sample_loss(p, labels[si]) * inv_n;

    std::map<std::string, DTens> genv;
    DTens dlogits = env.at(head.output);
    for (int c = 0; c < classes; ++c)
      dlogits.v[c] = (p[c] - (c == labels[si] ? 1.0 : 0.0)) * inv_n;
    genv[head.output] = std::move(dlogits);

    for (size_t li = head.layers.size(); li-- > 0;) {
      const LayerSpec& l = head.layers[li];
      const DTens& x = env.at(l.inputs[0]);
      const DTens& gy = genv.at(l.output);
      DTens& gx = genv[l.inputs[0]];
      if (gx.v.empty()) {
        gx.shape = x.shape;
        gx.v.assign(x.v.size(), 0.0);
      }
      double* gw =
          lay.weight_off[li] == SIZE_MAX ? nullptr : &out.grad[lay.weight_off[li]];
      double* gb =
          lay.bias_off[li] == SIZE_MAX ? nullptr : &out.grad[lay.bias_off[li]];
      backward_head_layer(l, x, gy, gx, gw, gb);
    }
  }
  return out;
}

std::vector<double> head_parameters(const Graph& head) {
  check_trainable(head);
  std::vector<double> out;
  for (const LayerSpec& l : head.layers) {
    if (!layer_kind_has_weights(l.kind)) continue;
    for (float w : l.weight->f32) out.push_back(static_cast<double>(w));
    if (l.bias.has_value())
      for (float b : l.bias->f32) out.push_back(static_cast<double>(b));
  }
  return out;
}

void head_add_to_parameters(Graph& head, const std::vector<double>& delta) {
  check_trainable(head);
  size_t i = 0;
  for (LayerSpec& l : head.layers) {
    if (!layer_kind_has_weights(l.kind)) continue;
    if (i + l.weight->f32.size() > delta.size())
      fail(ErrorCode::LengthMismatch, "parameter delta too short");
    for (float& w : l.weight->f32)
      w = static_cast<float>(static_cast<double>(w) + delta[i++]);
    if (l.bias.has_value()) {
      if (i + l.bias->f32.size() > delta.size())
        fail(ErrorCode::LengthMismatch, "parameter delta too short");
      for (float& b : l.bias->f32)
        b = static_cast<float>(static_cast<double>(b) + delta[i++]);
    }
  }
  if (i != delta.size())
    fail(ErrorCode::LengthMismatch, "parameter delta too long");
}

TrainReport train_exit_heads(CascadeModel& m, const std::vector<Tensor>& inputs,
                             const std::vector<int>& labels,
                             const TrainConfig& cfg) {
  if (inputs.empty()) fail(ErrorCode::EmptyTrainingSet, "no training samples");
  if (inputs.size() != labels.size())
    fail(ErrorCode::LengthMismatch, "inputs vs labels");
  for (int l : labels)
    if (l < 0 || l >= m.num_classes)
      fail(ErrorCode::LabelOutOfRange, std::to_string(l));
  if (m.segments.size() != m.heads.size() + 1)
    fail(ErrorCode::InvalidGraph, "cascade needs heads + 1 segments");

  // One frozen-backbone pass collects the attach-point activations; training
  // never touches the segments again.
  std::vector<std::vector<Tensor>> feats(m.heads.size());
  for (const Tensor& x : inputs) {
    Tensor cur = x;
    for (size_t k = 0; k < m.heads.size(); ++k) {
      cur = forward(m.segments[k], cur);
      feats[k].push_back(cur);
    }
  }

  TrainReport rep;
  rep.loss_per_epoch.resize(m.heads.size());
  for (size_t k = 0; k < m.heads.size(); ++k) {
    rep.loss_per_epoch[k] =
        train_one_head(m.heads[k].head, feats[k], labels, cfg, k);
    m.heads[k].trained = true;
  }
  return rep;
}

Graph fit_final_classifier(const Graph& g, const std::vector<Tensor>& inputs,
                           const std::vector<int>& labels,
                           const TrainConfig& cfg) {
  validate(g);
  if (g.num_classes <= 0)
    fail(ErrorCode::InvalidGraph, "refit needs a classifier graph");
  if (inputs.empty()) fail(ErrorCode::EmptyTrainingSet, "no training samples");
  if (inputs.size() != labels.size())
    fail(ErrorCode::LengthMismatch, "inputs vs labels");
  for (int l : labels)
    if (l < 0 || l >= g.num_classes)
      fail(ErrorCode::LabelOutOfRange, std::to_string(l));

  int fc = -1;
  for (int i = static_cast<int>(g.layers.size()) - 1; i >= 0; --i)
    if (g.layers[i].kind == LayerKind::FullyConnected) {
      fc = i;
      break;
    }
  if (fc < 0)
    fail(ErrorCode::UnsupportedLayerKind, "no FullyConnected layer to refit");
  const LayerSpec& fcl = g.layers[fc];
  if (fcl.quant.has_value() || fcl.weight->dtype != DType::F32)
    fail(ErrorCode::UnsupportedLayerKind,
         "cannot refit quantized classifier '" + fcl.name + "'");
  for (size_t i = static_cast<size_t>(fc) + 1; i < g.layers.size(); ++i)
    if (g.layers[i].kind != LayerKind::Softmax &&
        g.layers[i].kind != LayerKind::Flatten)
      fail(ErrorCode::UnsupportedLayerKind,
           "layer '" + g.layers[i].name + "' after the final classifier");

  const auto shapes = infer_shapes(g);
  std::vector<Tensor> feats;
  feats.reserve(inputs.size());
  for (const Tensor& x : inputs) {
    if (fcl.inputs[0] == g.input.name) {
      feats.push_back(x);
    } else {
      auto env = forward_collect(g, x);
      feats.push_back(env.at(fcl.inputs[0]));
    }
  }

  Graph head;
  head.name = g.name + "_refit";
  head.num_classes = g.num_classes;
  head.input.name = fcl.inputs[0];
  head.input.shape = shapes.at(fcl.inputs[0]);
  head.output = fcl.output;
  head.layers.push_back(fcl);
  validate(head);
  train_one_head(head, feats, labels, cfg, 0x66697466696eULL);

  Graph out = g;
  out.layers[fc].weight = head.layers[0].weight;
  out.layers[fc].bias = head.layers[0].bias;
  return out;
}

}  // namespace edgenet
