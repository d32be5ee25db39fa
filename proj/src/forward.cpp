#include "edgenet/forward.hpp"

#include <algorithm>
#include <cmath>

#include "edgenet/kernels.hpp"
#include "edgenet/quant.hpp"

namespace edgenet {

std::vector<double> softmax_d(const std::vector<double>& logits) {
  if (logits.empty()) fail(ErrorCode::EmptyInput, "softmax of empty vector");
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : logits) {
    if (!std::isfinite(v)) fail(ErrorCode::NonFiniteInput, "softmax logit");
    mx = std::max(mx, v);
  }
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

std::vector<float> softmax(const std::vector<float>& logits) {
  std::vector<double> d(logits.begin(), logits.end());
  std::vector<double> p = softmax_d(d);
  std::vector<float> out(p.size());
  for (size_t i = 0; i < p.size(); ++i) out[i] = static_cast<float>(p[i]);
  return out;
}

namespace {

Tensor to_f32(const Tensor& t) {
  if (t.dtype == DType::F32) return t;
  return dequantize_tensor(t);
}

// u8 -> u8 rescale between two parameter sets; identity when they match.
Tensor requantize_u8(const Tensor& t, const QuantParams& to) {
  if (t.quant == to) return t;
  Tensor out;
  out.shape = t.shape;
  out.dtype = DType::U8;
  out.quant = to;
  out.u8.resize(t.u8.size());
  const double mult = static_cast<double>(t.quant.scale) / to.scale;
  for (size_t i = 0; i < t.u8.size(); ++i) {
    const double centered = static_cast<double>(t.u8[i]) - t.quant.zero_point;
    const double v = round_half_up(centered * mult) + to.zero_point;
    out.u8[i] = static_cast<uint8_t>(std::clamp(v, 0.0, 255.0));
  }
  return out;
}

Tensor to_u8(const Tensor& t, const QuantParams& qp) {
  if (t.dtype == DType::U8) return requantize_u8(t, qp);
  return quantize_tensor(t, qp);
}

Tensor run_f32_weighted(const LayerSpec& l, const Tensor& in,
                        const std::vector<int64_t>& out_shape) {
  const Tensor& w = *l.weight;
  const float* bias = l.bias ? l.bias->data_f32() : nullptr;
  Tensor out = Tensor::zeros_f32(out_shape);
  const LayerAttrs& a = l.attrs;
  switch (l.kind) {
    case LayerKind::Conv2D:
      kernels::conv2d_f32(in.data_f32(), in.shape[0], in.shape[1], in.shape[2],
                          in.shape[3], w.data_f32(), w.shape[0], w.shape[2],
                          w.shape[3], bias, a.stride_h, a.stride_w, a.pad_h,
                          a.pad_w, out.data_f32(), out_shape[2], out_shape[3]);
      break;
    case LayerKind::DepthwiseConv2D:
      kernels::depthwise_conv2d_f32(in.data_f32(), in.shape[0], in.shape[1],
                                    in.shape[2], in.shape[3], w.data_f32(),
                                    w.shape[2], w.shape[3], bias, a.stride_h,
                                    a.stride_w, a.pad_h, a.pad_w,
                                    out.data_f32(), out_shape[2],
                                    out_shape[3]);
      break;
    case LayerKind::FullyConnected:
      kernels::fully_connected_f32(in.data_f32(), in.shape[0], in.shape[1],
                                   w.data_f32(), w.shape[0], bias,
                                   out.data_f32());
      break;
    default:
      fail(ErrorCode::UnsupportedLayerKind, l.name);
  }
  return out;
}

Tensor run_ptq_weighted(const LayerSpec& l, const Tensor& raw_in,
                        const std::vector<int64_t>& out_shape) {
  const QuantizedLayerInfo& q = *l.quant;
  const Tensor in = to_u8(raw_in, q.input_qp);
  const Tensor& w = q.weight_q;
  const double s_in = q.input_qp.scale;
  const double s_w = w.quant.scale;
  const double mult = s_in * s_w / static_cast<double>(q.output_qp.scale);
  const int32_t* bias = q.bias_q.empty() ? nullptr : q.bias_q.data();

  Tensor out;
  out.shape = out_shape;
  out.dtype = DType::U8;
  out.quant = q.output_qp;
  out.u8.assign(static_cast<size_t>(shape_numel(out_shape)), 0);
  const LayerAttrs& a = l.attrs;
  switch (l.kind) {
    case LayerKind::Conv2D:
      kernels::conv2d_u8_requant(
          in.data_u8(), in.shape[0], in.shape[1], in.shape[2], in.shape[3],
          q.input_qp.zero_point, w.data_u8(), w.shape[0], w.shape[2],
          w.shape[3], w.quant.zero_point, bias, a.stride_h, a.stride_w,
          a.pad_h, a.pad_w, mult, q.output_qp.zero_point, out.data_u8(),
          out_shape[2], out_shape[3]);
      break;
    case LayerKind::DepthwiseConv2D:
      kernels::depthwise_conv2d_u8_requant(
          in.data_u8(), in.shape[0], in.shape[1], in.shape[2], in.shape[3],
          q.input_qp.zero_point, w.data_u8(), w.shape[2], w.shape[3],
          w.quant.zero_point, bias, a.stride_h, a.stride_w, a.pad_h, a.pad_w,
          mult, q.output_qp.zero_point, out.data_u8(), out_shape[2],
          out_shape[3]);
      break;
    case LayerKind::FullyConnected:
      kernels::fully_connected_u8_requant(
          in.data_u8(), in.shape[0], in.shape[1], q.input_qp.zero_point,
          w.data_u8(), w.shape[0], w.quant.zero_point, bias, mult,
          q.output_qp.zero_point, out.data_u8());
      break;
    default:
      fail(ErrorCode::UnsupportedLayerKind, l.name);
  }
  return out;
}

Tensor run_dq_weighted(const LayerSpec& l, const Tensor& raw_in,
                       const std::vector<int64_t>& out_shape) {
  const QuantizedLayerInfo& q = *l.quant;
  const Tensor in_f = to_f32(raw_in);
  // Activation range measured on this very input; scratch stays local.
  float mn = 0.0f, mx = 0.0f;
  if (!in_f.f32.empty()) {
    mn = mx = in_f.f32[0];
    for (float v : in_f.f32) {
      mn = std::min(mn, v);
      mx = std::max(mx, v);
    }
  }
  const QuantParams in_qp = compute_qparams(mn, mx);
  const Tensor in = quantize_tensor(in_f, in_qp);
  const Tensor& w = q.weight_q;
  const double acc_scale =
      static_cast<double>(in_qp.scale) * static_cast<double>(w.quant.scale);
  const float* bias = l.bias ? l.bias->data_f32() : nullptr;

  Tensor out = Tensor::zeros_f32(out_shape);
  const LayerAttrs& a = l.attrs;
  switch (l.kind) {
    case LayerKind::Conv2D:
      kernels::conv2d_u8_dequant(
          in.data_u8(), in.shape[0], in.shape[1], in.shape[2], in.shape[3],
          in_qp.zero_point, w.data_u8(), w.shape[0], w.shape[2], w.shape[3],
          w.quant.zero_point, bias, a.stride_h, a.stride_w, a.pad_h, a.pad_w,
          acc_scale, out.data_f32(), out_shape[2], out_shape[3]);
      break;
    case LayerKind::DepthwiseConv2D:
      kernels::depthwise_conv2d_u8_dequant(
          in.data_u8(), in.shape[0], in.shape[1], in.shape[2], in.shape[3],
          in_qp.zero_point, w.data_u8(), w.shape[2], w.shape[3],
          w.quant.zero_point, bias, a.stride_h, a.stride_w, a.pad_h, a.pad_w,
          acc_scale, out.data_f32(), out_shape[2], out_shape[3]);
      break;
    case LayerKind::FullyConnected:
      kernels::fully_connected_u8_dequant(
          in.data_u8(), in.shape[0], in.shape[1], in_qp.zero_point,
          w.data_u8(), w.shape[0], w.quant.zero_point, bias, acc_scale,
          out.data_f32());
      break;
    default:
      fail(ErrorCode::UnsupportedLayerKind, l.name);
  }
  return out;
}

// PTQ path for layers without weights: stay in the u8 domain.
Tensor run_ptq_elementwise(const LayerSpec& l, const Tensor& raw_in,
                           const std::vector<int64_t>& out_shape) {
  const QuantizedLayerInfo& q = *l.quant;
  const Tensor in = to_u8(raw_in, q.input_qp);
  const int zp = q.input_qp.zero_point;
  Tensor mid = in;
  const LayerAttrs& a = l.attrs;
  switch (l.kind) {
    case LayerKind::ReLU:
      for (uint8_t& v : mid.u8) v = std::max<int>(v, zp);
      break;
    case LayerKind::ReLU6: {
      const uint8_t q6 = quantize_value(6.0f, q.input_qp);
      for (uint8_t& v : mid.u8)
        v = static_cast<uint8_t>(std::clamp<int>(v, zp, q6));
      break;
    }
    case LayerKind::Flatten:
      mid.shape = out_shape;
      break;
    case LayerKind::MaxPool: {
      mid.shape = out_shape;
      mid.u8.assign(static_cast<size_t>(shape_numel(out_shape)), 0);
      const int64_t n = in.shape[0], c = in.shape[1], h = in.shape[2],
                    w = in.shape[3];
      const int64_t ho = out_shape[2], wo = out_shape[3];
      for (int64_t ni = 0; ni < n; ++ni)
        for (int64_t ci = 0; ci < c; ++ci)
          for (int64_t oy = 0; oy < ho; ++oy)
            for (int64_t ox = 0; ox < wo; ++ox) {
              int best = -1;
              for (int ky = 0; ky < a.kernel_h; ++ky)
                for (int kx = 0; kx < a.kernel_w; ++kx) {
                  const int64_t iy = oy * a.stride_h - a.pad_h + ky;
                  const int64_t ix = ox * a.stride_w - a.pad_w + kx;
                  if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
                  best = std::max<int>(best,
                                       in.u8[((ni * c + ci) * h + iy) * w + ix]);
                }
              mid.u8[((ni * c + ci) * ho + oy) * wo + ox] =
                  static_cast<uint8_t>(best < 0 ? zp : best);
            }
      break;
    }
    case LayerKind::AvgPool:
    case LayerKind::GlobalAvgPool: {
      const int64_t n = in.shape[0], c = in.shape[1], h = in.shape[2],
                    w = in.shape[3];
      const bool global = l.kind == LayerKind::GlobalAvgPool;
      const int kh = global ? static_cast<int>(h) : a.kernel_h;
      const int kw = global ? static_cast<int>(w) : a.kernel_w;
      const int sh = global ? 1 : a.stride_h;
      const int sw = global ? 1 : a.stride_w;
      const int ph = global ? 0 : a.pad_h;
      const int pw = global ? 0 : a.pad_w;
      const int64_t ho = out_shape[2], wo = out_shape[3];
      mid.shape = out_shape;
      mid.u8.assign(static_cast<size_t>(shape_numel(out_shape)), 0);
      for (int64_t ni = 0; ni < n; ++ni)
        for (int64_t ci = 0; ci < c; ++ci)
          for (int64_t oy = 0; oy < ho; ++oy)
            for (int64_t ox = 0; ox < wo; ++ox) {
              int64_t acc = 0;  // centered; padding contributes zeros
              for (int ky = 0; ky < kh; ++ky)
                for (int kx = 0; kx < kw; ++kx) {
                  const int64_t iy = oy * sh - ph + ky;
                  const int64_t ix = ox * sw - pw + kx;
                  if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
                  acc += in.u8[((ni * c + ci) * h + iy) * w + ix] - zp;
                }
              const double v =
                  round_half_up(static_cast<double>(acc) / (kh * kw)) + zp;
              mid.u8[((ni * c + ci) * ho + oy) * wo + ox] =
                  static_cast<uint8_t>(std::clamp(v, 0.0, 255.0));
            }
      break;
    }
    default:
      fail(ErrorCode::UnsupportedLayerKind,
           std::string("quantized ") + layer_kind_name(l.kind));
  }
  mid.quant = q.input_qp;
  return requantize_u8(mid, q.output_qp);
}

Tensor run_f32_layer(const LayerSpec& l, const std::vector<const Tensor*>& raw,
                     const std::vector<int64_t>& out_shape) {
  const LayerAttrs& a = l.attrs;
  switch (l.kind) {
    case LayerKind::Conv2D:
    case LayerKind::DepthwiseConv2D:
    case LayerKind::FullyConnected: {
      if (!l.weight)
        fail(ErrorCode::MissingWeight, "layer '" + l.name + "'");
      const Tensor in = to_f32(*raw[0]);
      return run_f32_weighted(l, in, out_shape);
    }
    case LayerKind::BatchNormFolded: {
      const Tensor in = to_f32(*raw[0]);
      if (!l.weight || !l.bias)
        fail(ErrorCode::MissingWeight, "layer '" + l.name + "'");
      Tensor out = in;
      const int64_t n = in.shape[0], c = in.shape[1],
                    hw = in.shape[2] * in.shape[3];
      for (int64_t ni = 0; ni < n; ++ni)
        for (int64_t ci = 0; ci < c; ++ci) {
          const float g = l.weight->f32[ci];
          const float b = l.bias->f32[ci];
          float* p = out.data_f32() + (ni * c + ci) * hw;
          for (int64_t i = 0; i < hw; ++i) p[i] = g * p[i] + b;
        }
      return out;
    }
    case LayerKind::ReLU: {
      Tensor out = to_f32(*raw[0]);
      for (float& v : out.f32) v = std::max(v, 0.0f);
      return out;
    }
    case LayerKind::ReLU6: {
      Tensor out = to_f32(*raw[0]);
      for (float& v : out.f32) v = std::clamp(v, 0.0f, 6.0f);
      return out;
    }
    case LayerKind::MaxPool: {
      const Tensor in = to_f32(*raw[0]);
      Tensor out = Tensor::zeros_f32(out_shape);
      kernels::maxpool2d_f32(in.data_f32(), in.shape[0], in.shape[1],
                             in.shape[2], in.shape[3], a.kernel_h, a.kernel_w,
                             a.stride_h, a.stride_w, a.pad_h, a.pad_w,
                             out.data_f32(), out_shape[2], out_shape[3]);
      return out;
    }
    case LayerKind::AvgPool: {
      const Tensor in = to_f32(*raw[0]);
      Tensor out = Tensor::zeros_f32(out_shape);
      kernels::avgpool2d_f32(in.data_f32(), in.shape[0], in.shape[1],
                             in.shape[2], in.shape[3], a.kernel_h, a.kernel_w,
                             a.stride_h, a.stride_w, a.pad_h, a.pad_w,
                             out.data_f32(), out_shape[2], out_shape[3]);
      return out;
    }
    case LayerKind::GlobalAvgPool: {
      const Tensor in = to_f32(*raw[0]);
      Tensor out = Tensor::zeros_f32(out_shape);
      kernels::global_avgpool_f32(in.data_f32(), in.shape[0], in.shape[1],
                                  in.shape[2], in.shape[3], out.data_f32());
      return out;
    }
    case LayerKind::Add: {
      const Tensor a0 = to_f32(*raw[0]);
      const Tensor a1 = to_f32(*raw[1]);
      if (a0.shape != a1.shape)
        fail(ErrorCode::ShapeMismatch, "Add '" + l.name + "'");
      Tensor out = a0;
      for (size_t i = 0; i < out.f32.size(); ++i) out.f32[i] += a1.f32[i];
      return out;
    }
    case LayerKind::Flatten: {
      Tensor out = to_f32(*raw[0]);
      out.shape = out_shape;
      return out;
    }
    case LayerKind::Softmax: {
      const Tensor in = to_f32(*raw[0]);
      Tensor out = Tensor::zeros_f32(out_shape);
      const int64_t n = in.shape[0], k = in.shape[1];
      for (int64_t ni = 0; ni < n; ++ni) {
        std::vector<double> row(k);
        for (int64_t i = 0; i < k; ++i) row[i] = in.f32[ni * k + i];
        const std::vector<double> p = softmax_d(row);
        for (int64_t i = 0; i < k; ++i)
          out.f32[ni * k + i] = static_cast<float>(p[i]);
      }
      return out;
    }
  }
  fail(ErrorCode::UnsupportedLayerKind, l.name);
}

Tensor run_layer(const LayerSpec& l, const std::vector<const Tensor*>& raw,
                 const std::vector<int64_t>& out_shape) {
  if (l.quant.has_value()) {
    if (layer_kind_has_weights(l.kind)) {
      return l.quant->mode == QuantMode::PTQ
                 ? run_ptq_weighted(l, *raw[0], out_shape)
                 : run_dq_weighted(l, *raw[0], out_shape);
    }
    return run_ptq_elementwise(l, *raw[0], out_shape);
  }
  return run_f32_layer(l, raw, out_shape);
}

std::map<std::string, Tensor> run_graph(const Graph& g, const Tensor& input,
                                        bool keep_all) {
  if (input.dtype != DType::F32)
    fail(ErrorCode::ShapeMismatch, "graph input must be f32");
  check_tensor(input, "graph input");
  if (input.shape != g.input.shape)
    fail(ErrorCode::ShapeMismatch,
         "input " + shape_to_string(input.shape) + " does not match spec " +
             shape_to_string(g.input.shape));
  const auto shapes = infer_shapes(g);

  std::map<std::string, Tensor> env;
  env[g.input.name] = input;
  std::map<std::string, Tensor> collected;
  if (keep_all) collected[g.input.name] = input;

  for (const LayerSpec& l : g.layers) {
    std::vector<const Tensor*> raw;
    for (const std::string& in : l.inputs) {
      auto it = env.find(in);
      if (it == env.end())
        fail(ErrorCode::InvalidGraph,
             "layer '" + l.name + "' consumes unknown tensor '" + in + "'");
      raw.push_back(&it->second);
    }
    Tensor out = run_layer(l, raw, shapes.at(l.output));
    if (keep_all) collected[l.output] = to_f32(out);
    env[l.output] = std::move(out);
  }
  env[g.output] = to_f32(env.at(g.output));
  if (keep_all) {
    collected[g.output] = env.at(g.output);
    return collected;
  }
  return env;
}

}  // namespace

Tensor forward(const Graph& g, const Tensor& input) {
  auto env = run_graph(g, input, false);
  return std::move(env.at(g.output));
}

std::map<std::string, Tensor> forward_collect(const Graph& g,
                                              const Tensor& input) {
  return run_graph(g, input, true);
}

}  // namespace edgenet
