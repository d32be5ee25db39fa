#include "edgenet/quant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "edgenet/forward.hpp"
#include "edgenet/kernels.hpp"

namespace edgenet {

using nlohmann::json;

const std::set<LayerKind>& quantizable_kinds() {
  static const std::set<LayerKind> kinds = {
      LayerKind::Conv2D,       LayerKind::DepthwiseConv2D,
      LayerKind::FullyConnected, LayerKind::ReLU,
      LayerKind::ReLU6,        LayerKind::MaxPool,
      LayerKind::AvgPool,      LayerKind::GlobalAvgPool,
      LayerKind::Flatten,
  };
  return kinds;
}

std::set<LayerKind> quant_preset(const std::string& name) {
  if (name == "efficientnet-style")
    return {LayerKind::Conv2D, LayerKind::DepthwiseConv2D};
  if (name == "shufflenet-style")
    return {LayerKind::Conv2D, LayerKind::DepthwiseConv2D,
            LayerKind::FullyConnected};
  if (name == "full-graph") return quantizable_kinds();
  fail(ErrorCode::ParseError, "unknown quantization preset '" + name + "'");
}

QuantParams compute_qparams(float min_v, float max_v) {
  if (!std::isfinite(min_v) || !std::isfinite(max_v))
    fail(ErrorCode::NonFiniteRange, "calibration range is not finite");
  if (min_v > max_v)
    fail(ErrorCode::NonFiniteRange, "min exceeds max");
  // Widen so 0 is representable and maps exactly onto the lattice.
  const double lo = std::min(0.0, static_cast<double>(min_v));
  const double hi = std::max(0.0, static_cast<double>(max_v));
  QuantParams qp;
  if (lo == 0.0 && hi == 0.0) {
    qp.scale = 1.0f;
    qp.zero_point = 0;
    return qp;
  }
  qp.scale = static_cast<float>((hi - lo) / 255.0);
  // If the float cast rounded the scale down, the top of the range would land
  // past lattice point 255 and clamping would break the |x - dq(q(x))| <=
  // scale/2 round-trip bound. Nudge up one ulp instead.
  if (static_cast<double>(qp.scale) * 255.0 < hi - lo)
    qp.scale = std::nextafter(qp.scale, std::numeric_limits<float>::max());
  const double zp = round_half_up(-lo / static_cast<double>(qp.scale));
  qp.zero_point = static_cast<int>(std::clamp(zp, 0.0, 255.0));
  return qp;
}

uint8_t quantize_value(float x, const QuantParams& qp) {
  const double q =
      round_half_up(static_cast<double>(x) / static_cast<double>(qp.scale)) +
      qp.zero_point;
  return static_cast<uint8_t>(std::clamp(q, 0.0, 255.0));
}

float dequantize_value(uint8_t q, const QuantParams& qp) {
  return static_cast<float>(static_cast<double>(qp.scale) *
                            (static_cast<int>(q) - qp.zero_point));
}

Tensor quantize_tensor(const Tensor& t, const QuantParams& qp) {
  if (t.dtype != DType::F32)
    fail(ErrorCode::ShapeMismatch, "quantize_tensor expects f32");
  Tensor out;
  out.shape = t.shape;
  out.dtype = DType::U8;
  out.quant = qp;
  out.u8.resize(t.f32.size());
  for (size_t i = 0; i < t.f32.size(); ++i)
    out.u8[i] = quantize_value(t.f32[i], qp);
  return out;
}

Tensor dequantize_tensor(const Tensor& t) {
  if (t.dtype != DType::U8)
    fail(ErrorCode::ShapeMismatch, "dequantize_tensor expects u8");
  Tensor out;
  out.shape = t.shape;
  out.dtype = DType::F32;
  out.f32.resize(t.u8.size());
  for (size_t i = 0; i < t.u8.size(); ++i)
    out.f32[i] = dequantize_value(t.u8[i], t.quant);
  return out;
}

namespace {

void weight_min_max(const Tensor& w, float& mn, float& mx) {
  mn = mx = w.f32.empty() ? 0.0f : w.f32[0];
  for (float v : w.f32) {
    if (!std::isfinite(v)) fail(ErrorCode::NonFiniteRange, "weight value");
    mn = std::min(mn, v);
    mx = std::max(mx, v);
  }
}

json qp_to_json(const QuantParams& qp) {
  return json{{"scale", static_cast<double>(qp.scale)},
              {"zero_point", qp.zero_point}};
}

QuantParams qp_from_json(const json& j) {
  QuantParams qp;
  qp.scale = static_cast<float>(j.at("scale").get<double>());
  qp.zero_point = j.at("zero_point").get<int>();
  return qp;
}

std::vector<std::string> kinds_to_names(const std::set<LayerKind>& kinds) {
  std::vector<std::string> v;
  for (LayerKind k : kinds) v.push_back(layer_kind_name(k));
  std::sort(v.begin(), v.end());
  return v;
}

std::set<LayerKind> kinds_from_names(const std::vector<std::string>& names) {
  std::set<LayerKind> kinds;
  for (const auto& n : names) kinds.insert(layer_kind_from_name(n));
  return kinds;
}

}  // namespace

std::string QuantPlan::to_json() const {
  json j;
  j["format_version"] = 1;
  j["mode"] = quant_mode_name(mode);
  j["covered_kinds"] = kinds_to_names(covered_kinds);
  json w = json::object();
  for (const auto& [layer, qp] : weight_qp) w[layer] = qp_to_json(qp);
  j["weight_qp"] = w;
  json c = json::object();
  for (const auto& [tensor, r] : calibration)
    c[tensor] = json{{"min", static_cast<double>(r.min_v)},
                     {"max", static_cast<double>(r.max_v)}};
  j["calibration"] = c;
  return j.dump(2) + "\n";
}

QuantPlan QuantPlan::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("quant plan: ") + e.what());
  }
  QuantPlan plan;
  try {
    plan.mode = quant_mode_from_name(j.at("mode").get<std::string>());
    plan.covered_kinds =
        kinds_from_names(j.at("covered_kinds").get<std::vector<std::string>>());
    for (const auto& [layer, qp] : j.at("weight_qp").items())
      plan.weight_qp[layer] = qp_from_json(qp);
    for (const auto& [tensor, r] : j.at("calibration").items())
      plan.calibration[tensor] = {
          static_cast<float>(r.at("min").get<double>()),
          static_cast<float>(r.at("max").get<double>())};
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("quant plan: ") + e.what());
  }
  return plan;
}

QuantPlan calibrate(const Graph& g, const std::vector<Tensor>& calib_set,
                    const std::set<LayerKind>& covered_kinds) {
  if (calib_set.empty())
    fail(ErrorCode::EmptyCalibrationSet, "calibration needs inputs");
  validate(g);
  QuantPlan plan;
  plan.mode = QuantMode::PTQ;
  plan.covered_kinds = covered_kinds;

  for (const Tensor& sample : calib_set) {
    auto acts = forward_collect(g, sample);
    for (const auto& [name, t] : acts) {
      auto it = plan.calibration.find(name);
      if (it == plan.calibration.end()) {
        CalibrationRange r;
        r.min_v = r.max_v = t.f32.empty() ? 0.0f : t.f32[0];
        it = plan.calibration.emplace(name, r).first;
      }
      for (float v : t.f32) {
        if (!std::isfinite(v))
          fail(ErrorCode::NonFiniteRange, "activation '" + name + "'");
        it->second.min_v = std::min(it->second.min_v, v);
        it->second.max_v = std::max(it->second.max_v, v);
      }
    }
  }

  for (const LayerSpec& l : g.layers) {
    if (!covered_kinds.count(l.kind) || !layer_kind_has_weights(l.kind))
      continue;
    if (l.kind == LayerKind::BatchNormFolded) continue;
    float mn, mx;
    weight_min_max(*l.weight, mn, mx);
    plan.weight_qp[l.name] = compute_qparams(mn, mx);
  }
  return plan;
}

namespace {

bool layer_coverable(const LayerSpec& l, const std::set<LayerKind>& kinds) {
  if (!kinds.count(l.kind)) return false;
  if (!quantizable_kinds().count(l.kind)) return false;
  if (l.kind == LayerKind::BatchNormFolded) return false;
  return true;
}

}  // namespace

Graph apply_ptq(const Graph& g, const QuantPlan& plan) {
  validate(g);
  if (plan.covered_kinds.empty()) return g;
  Graph out = g;
  for (LayerSpec& l : out.layers) {
    if (!layer_coverable(l, plan.covered_kinds)) continue;
    if (l.quant.has_value())
      fail(ErrorCode::GraphRewriteConflict,
           "layer '" + l.name + "' is already quantized");
    auto in_it = plan.calibration.find(l.inputs[0]);
    auto out_it = plan.calibration.find(l.output);
    if (in_it == plan.calibration.end() || out_it == plan.calibration.end())
      fail(ErrorCode::PlanCoverageError,
           "no calibration for layer '" + l.name + "'");
    QuantizedLayerInfo q;
    q.mode = QuantMode::PTQ;
    q.input_qp = compute_qparams(in_it->second.min_v, in_it->second.max_v);
    q.output_qp = compute_qparams(out_it->second.min_v, out_it->second.max_v);
    if (layer_kind_has_weights(l.kind)) {
      auto wq_it = plan.weight_qp.find(l.name);
      if (wq_it == plan.weight_qp.end())
        fail(ErrorCode::PlanCoverageError,
             "no weight params for layer '" + l.name + "'");
      q.weight_q = quantize_tensor(*l.weight, wq_it->second);
      if (l.bias.has_value()) {
        // Pre-scale into the accumulator domain s_in * s_w.
        const double s = static_cast<double>(q.input_qp.scale) *
                         static_cast<double>(wq_it->second.scale);
        q.bias_q.resize(l.bias->f32.size());
        for (size_t i = 0; i < l.bias->f32.size(); ++i) {
          const double b = round_half_up(l.bias->f32[i] / s);
          q.bias_q[i] = static_cast<int32_t>(b);
        }
      }
      l.weight.reset();
      l.bias.reset();
    }
    l.quant = std::move(q);
  }
  return out;
}

Graph apply_dq(const Graph& g, const std::set<LayerKind>& covered_kinds) {
  validate(g);
  Graph out = g;
  for (LayerSpec& l : out.layers) {
    // Dynamic quantization touches weighted kinds only.
    if (!layer_kind_has_weights(l.kind) || l.kind == LayerKind::BatchNormFolded)
      continue;
    if (!covered_kinds.count(l.kind)) continue;
    if (l.quant.has_value())
      fail(ErrorCode::GraphRewriteConflict,
           "layer '" + l.name + "' is already quantized");
    QuantizedLayerInfo q;
    q.mode = QuantMode::DQ;
    float mn, mx;
    weight_min_max(*l.weight, mn, mx);
    q.weight_q = quantize_tensor(*l.weight, compute_qparams(mn, mx));
    l.weight.reset();  // bias stays f32; its scale is unknown until runtime
    l.quant = std::move(q);
  }
  return out;
}

}  // namespace edgenet
