#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "edgenet/graph.hpp"

namespace edgenet {

// Layer kinds the integer executor can run. Conv / depthwise / FC use i32
// accumulators; ReLU / ReLU6 / MaxPool / Flatten pass u8 through; AvgPool /
// GlobalAvgPool round their mean half-up. Add, BatchNormFolded and Softmax
// always stay f32.
const std::set<LayerKind>& quantizable_kinds();

// Named coverage presets:
//   efficientnet-style  {Conv2D, DepthwiseConv2D}
//   shufflenet-style    {Conv2D, DepthwiseConv2D, FullyConnected}
//   full-graph          every quantizable kind
std::set<LayerKind> quant_preset(const std::string& name);

// Asymmetric per-tensor uint8 parameters. The range is widened to include 0,
// scale = (max' - min') / 255, zero_point = round_half_up(-min' / scale)
// clamped to [0, 255]. A degenerate all-zero range maps to scale 1, zp 0.
// Errors: NonFiniteRange, and min > max is rejected.
QuantParams compute_qparams(float min_v, float max_v);

uint8_t quantize_value(float x, const QuantParams& qp);
float dequantize_value(uint8_t q, const QuantParams& qp);

Tensor quantize_tensor(const Tensor& t, const QuantParams& qp);
Tensor dequantize_tensor(const Tensor& t);

struct CalibrationRange {
  float min_v = 0.0f;
  float max_v = 0.0f;
};

struct QuantPlan {
  QuantMode mode = QuantMode::PTQ;
  std::set<LayerKind> covered_kinds;
  // Weight params per weighted covered layer, keyed by layer name.
  std::map<std::string, QuantParams> weight_qp;
  // Observed f32 activation ranges keyed by tensor name. PTQ only.
  std::map<std::string, CalibrationRange> calibration;

  std::string to_json() const;
  static QuantPlan from_json(const std::string& text);
};

// Runs the f32 graph over the calibration set recording per-tensor min/max,
// and computes weight params for every covered weighted layer.
// Errors: EmptyCalibrationSet, NonFiniteRange.
QuantPlan calibrate(const Graph& g, const std::vector<Tensor>& calib_set,
                    const std::set<LayerKind>& covered_kinds);

// Rewrites covered layers for integer execution with activation params fixed
// from the plan; biases are pre-scaled to i32 by s_in * s_w. Uncovered layers
// stay f32; the executor inserts quantize/dequantize conversions at the
// boundaries. Empty coverage returns the graph unchanged.
// Errors: PlanCoverageError when a covered layer lacks calibration.
Graph apply_ptq(const Graph& g, const QuantPlan& plan);

// Dynamic variant: weights of covered weighted kinds are stored u8, the input
// range of each such layer is measured per inference, the integer result is
// dequantized back to f32. No calibration inputs.
Graph apply_dq(const Graph& g, const std::set<LayerKind>& covered_kinds);

}  // namespace edgenet
