#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "edgenet/forward.hpp"
#include "edgenet/graph.hpp"
#include "edgenet/quant.hpp"
#include "edgenet/serialize.hpp"
#include "checks.hpp"
#include "helpers.hpp"

using namespace edgenet;
using testutil::fc_layer;
using testutil::make_layer;
using testutil::random_tensor;
using testutil::tiny_conv_net;

namespace {

double max_abs_diff(const std::vector<float>& a, const std::vector<float>& b) {
  CHECK(a.size() == b.size(), "output sizes agree");
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::fabs(static_cast<double>(a[i]) - b[i]));
  return m;
}

}  // namespace

void run_quant_tests() {
  printf("=== quantization ===\n");

  {
    // Frozen parameter cases (zero always lands exactly on the lattice).
    QuantParams qp = compute_qparams(0.0f, 6.0f);
    CHECK_NEAR(qp.scale, 6.0 / 255.0, 1e-8, "[0,6] scale");
    CHECK(qp.zero_point == 0, "[0,6] zero point");

    qp = compute_qparams(-1.0f, 1.0f);
    CHECK_NEAR(qp.scale, 2.0 / 255.0, 1e-8, "[-1,1] scale");
    CHECK(qp.zero_point == 127, "[-1,1] zero point (float scale rounds up)");

    qp = compute_qparams(-128.0f, 127.0f);
    CHECK(qp.scale == 1.0f && qp.zero_point == 128, "[-128,127] is exact");

    qp = compute_qparams(0.0f, 0.0f);
    CHECK(qp.scale == 1.0f && qp.zero_point == 0, "degenerate range");

    qp = compute_qparams(2.0f, 6.0f);
    CHECK_NEAR(qp.scale, 6.0 / 255.0, 1e-8, "positive range widens to 0");
    CHECK(qp.zero_point == 0, "widened [0,6] zero point");

    qp = compute_qparams(-5.0f, -1.0f);
    CHECK_NEAR(qp.scale, 5.0 / 255.0, 1e-8, "negative range widens to 0");
    CHECK(qp.zero_point == 255, "widened [-5,0] zero point");

    qp = compute_qparams(-3.0f, 5.0f);
    CHECK(qp.zero_point == 96, "[-3,5] zero point");

    CHECK_THROWS_CODE(compute_qparams(1.0f, 0.0f), ErrorCode::NonFiniteRange);
    CHECK_THROWS_CODE(compute_qparams(std::nanf(""), 1.0f),
                      ErrorCode::NonFiniteRange);
    CHECK_THROWS_CODE(
        compute_qparams(0.0f, std::numeric_limits<float>::infinity()),
        ErrorCode::NonFiniteRange);
  }

  {
    // Round-trip bound |x - dq(q(x))| <= scale / 2 and exact zero.
    std::mt19937_64 rng(4242);
    for (int trial = 0; trial < 200; ++trial) {
      std::uniform_real_distribution<float> bound(-20.0f, 20.0f);
      float a = bound(rng), b = bound(rng);
      const float mn = std::min(a, b), mx = std::max(a, b);
      const QuantParams qp = compute_qparams(mn, mx);
      CHECK(quantize_value(0.0f, qp) == qp.zero_point, "zero maps to zp");
      CHECK(dequantize_value(static_cast<uint8_t>(qp.zero_point), qp) == 0.0f,
            "zp maps back to exact zero");
      std::uniform_real_distribution<float> inside(mn, mx);
      for (int i = 0; i < 50; ++i) {
        const float x = inside(rng);
        const float back = dequantize_value(quantize_value(x, qp), qp);
        const double err = std::fabs(static_cast<double>(back) - x);
        CHECK(err <= static_cast<double>(qp.scale) / 2.0,
              "round trip within half a step");
      }
    }
  }

  {
    // Tensor helpers reject the wrong dtype.
    const QuantParams qp = compute_qparams(0.0f, 1.0f);
    Tensor t = Tensor::from_f32({2, 2}, {0.0f, 0.25f, 0.5f, 1.0f});
    Tensor q = quantize_tensor(t, qp);
    CHECK(q.dtype == DType::U8 && q.numel() == 4, "quantized tensor is u8");
    CHECK(q.quant == qp, "quantized tensor carries its params");
    Tensor back = dequantize_tensor(q);
    CHECK(back.dtype == DType::F32, "dequantized tensor is f32");
    CHECK(max_abs_diff(back.f32, t.f32) <= qp.scale / 2.0,
          "tensor round trip within half a step");
    CHECK_THROWS_CODE(quantize_tensor(q, qp), ErrorCode::ShapeMismatch);
    CHECK_THROWS_CODE(dequantize_tensor(t), ErrorCode::ShapeMismatch);
  }

  {
    // Coverage presets.
    const std::set<LayerKind>& all = quantizable_kinds();
    CHECK(all.size() == 9, "nine quantizable kinds");
    CHECK(all.count(LayerKind::Conv2D) && all.count(LayerKind::Flatten) &&
              all.count(LayerKind::GlobalAvgPool),
          "quantizable set contents");
    CHECK(!all.count(LayerKind::Add) && !all.count(LayerKind::Softmax) &&
              !all.count(LayerKind::BatchNormFolded),
          "float-only kinds stay out");
    const std::set<LayerKind> eff = quant_preset("efficientnet-style");
    CHECK((eff == std::set<LayerKind>{LayerKind::Conv2D,
                                      LayerKind::DepthwiseConv2D}),
          "efficientnet-style covers the convs");
    const std::set<LayerKind> shf = quant_preset("shufflenet-style");
    CHECK((shf == std::set<LayerKind>{LayerKind::Conv2D,
                                      LayerKind::DepthwiseConv2D,
                                      LayerKind::FullyConnected}),
          "shufflenet-style adds the classifier");
    CHECK(quant_preset("full-graph") == all, "full-graph covers everything");
    CHECK_THROWS_CODE(quant_preset("mobilenet"), ErrorCode::ParseError);
  }

  {
    // Integer lattice: scale 1 / zero point 0 everywhere makes the integer
    // path reproduce the f32 forward bit for bit.
    Graph g;
    g.input.name = "input";
    g.input.shape = {1, 8};
    g.num_classes = 3;
    g.output = "logits";
    g.layers.push_back(fc_layer("fc", "input", "logits", 8, 3));
    for (int o = 0; o < 3; ++o) {
      for (int i = 0; i < 8; ++i)
        g.layers[0].weight->f32[o * 8 + i] = static_cast<float>((o + i) % 4);
      g.layers[0].bias->f32[o] = static_cast<float>((o * 2) % 3);
    }
    validate(g);

    QuantPlan plan;
    plan.mode = QuantMode::PTQ;
    plan.covered_kinds = {LayerKind::FullyConnected};
    plan.weight_qp["fc"] = QuantParams{1.0f, 0};
    plan.calibration["input"] = {0.0f, 255.0f};
    plan.calibration["logits"] = {0.0f, 255.0f};
    Graph q = apply_ptq(g, plan);
    CHECK(q.layers[0].quant.has_value(), "fc is quantized");
    CHECK(q.layers[0].quant->input_qp == (QuantParams{1.0f, 0}),
          "unit input params");
    CHECK(q.layers[0].quant->output_qp == (QuantParams{1.0f, 0}),
          "unit output params");

    std::mt19937_64 rng(515);
    std::uniform_int_distribution<int> lattice(0, 7);
    for (int trial = 0; trial < 100; ++trial) {
      Tensor x = Tensor::zeros_f32({1, 8});
      for (float& v : x.f32) v = static_cast<float>(lattice(rng));
      CHECK(testutil::bits_equal(forward(g, x).f32, forward(q, x).f32),
            "integer lattice forward is bit exact");
    }

    // Plan serialization round trip.
    const std::string j1 = plan.to_json();
    const std::string j2 = QuantPlan::from_json(j1).to_json();
    CHECK(j1 == j2, "quant plan JSON round trip");
  }

  {
    // Full PTQ pipeline on a conv net with covered passthrough layers.
    Graph g;
    g.input.name = "input";
    g.input.shape = {1, 3, 8, 8};
    g.num_classes = 4;
    g.output = "logits";
    g.layers.push_back(testutil::conv_layer("c1", "input", "c1_out", 3, 6, 3,
                                            1, 1));
    g.layers.push_back(make_layer("r1", LayerKind::ReLU6, {"c1_out"},
                                  "r1_out"));
    g.layers.push_back(
        testutil::pool_layer("p1", LayerKind::MaxPool, "r1_out", "p1_out", 2,
                             2));
    g.layers.push_back(make_layer("gap", LayerKind::GlobalAvgPool, {"p1_out"},
                                  "gap_out"));
    g.layers.push_back(
        make_layer("flat", LayerKind::Flatten, {"gap_out"}, "flat_out"));
    g.layers.push_back(fc_layer("fc", "flat_out", "logits", 6, 4));
    testutil::fill_weights(g, 88);
    validate(g);

    std::vector<Tensor> calib;
    for (uint64_t s = 0; s < 8; ++s)
      calib.push_back(random_tensor({1, 3, 8, 8}, 700 + s, 0.0f, 1.0f));
    QuantPlan plan = calibrate(g, calib, quant_preset("full-graph"));
    CHECK(plan.calibration.count("input") && plan.calibration.count("logits"),
          "calibration covers endpoint tensors");
    CHECK(plan.weight_qp.count("c1") && plan.weight_qp.count("fc") &&
              plan.weight_qp.size() == 2,
          "weight params for the weighted layers only");

    Graph q = apply_ptq(g, plan);
    for (const LayerSpec& l : q.layers) {
      CHECK(l.quant.has_value(), "full-graph coverage quantizes every layer");
      CHECK(l.quant->mode == QuantMode::PTQ, "PTQ mode recorded");
      if (l.kind == LayerKind::Conv2D || l.kind == LayerKind::FullyConnected) {
        CHECK(l.quant->weight_q.dtype == DType::U8, "weights stored u8");
        CHECK(!l.weight.has_value(), "f32 weights dropped");
        CHECK(!l.quant->bias_q.empty(), "bias prescaled to i32");
        CHECK(!l.bias.has_value(), "f32 bias dropped");
      } else {
        CHECK(l.quant->weight_q.numel() == 0, "passthrough has no weights");
      }
    }

    for (uint64_t s = 0; s < 5; ++s) {
      const Tensor x = random_tensor({1, 3, 8, 8}, 900 + s, 0.0f, 1.0f);
      const double diff = max_abs_diff(forward(g, x).f32, forward(q, x).f32);
      CHECK(diff <= 0.15, "PTQ output tracks the f32 output");
    }

    CHECK_THROWS_CODE(apply_ptq(q, plan), ErrorCode::GraphRewriteConflict);

    QuantPlan missing = plan;
    missing.calibration.erase("flat_out");
    CHECK_THROWS_CODE(apply_ptq(g, missing), ErrorCode::PlanCoverageError);
    QuantPlan noweights = plan;
    noweights.weight_qp.erase("fc");
    CHECK_THROWS_CODE(apply_ptq(g, noweights), ErrorCode::PlanCoverageError);

    CHECK_THROWS_CODE(calibrate(g, {}, quant_preset("full-graph")),
                      ErrorCode::EmptyCalibrationSet);
    Tensor bad = random_tensor({1, 3, 8, 8}, 77, 0.0f, 1.0f);
    bad.f32[5] = std::nanf("");
    CHECK_THROWS_CODE(calibrate(g, {bad}, quant_preset("full-graph")),
                      ErrorCode::NonFiniteRange);

    // Empty coverage is the identity.
    QuantPlan none;
    none.covered_kinds.clear();
    Graph same = apply_ptq(g, none);
    CHECK(graphs_equal(g, same), "empty coverage leaves the graph alone");
  }

  {
    // Dynamic quantization: u8 weights, f32 bias, ranges found per inference.
    Graph g = tiny_conv_net(3, 8, 8, 8, 4, 61);
    Graph q = apply_dq(g, quant_preset("shufflenet-style"));
    const LayerSpec& c1 = q.layers[0];
    const LayerSpec& fc = q.layers[4];
    CHECK(c1.quant.has_value() && fc.quant.has_value(),
          "weighted layers rewritten");
    CHECK(c1.quant->mode == QuantMode::DQ, "dynamic mode recorded");
    CHECK(c1.quant->weight_q.dtype == DType::U8 &&
              c1.quant->weight_q.numel() == 8 * 27,
          "conv weights stored u8");
    CHECK(!c1.weight.has_value(), "f32 conv weights dropped");
    CHECK(c1.bias.has_value() && c1.bias->dtype == DType::F32,
          "conv bias stays f32");
    CHECK(c1.quant->bias_q.empty(), "no prescaled bias under DQ");
    for (size_t i = 1; i < 4; ++i)
      CHECK(!q.layers[i].quant.has_value(),
            "passthrough layers untouched by DQ");

    for (uint64_t s = 0; s < 5; ++s) {
      const Tensor x = random_tensor({1, 3, 8, 8}, 300 + s);
      const double diff = max_abs_diff(forward(g, x).f32, forward(q, x).f32);
      CHECK(diff <= 0.1, "DQ output tracks the f32 output");
    }

    CHECK_THROWS_CODE(apply_dq(q, quant_preset("shufflenet-style")),
                      ErrorCode::GraphRewriteConflict);
  }

  printf("quantization: ok\n");
}
