#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "edgenet/cascade.hpp"
#include "edgenet/costs.hpp"
#include "edgenet/experiment.hpp"
#include "edgenet/forward.hpp"
#include "edgenet/serialize.hpp"
#include "checks.hpp"
#include "helpers.hpp"

using namespace edgenet;
using testutil::random_tensor;

namespace {

Graph residual_backbone(uint64_t seed) {
  return make_backbone({"toy-residual", {1, 4, 8, 8}, 4, 8, seed});
}

std::vector<float> final_probs(const Graph& backbone, const Tensor& x) {
  const Tensor logits = forward(backbone, x);
  std::vector<double> d(logits.f32.begin(), logits.f32.end());
  const std::vector<double> p = softmax_d(d);
  std::vector<float> out(p.size());
  for (size_t i = 0; i < p.size(); ++i) out[i] = static_cast<float>(p[i]);
  return out;
}

int64_t piece_macs(const Graph& g) { return count_macs(g).total_macs; }

void rescan_optima(const SweepReport& r, double budget, int* acc_idx,
                   int* inf_idx) {
  int a = 0;
  for (int i = 1; i < static_cast<int>(r.points.size()); ++i) {
    const SweepPoint& p = r.points[i];
    const SweepPoint& best = r.points[a];
    if (p.accuracy_pct > best.accuracy_pct ||
        (p.accuracy_pct == best.accuracy_pct &&
         p.early_exit_rate_pct > best.early_exit_rate_pct))
      a = i;
  }
  int f = -1;
  for (int i = 0; i < static_cast<int>(r.points.size()); ++i) {
    const SweepPoint& p = r.points[i];
    if (p.accuracy_pct < r.points[a].accuracy_pct - budget) continue;
    if (f < 0) {
      f = i;
      continue;
    }
    const SweepPoint& best = r.points[f];
    if (p.expected_macs < best.expected_macs ||
        (p.expected_macs == best.expected_macs &&
         p.accuracy_pct > best.accuracy_pct))
      f = i;
  }
  if (f < 0) f = a;
  *acc_idx = a;
  *inf_idx = f;
}

}  // namespace

void run_cascade_tests() {
  printf("=== early exit cascade ===\n");

  Graph backbone = residual_backbone(11);

  {
    // Head structure for both presets.
    CascadeModel simple = attach_exit(backbone, "pool3_out", "simple", 5);
    CHECK(simple.segments.size() == 2 && simple.heads.size() == 1,
          "one cut makes two segments");
    CHECK(simple.num_classes == 4, "classes copied from the backbone");
    CHECK(simple.segments[0].num_classes == 0,
          "leading segment has no classifier");
    CHECK(simple.segments[0].output == "pool3_out",
          "leading segment ends at the cut");
    CHECK(simple.segments[1].num_classes == 4,
          "final segment keeps the classifier");
    const Graph& h = simple.heads[0].head;
    CHECK(simple.heads[0].attach_point == "pool3_out", "attach point kept");
    CHECK(!simple.heads[0].trained, "fresh heads are untrained");
    CHECK(h.layers.size() == 3, "simple head is gap/flatten/fc");
    CHECK(h.input.name == "pool3_out", "head reads the boundary tensor");
    CHECK(h.output == "head0_logits", "head output name");
    CHECK((h.layers[2].weight->shape == std::vector<int64_t>{4, 8}),
          "head classifier shape (classes x channels)");
    for (float b : h.layers[2].bias->f32)
      CHECK(b == 0.0f, "head biases start at zero");

    CascadeModel block = attach_exit(backbone, "pool3_out", "block", 5);
    const Graph& hb = block.heads[0].head;
    CHECK(hb.layers.size() == 5, "block head adds conv and relu");
    CHECK(hb.layers[0].kind == LayerKind::Conv2D, "block head starts conv");
    CHECK((hb.layers[0].weight->shape == std::vector<int64_t>{8, 8, 3, 3}),
          "block conv keeps the channel count");

    // Segment concatenation preserves the backbone layer sequence.
    size_t i = 0;
    for (const Graph& seg : simple.segments)
      for (const LayerSpec& l : seg.layers) {
        CHECK(l.name == backbone.layers[i].name, "segments cover the layers");
        ++i;
      }
    CHECK(i == backbone.layers.size(), "no layer lost or duplicated");

    // Same seed, same head; different seed, different head.
    CascadeModel again = attach_exit(backbone, "pool3_out", "simple", 5);
    CHECK(graphs_equal(again.heads[0].head, h), "head init is seeded");
    CascadeModel other = attach_exit(backbone, "pool3_out", "simple", 6);
    CHECK(!graphs_equal(other.heads[0].head, h), "seed changes the init");
  }

  {
    // Cut-point validity around the residual block.
    CHECK_THROWS_CODE(attach_exit(backbone, "nope", "simple", 1),
                      ErrorCode::UnknownAttachPoint);
    CHECK_THROWS_CODE(attach_exit(backbone, "logits", "simple", 1),
                      ErrorCode::AttachAtTerminal);
    // add3 reads relu1_out across these cuts, so they are not articulation
    // points.
    CHECK_THROWS_CODE(attach_exit(backbone, "conv2_out", "simple", 1),
                      ErrorCode::GraphRewriteConflict);
    CHECK_THROWS_CODE(attach_exit(backbone, "relu2_out", "simple", 1),
                      ErrorCode::GraphRewriteConflict);
    CHECK_THROWS_CODE(attach_exit(backbone, "conv3_out", "simple", 1),
                      ErrorCode::GraphRewriteConflict);
    CHECK_THROWS_CODE(attach_exit(backbone, "pool3_out", "ries", 1),
                      ErrorCode::ParseError);
    CHECK_THROWS_CODE(build_cascade(backbone, {}, 1),
                      ErrorCode::UnknownAttachPoint);
    CHECK_THROWS_CODE(
        build_cascade(backbone,
                      {{"pool3_out", "simple"}, {"pool3_out", "simple"}}, 1),
        ErrorCode::GraphRewriteConflict);
    // Cutting at the residual source itself is fine: add3 consumes the
    // boundary tensor, which is exactly what crosses the cut.
    CascadeModel at_src = attach_exit(backbone, "relu1_out", "simple", 1);
    CHECK(at_src.segments[1].layers.front().name == "conv2",
          "segment after the residual source starts at conv2");
  }

  {
    // Chained segments reproduce the backbone bit for bit.
    CascadeModel two = build_cascade(
        backbone, {{"relu1_out", "simple"}, {"pool3_out", "block"}}, 9);
    CHECK(two.segments.size() == 3 && two.heads.size() == 2,
          "two cuts make three segments");
    for (uint64_t s = 0; s < 10; ++s) {
      const Tensor x = random_tensor({1, 4, 8, 8}, 2000 + s);
      Tensor t = x;
      for (const Graph& seg : two.segments) t = forward(seg, t);
      CHECK(testutil::bits_equal(t.f32, forward(backbone, x).f32),
            "segment chain matches the backbone");
    }

    // Exit cost table is additive over pieces.
    const std::vector<int64_t> em = cascade_exit_macs(two);
    CHECK(em.size() == 3, "one row per exit");
    const int64_t s0 = piece_macs(two.segments[0]);
    const int64_t s1 = piece_macs(two.segments[1]);
    const int64_t s2 = piece_macs(two.segments[2]);
    const int64_t h0 = piece_macs(two.heads[0].head);
    const int64_t h1 = piece_macs(two.heads[1].head);
    CHECK(em[0] == s0 + h0, "exit 0 cost");
    CHECK(em[1] == s0 + s1 + h0 + h1, "exit 1 cost");
    CHECK(em[2] == s0 + s1 + s2 + h0 + h1, "final cost includes every head");
    CHECK(backbone_macs(two) == piece_macs(backbone),
          "backbone cost equals the unsplit graph");
    CHECK(backbone_macs(two) == s0 + s1 + s2, "segments partition the cost");

    // Threshold 0: nothing exits early; the probabilities equal the
    // backbone's softmax exactly.
    const Tensor x = random_tensor({1, 4, 8, 8}, 321);
    Prediction full = cascade_infer(two, x, 0.0);
    CHECK(full.exit_index == 2, "threshold 0 runs to the final classifier");
    CHECK(full.macs_executed == em[2], "full path cost");
    CHECK(testutil::bits_equal(full.probs, final_probs(backbone, x)),
          "full path probabilities match the backbone");
    CHECK(full.segment_seconds.size() == 3, "timing per executed segment");
    int arg = 0;
    for (size_t i = 1; i < full.probs.size(); ++i)
      if (full.probs[i] > full.probs[arg]) arg = static_cast<int>(i);
    CHECK(full.predicted == arg, "argmax prediction");

    // Threshold ln(n): everything exits at the first head.
    Prediction first = cascade_infer(two, x, std::log(4.0));
    CHECK(first.exit_index == 0, "max threshold exits at head 0");
    CHECK(first.macs_executed == em[0], "head 0 cost");
    CHECK(first.segment_seconds.size() == 1, "one executed segment");

    // The policy threshold is the default for the two-argument overload.
    two.policy.threshold = std::log(4.0);
    Prediction via_policy = cascade_infer(two, x);
    CHECK(via_policy.exit_index == first.exit_index &&
              via_policy.probs == first.probs,
          "policy threshold drives the short overload");
  }

  {
    // Threshold sweep on a two-exit cascade with fiat-trained heads.
    CascadeModel m = build_cascade(
        backbone, {{"relu1_out", "simple"}, {"pool3_out", "simple"}}, 13);
    std::vector<Tensor> inputs;
    std::vector<int> labels;
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<int> lab(0, 3);
    for (uint64_t s = 0; s < 40; ++s) {
      inputs.push_back(random_tensor({1, 4, 8, 8}, 3000 + s));
      labels.push_back(lab(rng));
    }

    CHECK_THROWS_CODE(sweep_thresholds(m, inputs, labels, {0.5}, 0.0),
                      ErrorCode::UntrainedHead);
    for (ExitHead& h : m.heads) h.trained = true;

    CHECK_THROWS_CODE(sweep_thresholds(m, {}, {}, {0.5}, 0.0),
                      ErrorCode::EmptyEvalSet);
    CHECK_THROWS_CODE(
        sweep_thresholds(m, inputs, {labels[0]}, {0.5}, 0.0),
        ErrorCode::LengthMismatch);
    std::vector<int> bad = labels;
    bad[7] = 4;
    CHECK_THROWS_CODE(sweep_thresholds(m, inputs, bad, {0.5}, 0.0),
                      ErrorCode::LabelOutOfRange);
    bad[7] = -1;
    CHECK_THROWS_CODE(sweep_thresholds(m, inputs, bad, {0.5}, 0.0),
                      ErrorCode::LabelOutOfRange);

    SweepReport r = sweep_thresholds(m, inputs, labels, {0.9, 0.2}, 5.0);
    CHECK(r.points.size() == 4, "grid plus inserted endpoints");
    CHECK(r.points.front().threshold == 0.0, "zero endpoint inserted");
    CHECK_NEAR(r.points.back().threshold, std::log(4.0), 1e-12,
               "ln(n) endpoint inserted");
    for (size_t i = 1; i < r.points.size(); ++i) {
      CHECK(r.points[i].threshold > r.points[i - 1].threshold,
            "thresholds ascend");
      CHECK(r.points[i].early_exit_rate_pct >=
                r.points[i - 1].early_exit_rate_pct,
            "exit rate is monotone in the threshold");
    }

    const std::vector<int64_t> em = cascade_exit_macs(m);
    const SweepPoint& p0 = r.points.front();
    CHECK(p0.early_exit_rate_pct == 0.0, "threshold 0 never exits early");
    CHECK(p0.label_loyalty_pct == 100.0 && p0.prob_loyalty_pct == 100.0,
          "full path is loyal to itself");
    CHECK(p0.expected_macs == static_cast<double>(em.back()),
          "full path cost at threshold 0");
    const SweepPoint& plast = r.points.back();
    CHECK(plast.early_exit_rate_pct == 100.0, "max threshold always exits");
    CHECK(plast.expected_macs == static_cast<double>(em.front()),
          "head 0 cost at max threshold");

    // The selected operating points obey the documented tie rules.
    int acc_idx = 0, inf_idx = 0;
    rescan_optima(r, 5.0, &acc_idx, &inf_idx);
    CHECK(r.acc_opt_index == acc_idx, "accuracy optimum re-scan");
    CHECK(r.inf_opt_index == inf_idx, "efficiency optimum re-scan");
    CHECK(r.inf_opt().expected_macs <= r.acc_opt().expected_macs,
          "efficiency point is never costlier");
    CHECK(r.acc_opt().accuracy_pct - r.inf_opt().accuracy_pct <= 5.0 + 1e-9,
          "efficiency point stays within the budget");

    // Serialization round trips; CSV carries one row per point.
    SweepReport r2 = SweepReport::from_json(r.to_json());
    CHECK(r2.to_json() == r.to_json(), "sweep JSON round trip");
    const std::string csv = r.to_csv();
    size_t rows = 0;
    for (char c : csv)
      if (c == '\n') ++rows;
    CHECK(rows == r.points.size() + 1, "csv has header plus one row each");
    CHECK(csv.rfind("threshold,accuracy_pct,early_exit_rate_pct,", 0) == 0,
          "csv header order");
    const std::string plot = r.to_plot_data();
    CHECK(plot.rfind("# threshold accuracy_pct", 0) == 0, "plot data header");

    // An unconstrained budget lets inf_opt take the cheapest point.
    SweepReport free_r = sweep_thresholds(m, inputs, labels, {0.9, 0.2}, -1.0);
    double cheapest = free_r.points[0].expected_macs;
    for (const SweepPoint& p : free_r.points)
      cheapest = std::min(cheapest, p.expected_macs);
    CHECK(free_r.inf_opt().expected_macs == cheapest,
          "negative budget means unconstrained");
  }

  {
    // Quantized cascades: pieces are quantized, boundaries stay f32.
    CascadeModel m = build_cascade(backbone, {{"pool3_out", "simple"}}, 21);
    for (ExitHead& h : m.heads) h.trained = true;

    std::vector<Tensor> calib;
    for (uint64_t s = 0; s < 6; ++s)
      calib.push_back(random_tensor({1, 4, 8, 8}, 4000 + s));
    CascadeModel qp = quantize_cascade(m, QuantMode::PTQ, calib,
                                       quant_preset("full-graph"));
    CHECK(qp.segments[0].layers[0].quant.has_value(),
          "segment conv quantized");
    CHECK(qp.heads[0].head.layers.back().quant.has_value(),
          "head classifier quantized");
    CHECK(qp.heads[0].trained, "trained flag survives quantization");
    CHECK_THROWS_CODE(
        quantize_cascade(m, QuantMode::PTQ, {}, quant_preset("full-graph")),
        ErrorCode::EmptyCalibrationSet);

    CascadeModel qd = quantize_cascade(m, QuantMode::DQ, {},
                                       quant_preset("shufflenet-style"));
    for (uint64_t s = 0; s < 5; ++s) {
      const Tensor x = random_tensor({1, 4, 8, 8}, 5000 + s);
      const Prediction a = cascade_infer(m, x, 0.0);
      const Prediction b = cascade_infer(qd, x, 0.0);
      double diff = 0.0;
      for (size_t i = 0; i < a.probs.size(); ++i)
        diff = std::max(diff,
                        std::fabs(static_cast<double>(a.probs[i]) -
                                  b.probs[i]));
      CHECK(diff <= 0.1, "DQ cascade tracks the f32 cascade");
    }

    // Sweeps run on quantized cascades too.
    std::vector<Tensor> inputs;
    std::vector<int> labels;
    for (uint64_t s = 0; s < 10; ++s) {
      inputs.push_back(random_tensor({1, 4, 8, 8}, 6000 + s));
      labels.push_back(static_cast<int>(s % 4));
    }
    SweepReport qr = sweep_thresholds(qp, inputs, labels, {0.5}, 0.0);
    CHECK(qr.points.size() == 3, "quantized sweep produces points");
  }

  {
    // Manifest save / load round trip.
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "edgenet_cascade_test";
    fs::create_directories(dir);
    CascadeModel m = build_cascade(
        backbone, {{"relu1_out", "block"}, {"pool3_out", "simple"}}, 33);
    m.name = "toy-cascade";
    m.policy.threshold = 0.37;
    m.heads[1].trained = true;
    const std::string manifest = (dir / "toy.cascade.json").string();
    save_cascade(m, manifest);
    CascadeModel l = load_cascade(manifest);
    CHECK(l.name == m.name, "name survives the round trip");
    CHECK(l.num_classes == 4, "classes survive");
    CHECK(l.policy.threshold == 0.37, "threshold survives");
    CHECK(l.segments.size() == 3 && l.heads.size() == 2, "piece counts");
    for (size_t i = 0; i < m.segments.size(); ++i)
      CHECK(graphs_equal(l.segments[i], m.segments[i]),
            "segment survives byte for byte");
    for (size_t i = 0; i < m.heads.size(); ++i) {
      CHECK(graphs_equal(l.heads[i].head, m.heads[i].head), "head survives");
      CHECK(l.heads[i].attach_point == m.heads[i].attach_point,
            "attach point survives");
      CHECK(l.heads[i].trained == m.heads[i].trained,
            "trained flag survives");
    }
    CHECK_THROWS_CODE(load_cascade((dir / "absent.cascade.json").string()),
                      ErrorCode::IoError);
    fs::remove_all(dir);
  }

  printf("early exit cascade: ok\n");
}
