#include "edgenet/cascade.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "edgenet/costs.hpp"
#include "edgenet/forward.hpp"
#include "edgenet/metrics.hpp"
#include "edgenet/serialize.hpp"

namespace edgenet {

using nlohmann::json;
namespace fs = std::filesystem;

double entropy_d(const std::vector<double>& probs) {
  if (probs.empty()) fail(ErrorCode::EmptyInput, "entropy of empty vector");
  double sum = 0.0, h = 0.0;
  for (double p : probs) {
    if (!std::isfinite(p) || p < 0.0)
      fail(ErrorCode::InvalidDistribution, "probability out of range");
    sum += p;
    if (p > 0.0) h -= p * std::log(p);
  }
  if (std::abs(sum - 1.0) > 1e-5)
    fail(ErrorCode::InvalidDistribution,
         "probabilities sum to " + std::to_string(sum));
  // The mathematical range is [0, ln n]; clamp so boundary thresholds behave
  // exactly.
  return std::clamp(h, 0.0, std::log(static_cast<double>(probs.size())));
}

float entropy(const std::vector<float>& probs) {
  std::vector<double> d(probs.begin(), probs.end());
  return static_cast<float>(entropy_d(d));
}

namespace {

std::mt19937_64 seeded_rng(uint64_t seed, uint64_t stream) {
  std::seed_seq seq{seed, stream};
  return std::mt19937_64(seq);
}

void init_layer_params(LayerSpec& l, std::mt19937_64& rng) {
  if (!layer_kind_has_weights(l.kind)) return;
  int64_t fan_in = 1;
  if (l.kind == LayerKind::FullyConnected) {
    fan_in = l.weight->shape[1];
  } else if (l.kind == LayerKind::Conv2D) {
    fan_in = l.weight->shape[1] * l.weight->shape[2] * l.weight->shape[3];
  } else if (l.kind == LayerKind::DepthwiseConv2D) {
    fan_in = l.weight->shape[2] * l.weight->shape[3];
  }
  const float bound = 1.0f / std::sqrt(static_cast<float>(fan_in));
  std::uniform_real_distribution<float> dist(-bound, bound);
  for (float& w : l.weight->f32) w = dist(rng);
  if (l.bias.has_value())
    for (float& b : l.bias->f32) b = 0.0f;
}

Graph build_head(const std::string& name, const std::string& attach_point,
                 const std::vector<int64_t>& attach_shape,
                 const std::string& preset, int num_classes,
                 std::mt19937_64& rng) {
  if (attach_shape.size() != 4)
    fail(ErrorCode::ShapeMismatch,
         "head presets need a 4-D attach tensor, got " +
             shape_to_string(attach_shape));
  const int64_t c = attach_shape[1];
  Graph h;
  h.name = name;
  h.num_classes = num_classes;
  h.input.name = attach_point;
  h.input.shape = attach_shape;
  h.output = name + "_logits";

  std::string cur = attach_point;
  if (preset == "block") {
    LayerSpec conv;
    conv.name = name + "_conv";
    conv.kind = LayerKind::Conv2D;
    conv.attrs.in_channels = conv.attrs.out_channels = static_cast<int>(c);
    conv.attrs.kernel_h = conv.attrs.kernel_w = 3;
    conv.attrs.stride_h = conv.attrs.stride_w = 1;
    conv.attrs.pad_h = conv.attrs.pad_w = 1;
    conv.inputs = {cur};
    conv.output = name + "_conv_out";
    conv.weight = Tensor::zeros_f32({c, c, 3, 3});
    conv.bias = Tensor::zeros_f32({c});
    h.layers.push_back(std::move(conv));
    cur = name + "_conv_out";

    LayerSpec relu;
    relu.name = name + "_relu";
    relu.kind = LayerKind::ReLU;
    relu.inputs = {cur};
    relu.output = name + "_relu_out";
    h.layers.push_back(std::move(relu));
    cur = name + "_relu_out";
  } else if (preset != "simple") {
    fail(ErrorCode::ParseError, "unknown head preset '" + preset + "'");
  }

  LayerSpec gap;
  gap.name = name + "_gap";
  gap.kind = LayerKind::GlobalAvgPool;
  gap.inputs = {cur};
  gap.output = name + "_gap_out";
  h.layers.push_back(std::move(gap));

  LayerSpec flat;
  flat.name = name + "_flatten";
  flat.kind = LayerKind::Flatten;
  flat.inputs = {name + "_gap_out"};
  flat.output = name + "_features";
  h.layers.push_back(std::move(flat));

  LayerSpec fc;
  fc.name = name + "_fc";
  fc.kind = LayerKind::FullyConnected;
  fc.attrs.in_channels = static_cast<int>(c);
  fc.attrs.out_channels = num_classes;
  fc.inputs = {name + "_features"};
  fc.output = h.output;
  fc.weight = Tensor::zeros_f32({num_classes, c});
  fc.bias = Tensor::zeros_f32({num_classes});
  h.layers.push_back(std::move(fc));

  for (LayerSpec& l : h.layers) init_layer_params(l, rng);
  validate(h);
  return h;
}

Graph slice_segment(const Graph& g,
                    const std::map<std::string, std::vector<int64_t>>& shapes,
                    int lo, int hi, const std::string& in_tensor,
                    const std::string& out_tensor, int seg_index,
                    bool is_last) {
  Graph s;
  s.name = g.name + "_seg" + std::to_string(seg_index);
  s.num_classes = is_last ? g.num_classes : 0;
  s.input.name = in_tensor;
  s.input.shape = shapes.at(in_tensor);
  s.output = out_tensor;
  for (int i = lo; i <= hi; ++i) s.layers.push_back(g.layers[i]);
  validate(s);
  return s;
}

}  // namespace

CascadeModel build_cascade(const Graph& g, const std::vector<HeadSpec>& specs,
                           uint64_t seed) {
  validate(g);
  if (g.num_classes <= 0)
    fail(ErrorCode::InvalidGraph, "cascade backbone must be a classifier");
  if (specs.empty())
    fail(ErrorCode::UnknownAttachPoint, "no attach points given");
  const auto shapes = infer_shapes(g);

  struct Cut {
    int layer_index;
    HeadSpec spec;
  };
  std::vector<Cut> cuts;
  for (const HeadSpec& hs : specs) {
    if (hs.attach_point == g.output)
      fail(ErrorCode::AttachAtTerminal,
           "attach point '" + hs.attach_point + "' is the terminal tensor");
    const int idx = layer_index_by_output(g, hs.attach_point);
    if (idx < 0)
      fail(ErrorCode::UnknownAttachPoint,
           "no layer produces tensor '" + hs.attach_point + "'");
    cuts.push_back({idx, hs});
  }
  std::sort(cuts.begin(), cuts.end(),
            [](const Cut& a, const Cut& b) { return a.layer_index < b.layer_index; });
  for (size_t i = 1; i < cuts.size(); ++i)
    if (cuts[i].layer_index == cuts[i - 1].layer_index)
      fail(ErrorCode::GraphRewriteConflict,
           "duplicate attach point '" + cuts[i].spec.attach_point + "'");

  // A cut is valid only when the boundary tensor is the single live value:
  // layers after the cut may consume it, or tensors produced after the cut,
  // but nothing else from before.
  for (const Cut& cut : cuts) {
    for (size_t li = static_cast<size_t>(cut.layer_index) + 1;
         li < g.layers.size(); ++li) {
      for (const std::string& in : g.layers[li].inputs) {
        if (in == cut.spec.attach_point) continue;
        const int producer = layer_index_by_output(g, in);
        if (producer < 0 || producer <= cut.layer_index)
          fail(ErrorCode::GraphRewriteConflict,
               "cannot cut at '" + cut.spec.attach_point + "': layer '" +
                   g.layers[li].name + "' still needs tensor '" + in + "'");
      }
    }
  }

  CascadeModel m;
  m.name = g.name;
  m.num_classes = g.num_classes;

  int lo = 0;
  std::string in_tensor = g.input.name;
  for (size_t k = 0; k < cuts.size(); ++k) {
    m.segments.push_back(slice_segment(g, shapes, lo, cuts[k].layer_index,
                                       in_tensor, cuts[k].spec.attach_point,
                                       static_cast<int>(k), false));
    lo = cuts[k].layer_index + 1;
    in_tensor = cuts[k].spec.attach_point;

    auto rng = seeded_rng(seed, k);
    ExitHead head;
    head.attach_point = cuts[k].spec.attach_point;
    head.head = build_head("head" + std::to_string(k),
                           cuts[k].spec.attach_point,
                           shapes.at(cuts[k].spec.attach_point),
                           cuts[k].spec.preset, g.num_classes, rng);
    m.heads.push_back(std::move(head));
  }
  m.segments.push_back(slice_segment(g, shapes, lo,
                                     static_cast<int>(g.layers.size()) - 1,
                                     in_tensor, g.output,
                                     static_cast<int>(cuts.size()), true));
  return m;
}

CascadeModel attach_exit(const Graph& g, const std::string& attach_point,
                         const std::string& preset, uint64_t seed) {
  return build_cascade(g, {HeadSpec{attach_point, preset}}, seed);
}

std::vector<int64_t> cascade_exit_macs(const CascadeModel& m) {
  std::vector<int64_t> seg(m.segments.size()), head(m.heads.size());
  for (size_t i = 0; i < m.segments.size(); ++i)
    seg[i] = count_macs(m.segments[i]).total_macs;
  for (size_t i = 0; i < m.heads.size(); ++i)
    head[i] = count_macs(m.heads[i].head).total_macs;
  std::vector<int64_t> out(m.heads.size() + 1, 0);
  int64_t run = 0;
  for (size_t k = 0; k < m.heads.size(); ++k) {
    run += seg[k] + head[k];
    out[k] = run;  // exit at head k
  }
  out[m.heads.size()] = run + seg[m.segments.size() - 1];  // final exit
  return out;
}

int64_t backbone_macs(const CascadeModel& m) {
  int64_t total = 0;
  for (const Graph& s : m.segments) total += count_macs(s).total_macs;
  return total;
}

namespace {

std::vector<double> logits_row(const Tensor& t) {
  if (t.shape.size() != 2 || t.shape[0] != 1)
    fail(ErrorCode::ShapeMismatch, "expected a (1, classes) tensor");
  std::vector<double> v(t.f32.begin(), t.f32.end());
  return v;
}

int argmax_lowest(const std::vector<double>& p) {
  int best = 0;
  for (size_t i = 1; i < p.size(); ++i)
    if (p[i] > p[best]) best = static_cast<int>(i);
  return best;
}

std::vector<float> to_f32_vec(const std::vector<double>& v) {
  std::vector<float> out(v.size());
  for (size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i]);
  return out;
}

bool graph_ends_in_softmax(const Graph& g) {
  return !g.layers.empty() && g.layers.back().kind == LayerKind::Softmax &&
         g.layers.back().output == g.output;
}

}  // namespace

Prediction cascade_infer(const CascadeModel& m, const Tensor& input,
                         double threshold) {
  if (m.segments.empty()) fail(ErrorCode::InvalidGraph, "empty cascade");
  const std::vector<int64_t> exit_macs = cascade_exit_macs(m);
  Prediction pred;
  Tensor cur = input;
  for (size_t k = 0; k < m.segments.size(); ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    cur = forward(m.segments[k], cur);
    const auto t1 = std::chrono::steady_clock::now();
    pred.segment_seconds.push_back(
        std::chrono::duration<double>(t1 - t0).count());

    if (k < m.heads.size()) {
      const Tensor logits = forward(m.heads[k].head, cur);
      const std::vector<double> p = softmax_d(logits_row(logits));
      const double h = entropy_d(p);
      if (h <= threshold) {
        pred.probs = to_f32_vec(p);
        pred.predicted = argmax_lowest(p);
        pred.exit_index = static_cast<int>(k);
        pred.macs_executed = exit_macs[k];
        return pred;
      }
    }
  }
  const std::vector<double> row = logits_row(cur);
  const std::vector<double> p =
      graph_ends_in_softmax(m.segments.back()) ? row : softmax_d(row);
  pred.probs = to_f32_vec(p);
  pred.predicted = argmax_lowest(p);
  pred.exit_index = static_cast<int>(m.heads.size());
  pred.macs_executed = exit_macs[m.heads.size()];
  return pred;
}

Prediction cascade_infer(const CascadeModel& m, const Tensor& input) {
  return cascade_infer(m, input, m.policy.threshold);
}

SweepReport sweep_thresholds(const CascadeModel& m,
                             const std::vector<Tensor>& inputs,
                             const std::vector<int>& labels,
                             std::vector<double> grid,
                             double accuracy_budget_pct) {
  if (inputs.empty()) fail(ErrorCode::EmptyEvalSet, "sweep needs samples");
  if (inputs.size() != labels.size())
    fail(ErrorCode::LengthMismatch, "inputs vs labels");
  for (const ExitHead& h : m.heads)
    if (!h.trained)
      fail(ErrorCode::UntrainedHead, "head at '" + h.attach_point + "'");
  for (int l : labels)
    if (l < 0 || l >= m.num_classes)
      fail(ErrorCode::LabelOutOfRange, std::to_string(l));

  const size_t num_heads = m.heads.size();
  const std::vector<int64_t> exit_macs = cascade_exit_macs(m);

  // Threshold-independent per-sample pass: head entropies, per-exit
  // predictions and probabilities, cumulative wall clock per exit.
  struct SampleEval {
    std::vector<double> head_entropy;           // num_heads
    std::vector<int> predicted;                 // num_heads + 1
    std::vector<std::vector<float>> probs;      // num_heads + 1
    std::vector<double> cum_seconds;            // num_heads + 1
  };
  std::vector<SampleEval> evals(inputs.size());

  for (size_t si = 0; si < inputs.size(); ++si) {
    SampleEval ev;
    Tensor cur = inputs[si];
    double clock = 0.0;
    for (size_t k = 0; k < m.segments.size(); ++k) {
      const auto t0 = std::chrono::steady_clock::now();
      cur = forward(m.segments[k], cur);
      Tensor logits;
      if (k < num_heads) logits = forward(m.heads[k].head, cur);
      const auto t1 = std::chrono::steady_clock::now();
      clock += std::chrono::duration<double>(t1 - t0).count();
      if (k < num_heads) {
        const std::vector<double> p = softmax_d(logits_row(logits));
        ev.head_entropy.push_back(entropy_d(p));
        ev.predicted.push_back(argmax_lowest(p));
        ev.probs.push_back(to_f32_vec(p));
        ev.cum_seconds.push_back(clock);
      }
    }
    const std::vector<double> row = logits_row(cur);
    const std::vector<double> p =
        graph_ends_in_softmax(m.segments.back()) ? row : softmax_d(row);
    ev.predicted.push_back(argmax_lowest(p));
    ev.probs.push_back(to_f32_vec(p));
    ev.cum_seconds.push_back(clock);
    evals[si] = std::move(ev);
  }

  grid.push_back(0.0);
  grid.push_back(std::log(static_cast<double>(m.num_classes)));
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  SweepReport rep;
  rep.accuracy_budget_pct = accuracy_budget_pct < 0.0
                                ? std::numeric_limits<double>::infinity()
                                : accuracy_budget_pct;
  const double n = static_cast<double>(inputs.size());
  for (double t : grid) {
    SweepPoint pt;
    pt.threshold = t;
    int correct = 0, early = 0, loyal = 0;
    double macs = 0.0, secs = 0.0, pl = 0.0;
    for (size_t si = 0; si < inputs.size(); ++si) {
      const SampleEval& ev = evals[si];
      size_t exit_k = num_heads;
      for (size_t k = 0; k < num_heads; ++k)
        if (ev.head_entropy[k] <= t) {
          exit_k = k;
          break;
        }
      if (ev.predicted[exit_k] == labels[si]) ++correct;
      if (exit_k < num_heads) ++early;
      macs += static_cast<double>(exit_macs[exit_k]);
      secs += ev.cum_seconds[exit_k];
      if (ev.predicted[exit_k] == ev.predicted[num_heads]) ++loyal;
      pl += 1.0 - std::sqrt(jsd_base2(ev.probs[num_heads], ev.probs[exit_k]));
    }
    pt.accuracy_pct = 100.0 * correct / n;
    pt.early_exit_rate_pct = 100.0 * early / n;
    pt.expected_macs = macs / n;
    pt.mean_latency_ms = 1000.0 * secs / n;
    pt.label_loyalty_pct = 100.0 * loyal / n;
    pt.prob_loyalty_pct = 100.0 * pl / n;
    rep.points.push_back(pt);
  }

  // acc_opt: max accuracy, ties to higher exit rate, then smaller threshold.
  int acc_i = 0;
  for (size_t i = 1; i < rep.points.size(); ++i) {
    const SweepPoint& a = rep.points[i];
    const SweepPoint& b = rep.points[acc_i];
    if (a.accuracy_pct > b.accuracy_pct ||
        (a.accuracy_pct == b.accuracy_pct &&
         a.early_exit_rate_pct > b.early_exit_rate_pct))
      acc_i = static_cast<int>(i);
  }
  rep.acc_opt_index = acc_i;

  // inf_opt: min expected MACs subject to the accuracy budget, ties to
  // higher accuracy, then smaller threshold.
  const double floor_acc =
      rep.points[acc_i].accuracy_pct - rep.accuracy_budget_pct;
  int inf_i = -1;
  for (size_t i = 0; i < rep.points.size(); ++i) {
    const SweepPoint& a = rep.points[i];
    if (a.accuracy_pct < floor_acc) continue;
    if (inf_i < 0) {
      inf_i = static_cast<int>(i);
      continue;
    }
    const SweepPoint& b = rep.points[inf_i];
    if (a.expected_macs < b.expected_macs ||
        (a.expected_macs == b.expected_macs && a.accuracy_pct > b.accuracy_pct))
      inf_i = static_cast<int>(i);
  }
  rep.inf_opt_index = inf_i < 0 ? acc_i : inf_i;
  return rep;
}

CascadeModel quantize_cascade(const CascadeModel& m, QuantMode mode,
                              const std::vector<Tensor>& calib_set,
                              const std::set<LayerKind>& covered_kinds) {
  CascadeModel out = m;
  if (mode == QuantMode::DQ) {
    for (Graph& s : out.segments) s = apply_dq(s, covered_kinds);
    for (ExitHead& h : out.heads) h.head = apply_dq(h.head, covered_kinds);
    return out;
  }
  if (calib_set.empty())
    fail(ErrorCode::EmptyCalibrationSet, "cascade calibration needs inputs");

  // Propagate the calibration set through the f32 pipeline, no exits taken;
  // each piece is calibrated and quantized independently on its own inputs.
  std::vector<std::vector<Tensor>> seg_inputs(m.segments.size());
  std::vector<std::vector<Tensor>> head_inputs(m.heads.size());
  for (const Tensor& sample : calib_set) {
    Tensor cur = sample;
    for (size_t k = 0; k < m.segments.size(); ++k) {
      seg_inputs[k].push_back(cur);
      cur = forward(m.segments[k], cur);
      if (k < m.heads.size()) head_inputs[k].push_back(cur);
    }
  }
  for (size_t k = 0; k < m.segments.size(); ++k) {
    const QuantPlan plan =
        calibrate(m.segments[k], seg_inputs[k], covered_kinds);
    out.segments[k] = apply_ptq(m.segments[k], plan);
  }
  for (size_t k = 0; k < m.heads.size(); ++k) {
    const QuantPlan plan =
        calibrate(m.heads[k].head, head_inputs[k], covered_kinds);
    out.heads[k].head = apply_ptq(m.heads[k].head, plan);
  }
  return out;
}

namespace {

std::string cascade_file_stem(const std::string& manifest_path) {
  fs::path p(manifest_path);
  std::string stem = p.stem().string();
  const std::string suffix = ".cascade";
  if (stem.size() > suffix.size() &&
      stem.compare(stem.size() - suffix.size(), suffix.size(), suffix) == 0)
    stem = stem.substr(0, stem.size() - suffix.size());
  return stem;
}

}  // namespace

void save_cascade(const CascadeModel& m, const std::string& manifest_path) {
  const fs::path dir = fs::path(manifest_path).parent_path();
  const std::string stem = cascade_file_stem(manifest_path);

  json j;
  j["format_version"] = 1;
  j["name"] = m.name;
  j["num_classes"] = m.num_classes;
  j["policy"] = json{{"measure", "entropy"}, {"threshold", m.policy.threshold}};
  json segs = json::array();
  for (size_t k = 0; k < m.segments.size(); ++k) {
    const std::string file = stem + "_seg" + std::to_string(k) + ".edgenet";
    save_model(m.segments[k], (dir / file).string());
    segs.push_back(file);
  }
  j["segments"] = segs;
  json heads = json::array();
  for (size_t k = 0; k < m.heads.size(); ++k) {
    const std::string file = stem + "_head" + std::to_string(k) + ".edgenet";
    save_model(m.heads[k].head, (dir / file).string());
    heads.push_back(json{{"file", file},
                         {"attach_point", m.heads[k].attach_point},
                         {"trained", m.heads[k].trained}});
  }
  j["heads"] = heads;

  std::ofstream f(manifest_path, std::ios::trunc);
  if (!f) fail(ErrorCode::IoError, "cannot write '" + manifest_path + "'");
  f << j.dump(2) << "\n";
  if (!f) fail(ErrorCode::IoError, "short write to '" + manifest_path + "'");
}

CascadeModel load_cascade(const std::string& manifest_path) {
  std::ifstream f(manifest_path);
  if (!f) fail(ErrorCode::IoError, "cannot open '" + manifest_path + "'");
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("cascade manifest: ") + e.what());
  }
  const fs::path dir = fs::path(manifest_path).parent_path();
  CascadeModel m;
  try {
    m.name = j.at("name").get<std::string>();
    m.num_classes = j.at("num_classes").get<int>();
    m.policy.threshold = j.at("policy").at("threshold").get<double>();
    for (const json& s : j.at("segments"))
      m.segments.push_back(load_model((dir / s.get<std::string>()).string()));
    for (const json& h : j.at("heads")) {
      ExitHead head;
      head.attach_point = h.at("attach_point").get<std::string>();
      head.trained = h.at("trained").get<bool>();
      head.head = load_model((dir / h.at("file").get<std::string>()).string());
      m.heads.push_back(std::move(head));
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("cascade manifest: ") + e.what());
  }
  if (m.segments.size() != m.heads.size() + 1)
    fail(ErrorCode::ParseError, "manifest needs heads + 1 segments");
  return m;
}

std::string SweepReport::to_json() const {
  json j;
  j["format_version"] = 1;
  json pts = json::array();
  json lat = json::array();
  for (const SweepPoint& p : points) {
    pts.push_back(json{{"threshold", p.threshold},
                       {"accuracy_pct", p.accuracy_pct},
                       {"early_exit_rate_pct", p.early_exit_rate_pct},
                       {"expected_macs", p.expected_macs},
                       {"label_loyalty_pct", p.label_loyalty_pct},
                       {"prob_loyalty_pct", p.prob_loyalty_pct}});
    lat.push_back(p.mean_latency_ms);
  }
  j["points"] = pts;
  j["runtime"] = json{{"mean_latency_ms", lat}};
  j["acc_opt_index"] = acc_opt_index;
  j["inf_opt_index"] = inf_opt_index;
  j["accuracy_budget_pct"] =
      std::isinf(accuracy_budget_pct) ? -1.0 : accuracy_budget_pct;
  return j.dump(2) + "\n";
}

SweepReport SweepReport::from_json(const std::string& text) {
  SweepReport r;
  try {
    const json j = json::parse(text);
    const json& lat = j.at("runtime").at("mean_latency_ms");
    size_t i = 0;
    for (const json& p : j.at("points")) {
      SweepPoint pt;
      pt.threshold = p.at("threshold").get<double>();
      pt.accuracy_pct = p.at("accuracy_pct").get<double>();
      pt.early_exit_rate_pct = p.at("early_exit_rate_pct").get<double>();
      pt.expected_macs = p.at("expected_macs").get<double>();
      pt.label_loyalty_pct = p.at("label_loyalty_pct").get<double>();
      pt.prob_loyalty_pct = p.at("prob_loyalty_pct").get<double>();
      pt.mean_latency_ms = lat.at(i++).get<double>();
      r.points.push_back(pt);
    }
    r.acc_opt_index = j.at("acc_opt_index").get<int>();
    r.inf_opt_index = j.at("inf_opt_index").get<int>();
    r.accuracy_budget_pct = j.at("accuracy_budget_pct").get<double>();
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("sweep report: ") + e.what());
  }
  return r;
}

std::string SweepReport::to_csv() const {
  std::ostringstream os;
  os << "threshold,accuracy_pct,early_exit_rate_pct,expected_macs,"
        "label_loyalty_pct,prob_loyalty_pct,mean_latency_ms\n";
  for (const SweepPoint& p : points) {
    os << p.threshold << "," << format2(p.accuracy_pct) << ","
       << format2(p.early_exit_rate_pct) << "," << p.expected_macs << ","
       << format2(p.label_loyalty_pct) << "," << format2(p.prob_loyalty_pct)
       << "," << format2(p.mean_latency_ms) << "\n";
  }
  return os.str();
}

std::string SweepReport::to_plot_data() const {
  std::ostringstream os;
  os << "# threshold accuracy_pct early_exit_rate_pct expected_macs\n";
  for (const SweepPoint& p : points)
    os << p.threshold << " " << p.accuracy_pct << " " << p.early_exit_rate_pct
       << " " << p.expected_macs << "\n";
  return os.str();
}

}  // namespace edgenet
