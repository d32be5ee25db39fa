#include "edgenet/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "edgenet/costs.hpp"
#include "edgenet/forward.hpp"
#include "edgenet/kernels.hpp"
#include "edgenet/quant.hpp"
#include "edgenet/serialize.hpp"

namespace edgenet {

using nlohmann::json;
namespace fs = std::filesystem;

const char* technique_name(Technique t) {
  switch (t) {
    case Technique::Base:
      return "base";
    case Technique::Prune:
      return "prune";
    case Technique::PTQ:
      return "ptq";
    case Technique::DQ:
      return "dq";
    case Technique::EE:
      return "ee";
    case Technique::PTQ_EE:
      return "ptq-ee";
    case Technique::DQ_EE:
      return "dq-ee";
  }
  fail(ErrorCode::ParseError, "bad technique enum");
}

Technique technique_from_name(const std::string& s) {
  for (Technique t : {Technique::Base, Technique::Prune, Technique::PTQ,
                      Technique::DQ, Technique::EE, Technique::PTQ_EE,
                      Technique::DQ_EE})
    if (s == technique_name(t)) return t;
  fail(ErrorCode::ParseError, "unknown technique '" + s + "'");
}

Dataset load_dataset(const DatasetRef& ref) {
  if (ref.kind == "idx") return load_idx(ref.images, ref.labels);
  if (ref.kind == "csv") return load_csv(ref.path, ref.shape);
  if (ref.kind == "synthetic") return gen_synthetic(ref.synthetic);
  fail(ErrorCode::ParseError, "unknown dataset kind '" + ref.kind + "'");
}

namespace {

json train_to_json(const TrainConfig& c) {
  return json{{"epochs", c.epochs},
              {"batch_size", c.batch_size},
              {"learning_rate", c.learning_rate},
              {"seed", c.seed}};
}

TrainConfig train_from_json(const json& j) {
  TrainConfig c;
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.seed = j.value("seed", c.seed);
  return c;
}

json ref_to_json(const DatasetRef& r) {
  json j;
  const std::string kind = r.kind.empty() ? "synthetic" : r.kind;
  j["kind"] = kind;
  if (kind == "idx") {
    j["images"] = r.images;
    j["labels"] = r.labels;
  } else if (kind == "csv") {
    j["path"] = r.path;
    j["shape"] = r.shape;
  } else {
    j["classes"] = r.synthetic.num_classes;
    j["samples"] = r.synthetic.samples;
    j["shape"] = r.synthetic.shape;
    j["seed"] = r.synthetic.seed;
    j["noise_sigma"] = r.synthetic.noise_sigma;
    j["hard_fraction"] = r.synthetic.hard_fraction;
    j["hard_sigma"] = r.synthetic.hard_sigma;
  }
  return j;
}

DatasetRef ref_from_json(const json& j) {
  DatasetRef r;
  r.kind = j.value("kind", std::string("synthetic"));
  if (r.kind == "idx") {
    r.images = j.value("images", std::string());
    r.labels = j.value("labels", std::string());
  } else if (r.kind == "csv") {
    r.path = j.value("path", std::string());
    r.shape = j.value("shape", std::vector<int64_t>());
  } else {
    r.synthetic.num_classes = j.value("classes", r.synthetic.num_classes);
    r.synthetic.samples = j.value("samples", r.synthetic.samples);
    r.synthetic.shape = j.value("shape", r.synthetic.shape);
    r.synthetic.seed = j.value("seed", r.synthetic.seed);
    r.synthetic.noise_sigma = j.value("noise_sigma", r.synthetic.noise_sigma);
    r.synthetic.hard_fraction =
        j.value("hard_fraction", r.synthetic.hard_fraction);
    r.synthetic.hard_sigma = j.value("hard_sigma", r.synthetic.hard_sigma);
  }
  return r;
}

}  // namespace

std::string ExperimentConfig::to_json() const {
  json j;
  j["config_version"] = kConfigVersion;
  j["name"] = name;
  j["model"] = model_path;
  j["technique"] = technique_name(technique);
  j["seed"] = seed;
  j["threads"] = threads;
  j["fit_final"] = fit_final;
  j["fit_cfg"] = train_to_json(fit_cfg);
  j["output_dir"] = output_dir;
  j["datasets"] = json{{"train", ref_to_json(train)},
                       {"calib", ref_to_json(calib)},
                       {"eval", ref_to_json(eval)}};
  j["prune"] = json{{"prune_ratio", prune.prune_ratio},
                    {"channel_granularity", prune.channel_granularity},
                    {"protect_residual_io", prune.protect_residual_io}};
  j["quant_preset"] = quant_preset;
  json heads = json::array();
  for (const HeadSpec& h : exit_heads)
    heads.push_back(
        json{{"attach_point", h.attach_point}, {"preset", h.preset}});
  j["exits"] = json{{"heads", heads},
                    {"train", train_to_json(head_cfg)},
                    {"grid_points", grid_points},
                    {"grid", grid},
                    {"accuracy_budget_pct", accuracy_budget_pct}};
  return j.dump(2) + "\n";
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
  ExperimentConfig c;
  try {
    const json j = json::parse(text);
    const int ver = j.value("config_version", kConfigVersion);
    if (ver != kConfigVersion)
      fail(ErrorCode::FormatVersionMismatch,
           "config version " + std::to_string(ver));
    c.name = j.value("name", c.name);
    c.model_path = j.value("model", c.model_path);
    c.technique = technique_from_name(j.value("technique", "base"));
    c.seed = j.value("seed", c.seed);
    c.threads = j.value("threads", c.threads);
    c.fit_final = j.value("fit_final", c.fit_final);
    if (j.contains("fit_cfg")) c.fit_cfg = train_from_json(j.at("fit_cfg"));
    c.output_dir = j.value("output_dir", c.output_dir);
    if (j.contains("datasets")) {
      const json& d = j.at("datasets");
      if (d.contains("train")) c.train = ref_from_json(d.at("train"));
      if (d.contains("calib")) c.calib = ref_from_json(d.at("calib"));
      if (d.contains("eval")) c.eval = ref_from_json(d.at("eval"));
    }
    if (j.contains("prune")) {
      const json& p = j.at("prune");
      c.prune.prune_ratio = p.value("prune_ratio", c.prune.prune_ratio);
      c.prune.channel_granularity =
          p.value("channel_granularity", c.prune.channel_granularity);
      c.prune.protect_residual_io =
          p.value("protect_residual_io", c.prune.protect_residual_io);
    }
    c.quant_preset = j.value("quant_preset", c.quant_preset);
    if (j.contains("exits")) {
      const json& e = j.at("exits");
      for (const json& h : e.value("heads", json::array()))
        c.exit_heads.push_back(
            HeadSpec{h.value("attach_point", std::string()),
                     h.value("preset", std::string("simple"))});
      if (e.contains("train")) c.head_cfg = train_from_json(e.at("train"));
      c.grid_points = e.value("grid_points", c.grid_points);
      c.grid = e.value("grid", c.grid);
      c.accuracy_budget_pct =
          e.value("accuracy_budget_pct", c.accuracy_budget_pct);
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("experiment config: ") + e.what());
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail(ErrorCode::IoError, "cannot open '" + path + "'");
  std::ostringstream os;
  os << f.rdbuf();
  return from_json(os.str());
}

namespace {

int argmax_lowest(const std::vector<double>& p) {
  int best = 0;
  for (size_t i = 1; i < p.size(); ++i)
    if (p[i] > p[best]) best = static_cast<int>(i);
  return best;
}

void seeded_init(Graph& g, uint64_t seed) {
  std::seed_seq seq{seed, uint64_t{0x6261636bu}};
  std::mt19937_64 rng(seq);
  for (LayerSpec& l : g.layers) {
    if (!layer_kind_has_weights(l.kind)) continue;
    if (l.kind == LayerKind::BatchNormFolded) {
      std::uniform_real_distribution<float> gamma(0.9f, 1.1f);
      for (float& w : l.weight->f32) w = gamma(rng);
      for (float& b : l.bias->f32) b = 0.0f;
      continue;
    }
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
}

}  // namespace

Graph make_backbone(const BackboneSpec& spec) {
  if (spec.input_shape.size() != 4)
    fail(ErrorCode::ShapeMismatch, "backbone input is (N, C, H, W)");
  if (spec.num_classes <= 0)
    fail(ErrorCode::InvalidGraph, "num_classes must be positive");
  if (spec.channels <= 0)
    fail(ErrorCode::InvalidGraph, "channels must be positive");

  Graph g;
  g.name = spec.arch;
  g.num_classes = spec.num_classes;
  g.input.name = "input";
  g.input.shape = spec.input_shape;

  std::string cur = "input";
  int cur_c = static_cast<int>(spec.input_shape[1]);
  int cur_h = static_cast<int>(spec.input_shape[2]);
  int cur_w = static_cast<int>(spec.input_shape[3]);

  auto conv = [&](const std::string& name, int cout, int k, int s, int p) {
    LayerSpec l;
    l.name = name;
    l.kind = LayerKind::Conv2D;
    l.attrs.in_channels = cur_c;
    l.attrs.out_channels = cout;
    l.attrs.kernel_h = l.attrs.kernel_w = k;
    l.attrs.stride_h = l.attrs.stride_w = s;
    l.attrs.pad_h = l.attrs.pad_w = p;
    l.inputs = {cur};
    l.output = name + "_out";
    l.weight = Tensor::zeros_f32({cout, cur_c, k, k});
    l.bias = Tensor::zeros_f32({cout});
    cur = l.output;
    cur_c = cout;
    cur_h = (cur_h + 2 * p - k) / s + 1;
    cur_w = (cur_w + 2 * p - k) / s + 1;
    g.layers.push_back(std::move(l));
  };
  auto depthwise = [&](const std::string& name, int k, int s, int p) {
    LayerSpec l;
    l.name = name;
    l.kind = LayerKind::DepthwiseConv2D;
    l.attrs.in_channels = l.attrs.out_channels = cur_c;
    l.attrs.kernel_h = l.attrs.kernel_w = k;
    l.attrs.stride_h = l.attrs.stride_w = s;
    l.attrs.pad_h = l.attrs.pad_w = p;
    l.inputs = {cur};
    l.output = name + "_out";
    l.weight = Tensor::zeros_f32({cur_c, 1, k, k});
    l.bias = Tensor::zeros_f32({cur_c});
    cur = l.output;
    cur_h = (cur_h + 2 * p - k) / s + 1;
    cur_w = (cur_w + 2 * p - k) / s + 1;
    g.layers.push_back(std::move(l));
  };
  auto plain = [&](const std::string& name, LayerKind kind) {
    LayerSpec l;
    l.name = name;
    l.kind = kind;
    l.inputs = {cur};
    l.output = name + "_out";
    cur = l.output;
    g.layers.push_back(std::move(l));
  };
  auto bn = [&](const std::string& name) {
    LayerSpec l;
    l.name = name;
    l.kind = LayerKind::BatchNormFolded;
    l.attrs.in_channels = l.attrs.out_channels = cur_c;
    l.inputs = {cur};
    l.output = name + "_out";
    l.weight = Tensor::zeros_f32({cur_c});
    l.bias = Tensor::zeros_f32({cur_c});
    cur = l.output;
    g.layers.push_back(std::move(l));
  };
  auto pool = [&](const std::string& name, LayerKind kind, int k, int s) {
    LayerSpec l;
    l.name = name;
    l.kind = kind;
    l.attrs.kernel_h = l.attrs.kernel_w = k;
    l.attrs.stride_h = l.attrs.stride_w = s;
    l.inputs = {cur};
    l.output = name + "_out";
    cur = l.output;
    cur_h = (cur_h - k) / s + 1;
    cur_w = (cur_w - k) / s + 1;
    g.layers.push_back(std::move(l));
  };
  auto add_residual = [&](const std::string& name, const std::string& other) {
    LayerSpec l;
    l.name = name;
    l.kind = LayerKind::Add;
    l.inputs = {cur, other};
    l.output = name + "_out";
    cur = l.output;
    g.layers.push_back(std::move(l));
  };
  auto gap_flatten_fc = [&]() {
    plain("gap", LayerKind::GlobalAvgPool);
    cur_h = cur_w = 1;
    plain("flatten", LayerKind::Flatten);
    LayerSpec l;
    l.name = "fc";
    l.kind = LayerKind::FullyConnected;
    l.attrs.in_channels = cur_c;
    l.attrs.out_channels = spec.num_classes;
    l.inputs = {cur};
    l.output = "logits";
    l.weight = Tensor::zeros_f32({spec.num_classes, cur_c});
    l.bias = Tensor::zeros_f32({spec.num_classes});
    cur = l.output;
    g.layers.push_back(std::move(l));
  };

  const int ch = spec.channels;
  if (spec.arch == "toy-residual") {
    conv("conv1", ch, 3, 1, 1);
    plain("relu1", LayerKind::ReLU);
    conv("conv2", ch, 3, 1, 1);
    plain("relu2", LayerKind::ReLU);
    conv("conv3", ch, 3, 1, 1);
    add_residual("add3", "relu1_out");
    plain("relu3", LayerKind::ReLU);
    pool("pool3", LayerKind::MaxPool, 2, 2);
    conv("conv4", 2 * ch, 3, 1, 1);
    plain("relu4", LayerKind::ReLU);
    gap_flatten_fc();
  } else if (spec.arch == "toy-depthwise") {
    conv("conv1", ch, 3, 1, 1);
    bn("bn1");
    plain("act1", LayerKind::ReLU6);
    depthwise("dw2", 3, 1, 1);
    plain("act2", LayerKind::ReLU6);
    conv("conv3", 2 * ch, 1, 1, 0);
    plain("act3", LayerKind::ReLU6);
    pool("pool3", LayerKind::AvgPool, 2, 2);
    depthwise("dw4", 3, 1, 1);
    plain("act4", LayerKind::ReLU6);
    gap_flatten_fc();
  } else if (spec.arch == "linear") {
    plain("flatten", LayerKind::Flatten);
    cur_c = cur_c * cur_h * cur_w;
    LayerSpec l;
    l.name = "fc";
    l.kind = LayerKind::FullyConnected;
    l.attrs.in_channels = cur_c;
    l.attrs.out_channels = spec.num_classes;
    l.inputs = {cur};
    l.output = "logits";
    l.weight = Tensor::zeros_f32({spec.num_classes, cur_c});
    l.bias = Tensor::zeros_f32({spec.num_classes});
    g.layers.push_back(std::move(l));
  } else {
    fail(ErrorCode::ParseError, "unknown arch '" + spec.arch + "'");
  }
  g.output = "logits";
  seeded_init(g, spec.seed);
  validate(g);
  return g;
}

std::vector<EvalRecord> evaluate_graph(const Graph& g, const Dataset& ds) {
  if (ds.inputs.empty()) fail(ErrorCode::EmptyEvalSet, "no samples");
  if (ds.inputs.size() != ds.labels.size())
    fail(ErrorCode::LengthMismatch, "inputs vs labels");
  const int64_t macs = count_macs(g).total_macs;
  const bool ends_softmax = !g.layers.empty() &&
                            g.layers.back().kind == LayerKind::Softmax &&
                            g.layers.back().output == g.output;

  std::vector<EvalRecord> records;
  records.reserve(ds.inputs.size());
  for (size_t i = 0; i < ds.inputs.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    const Tensor out = forward(g, ds.inputs[i]);
    const auto t1 = std::chrono::steady_clock::now();
    std::vector<double> row(out.f32.begin(), out.f32.end());
    if (!ends_softmax) row = softmax_d(row);
    EvalRecord r;
    r.label = ds.labels[i];
    r.predicted = argmax_lowest(row);
    r.probs.assign(row.begin(), row.end());
    r.exit_index = 0;
    r.final_exit_index = 0;
    r.latency_s = std::chrono::duration<double>(t1 - t0).count();
    r.macs_executed = macs;
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<EvalRecord> evaluate_cascade(const CascadeModel& m,
                                         const Dataset& ds, double threshold) {
  if (ds.inputs.empty()) fail(ErrorCode::EmptyEvalSet, "no samples");
  if (ds.inputs.size() != ds.labels.size())
    fail(ErrorCode::LengthMismatch, "inputs vs labels");
  std::vector<EvalRecord> records;
  records.reserve(ds.inputs.size());
  for (size_t i = 0; i < ds.inputs.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    const Prediction pred = cascade_infer(m, ds.inputs[i], threshold);
    const auto t1 = std::chrono::steady_clock::now();
    EvalRecord r;
    r.label = ds.labels[i];
    r.predicted = pred.predicted;
    r.probs = pred.probs;
    r.exit_index = pred.exit_index;
    r.final_exit_index = static_cast<int>(m.heads.size());
    r.latency_s = std::chrono::duration<double>(t1 - t0).count();
    r.macs_executed = pred.macs_executed;
    records.push_back(std::move(r));
  }
  return records;
}

namespace {

Graph load_backbone(const ExperimentConfig& cfg) {
  if (cfg.model_path.rfind("builtin:", 0) == 0) {
    BackboneSpec bs;
    bs.arch = cfg.model_path.substr(8);
    bs.seed = cfg.seed;
    return make_backbone(bs);
  }
  return load_model(cfg.model_path);
}

std::vector<double> linspace_grid(int points, int num_classes) {
  const double top = std::log(static_cast<double>(num_classes));
  if (points < 2) return {0.0, top};
  std::vector<double> g(points);
  for (int i = 0; i < points; ++i)
    g[i] = top * static_cast<double>(i) / static_cast<double>(points - 1);
  return g;
}

int64_t cascade_bytes(const CascadeModel& m) {
  int64_t total = 0;
  for (const Graph& s : m.segments)
    total += static_cast<int64_t>(serialize_model(s).size());
  for (const ExitHead& h : m.heads)
    total += static_cast<int64_t>(serialize_model(h.head).size());
  return total;
}

double total_latency(const std::vector<EvalRecord>& records) {
  double t = 0.0;
  for (const EvalRecord& r : records) t += r.latency_s;
  return t;
}

}  // namespace

std::string ExperimentResult::to_json() const {
  json j;
  j["format_version"] = 1;
  json arr = json::array();
  for (const MetricsSummary& s : summaries) arr.push_back(json::parse(s.to_json()));
  j["summaries"] = arr;
  if (prune_report.has_value())
    j["prune_report"] = json::parse(prune_report->to_json());
  if (sweep.has_value()) j["sweep"] = json::parse(sweep->to_json());
  j["artifacts"] = artifacts;
  return j.dump(2) + "\n";
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  set_num_threads(cfg.threads);
  const fs::path outdir(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(outdir, ec);
  if (ec) fail(ErrorCode::IoError, "cannot create '" + cfg.output_dir + "'");

  ExperimentResult res;
  auto emit = [&](const std::string& rel, const std::string& bytes) {
    std::ofstream f(outdir / rel, std::ios::binary | std::ios::trunc);
    if (!f)
      fail(ErrorCode::IoError, "cannot write '" + (outdir / rel).string() + "'");
    f << bytes;
    if (!f)
      fail(ErrorCode::IoError, "short write to '" + (outdir / rel).string() + "'");
    res.artifacts.push_back(rel);
  };

  const bool wants_exits = cfg.technique == Technique::EE ||
                           cfg.technique == Technique::PTQ_EE ||
                           cfg.technique == Technique::DQ_EE;
  const bool wants_calib = cfg.technique == Technique::PTQ ||
                           cfg.technique == Technique::PTQ_EE;
  const bool wants_train = cfg.fit_final || wants_exits;

  Graph g = load_backbone(cfg);
  const Dataset eval_ds = load_dataset(cfg.eval);
  Dataset train_ds, calib_ds;
  if (wants_train) train_ds = load_dataset(cfg.train);
  if (wants_calib) calib_ds = load_dataset(cfg.calib);

  if (cfg.fit_final)
    g = fit_final_classifier(g, train_ds.inputs, train_ds.labels, cfg.fit_cfg);

  const std::string base_blob = serialize_model(g);
  const int64_t base_bytes = static_cast<int64_t>(base_blob.size());
  const std::vector<EvalRecord> base_recs = evaluate_graph(g, eval_ds);
  const double base_total = total_latency(base_recs);
  res.summaries.push_back(summarize("base", base_recs, base_recs, base_bytes,
                                    base_bytes, base_total));
  emit("model_base.edgenet", base_blob);

  const std::string tech = technique_name(cfg.technique);
  switch (cfg.technique) {
    case Technique::Base:
      break;
    case Technique::Prune: {
      PruneResult pr = prune_structured(g, cfg.prune);
      const std::string blob = serialize_model(pr.graph);
      const auto recs = evaluate_graph(pr.graph, eval_ds);
      res.summaries.push_back(summarize(tech, recs, base_recs, base_bytes,
                                        static_cast<int64_t>(blob.size()),
                                        base_total));
      res.prune_report = pr.report;
      emit("model_prune.edgenet", blob);
      emit("prune_report.json", pr.report.to_json());
      break;
    }
    case Technique::PTQ: {
      const std::set<LayerKind> kinds = quant_preset(cfg.quant_preset);
      const QuantPlan plan = calibrate(g, calib_ds.inputs, kinds);
      const Graph q = apply_ptq(g, plan);
      const std::string blob = serialize_model(q);
      const auto recs = evaluate_graph(q, eval_ds);
      res.summaries.push_back(summarize(tech, recs, base_recs, base_bytes,
                                        static_cast<int64_t>(blob.size()),
                                        base_total));
      emit("model_ptq.edgenet", blob);
      emit("quant_plan.json", plan.to_json());
      break;
    }
    case Technique::DQ: {
      const std::set<LayerKind> kinds = quant_preset(cfg.quant_preset);
      const Graph q = apply_dq(g, kinds);
      const std::string blob = serialize_model(q);
      const auto recs = evaluate_graph(q, eval_ds);
      res.summaries.push_back(summarize(tech, recs, base_recs, base_bytes,
                                        static_cast<int64_t>(blob.size()),
                                        base_total));
      emit("model_dq.edgenet", blob);
      break;
    }
    case Technique::EE:
    case Technique::PTQ_EE:
    case Technique::DQ_EE: {
      CascadeModel m = build_cascade(g, cfg.exit_heads, cfg.seed);
      train_exit_heads(m, train_ds.inputs, train_ds.labels, cfg.head_cfg);
      if (cfg.technique == Technique::PTQ_EE)
        m = quantize_cascade(m, QuantMode::PTQ, calib_ds.inputs,
                             quant_preset(cfg.quant_preset));
      else if (cfg.technique == Technique::DQ_EE)
        m = quantize_cascade(m, QuantMode::DQ, {},
                             quant_preset(cfg.quant_preset));

      const std::vector<double> grid =
          cfg.grid.empty() ? linspace_grid(cfg.grid_points, m.num_classes)
                           : cfg.grid;
      const SweepReport sweep = sweep_thresholds(
          m, eval_ds.inputs, eval_ds.labels, grid, cfg.accuracy_budget_pct);
      res.sweep = sweep;

      const int64_t bytes = cascade_bytes(m);
      const auto acc_recs =
          evaluate_cascade(m, eval_ds, sweep.acc_opt().threshold);
      res.summaries.push_back(summarize(tech + "-acc-opt", acc_recs, base_recs,
                                        base_bytes, bytes, base_total));
      const auto inf_recs =
          evaluate_cascade(m, eval_ds, sweep.inf_opt().threshold);
      res.summaries.push_back(summarize(tech + "-inf-opt", inf_recs, base_recs,
                                        base_bytes, bytes, base_total));

      m.policy.threshold = sweep.acc_opt().threshold;
      const std::string manifest = tech + ".cascade.json";
      save_cascade(m, (outdir / manifest).string());
      res.artifacts.push_back(manifest);
      for (size_t k = 0; k < m.segments.size(); ++k)
        res.artifacts.push_back(tech + "_seg" + std::to_string(k) + ".edgenet");
      for (size_t k = 0; k < m.heads.size(); ++k)
        res.artifacts.push_back(tech + "_head" + std::to_string(k) +
                                ".edgenet");
      emit("sweep.json", sweep.to_json());
      emit("sweep.csv", sweep.to_csv());
      emit("sweep.dat", sweep.to_plot_data());
      break;
    }
  }

  std::ostringstream csv;
  csv << MetricsSummary::csv_header() << "\n";
  for (const MetricsSummary& s : res.summaries) csv << s.to_csv_row() << "\n";
  emit("summary.csv", csv.str());

  res.artifacts.push_back("report.json");
  {
    std::ofstream f(outdir / "report.json", std::ios::binary | std::ios::trunc);
    if (!f) fail(ErrorCode::IoError, "cannot write report.json");
    f << res.to_json();
    if (!f) fail(ErrorCode::IoError, "short write to report.json");
  }
  return res;
}

}  // namespace edgenet
