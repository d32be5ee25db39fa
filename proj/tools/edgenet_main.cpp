#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "edgenet/cascade.hpp"
#include "edgenet/costs.hpp"
#include "edgenet/dataset.hpp"
#include "edgenet/experiment.hpp"
#include "edgenet/forward.hpp"
#include "edgenet/kernels.hpp"
#include "edgenet/metrics.hpp"
#include "edgenet/prune.hpp"
#include "edgenet/quant.hpp"
#include "edgenet/serialize.hpp"
#include "edgenet/train.hpp"

using nlohmann::json;
using namespace edgenet;

namespace {

std::vector<int64_t> parse_shape(const std::string& s) {
  std::vector<int64_t> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, 'x')) {
    try {
      size_t used = 0;
      out.push_back(std::stoll(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      fail(ErrorCode::ParseError, "bad shape '" + s + "', expected e.g. 4x8x8");
    }
    if (out.back() <= 0)
      fail(ErrorCode::ParseError, "shape dims must be positive in '" + s + "'");
  }
  if (out.empty()) fail(ErrorCode::ParseError, "empty shape");
  return out;
}

// Dataset selection shared by the data-consuming subcommands: an idx pair,
// a csv file with an explicit per-sample shape, or generated samples.
struct DataOpts {
  std::string images, labels;
  std::string csv;
  std::string shape;
  bool synthetic = false;
  int classes = 4;
  int samples = 256;
  uint64_t seed = 1;
  double sigma = 0.05;
  double hard_fraction = 0.0;
  double hard_sigma = 0.35;
};

void add_data_options(CLI::App* cmd, DataOpts& d) {
  cmd->add_option("--images", d.images, "idx image file");
  cmd->add_option("--labels", d.labels, "idx label file");
  cmd->add_option("--csv", d.csv, "csv file, label first then pixels");
  cmd->add_option("--shape", d.shape, "per-sample shape, e.g. 4x8x8");
  cmd->add_flag("--synthetic", d.synthetic, "generate class-blob samples");
  cmd->add_option("--classes", d.classes, "synthetic class count");
  cmd->add_option("--samples", d.samples, "synthetic sample count");
  cmd->add_option("--data-seed", d.seed, "synthetic rng seed");
  cmd->add_option("--sigma", d.sigma, "synthetic noise sigma");
  cmd->add_option("--hard-fraction", d.hard_fraction,
                  "fraction of samples drawn at --hard-sigma");
  cmd->add_option("--hard-sigma", d.hard_sigma, "noise sigma for hard samples");
}

DatasetRef to_ref(const DataOpts& d) {
  DatasetRef r;
  if (!d.images.empty() || !d.labels.empty()) {
    if (d.images.empty() || d.labels.empty())
      fail(ErrorCode::ParseError, "--images and --labels go together");
    r.kind = "idx";
    r.images = d.images;
    r.labels = d.labels;
    return r;
  }
  if (!d.csv.empty()) {
    if (d.shape.empty())
      fail(ErrorCode::ParseError, "--csv needs --shape");
    r.kind = "csv";
    r.path = d.csv;
    r.shape = parse_shape(d.shape);
    return r;
  }
  if (d.synthetic) {
    r.kind = "synthetic";
    r.synthetic.num_classes = d.classes;
    r.synthetic.samples = d.samples;
    r.synthetic.shape = d.shape.empty() ? std::vector<int64_t>{4, 8, 8}
                                        : parse_shape(d.shape);
    r.synthetic.seed = d.seed;
    r.synthetic.noise_sigma = d.sigma;
    r.synthetic.hard_fraction = d.hard_fraction;
    r.synthetic.hard_sigma = d.hard_sigma;
    return r;
  }
  fail(ErrorCode::ParseError,
       "no dataset given (use --images/--labels, --csv, or --synthetic)");
}

void print_summary_text(const MetricsSummary& s) {
  std::printf("%-20s %s\n", "variant", s.variant.c_str());
  std::printf("%-20s %lld\n", "size_bytes",
              static_cast<long long>(s.size_bytes));
  std::printf("%-20s %s\n", "compression", format2(s.compression).c_str());
  std::printf("%-20s %s\n", "accuracy_pct", format2(s.accuracy_pct).c_str());
  std::printf("%-20s %s\n", "label_loyalty_pct",
              format2(s.label_loyalty_pct).c_str());
  std::printf("%-20s %s\n", "prob_loyalty_pct",
              format2(s.prob_loyalty_pct).c_str());
  std::printf("%-20s %s\n", "early_exit_rate_pct",
              format2(s.early_exit_rate_pct).c_str());
  std::printf("%-20s %s\n", "expected_macs", format2(s.expected_macs).c_str());
  std::printf("%-20s %s\n", "avg_ms", format2(s.avg_ms).c_str());
  std::printf("%-20s %s\n", "early_avg_ms",
              format_opt2(s.early_avg_ms).c_str());
  std::printf("%-20s %s\n", "final_avg_ms",
              format_opt2(s.final_avg_ms).c_str());
  std::printf("%-20s %s\n", "speed_up", format2(s.speed_up).c_str());
}

void print_summary_table(const std::vector<MetricsSummary>& rows) {
  std::printf("%-16s %10s %6s %7s %7s %7s %7s %14s %8s %7s\n", "variant",
              "bytes", "comp", "acc%", "loyal%", "ploy%", "exit%", "macs",
              "avg_ms", "xspeed");
  for (const MetricsSummary& s : rows)
    std::printf("%-16s %10lld %6s %7s %7s %7s %7s %14s %8s %7s\n",
                s.variant.c_str(), static_cast<long long>(s.size_bytes),
                format2(s.compression).c_str(), format2(s.accuracy_pct).c_str(),
                format2(s.label_loyalty_pct).c_str(),
                format2(s.prob_loyalty_pct).c_str(),
                format2(s.early_exit_rate_pct).c_str(),
                format2(s.expected_macs).c_str(), format2(s.avg_ms).c_str(),
                format2(s.speed_up).c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"edgenet: compress and stage CNN classifiers for small devices"};
  app.require_subcommand(1);

  // gen-data
  auto* gd = app.add_subcommand("gen-data", "write a labeled dataset to disk");
  struct {
    DataOpts data;
    std::string out = "data";
    std::string format = "csv";
    bool json = false;
    int threads = 1;
  } gdo;
  gdo.data.synthetic = true;
  add_data_options(gd, gdo.data);
  gd->add_option("--out", gdo.out, "output path prefix")->required();
  gd->add_option("--format", gdo.format, "csv or idx")
      ->check(CLI::IsMember({"csv", "idx"}));
  gd->add_flag("--json", gdo.json, "print machine-readable result");
  gd->add_option("--threads", gdo.threads, "worker threads");
  gd->callback([&]() {
    set_num_threads(gdo.threads);
    const Dataset ds = load_dataset(to_ref(gdo.data));
    std::vector<std::string> files;
    if (gdo.format == "idx") {
      files = {gdo.out + "-images.idx", gdo.out + "-labels.idx"};
      save_idx(ds, files[0], files[1]);
    } else {
      files = {gdo.out + ".csv"};
      save_csv(ds, files[0]);
    }
    if (gdo.json) {
      json j{{"files", files},
             {"samples", ds.size()},
             {"classes", ds.num_classes},
             {"provenance", ds.provenance}};
      std::cout << j.dump(2) << "\n";
    } else {
      for (const std::string& f : files) std::printf("wrote %s\n", f.c_str());
      std::printf("%zu samples, %d classes\n", ds.size(), ds.num_classes);
    }
  });

  // gen-model
  auto* gm = app.add_subcommand("gen-model", "write a seeded toy classifier");
  struct {
    std::string out;
    std::string arch = "toy-residual";
    std::string input_shape = "1x4x8x8";
    int channels = 8;
    int classes = 4;
    uint64_t seed = 1;
    bool json = false;
  } gmo;
  gm->add_option("--out", gmo.out, "output model path")->required();
  gm->add_option("--arch", gmo.arch, "toy-residual, toy-depthwise, or linear");
  gm->add_option("--input-shape", gmo.input_shape, "e.g. 1x4x8x8");
  gm->add_option("--channels", gmo.channels, "width of the first stage");
  gm->add_option("--classes", gmo.classes, "classifier width");
  gm->add_option("--seed", gmo.seed, "weight init seed");
  gm->add_flag("--json", gmo.json, "print machine-readable result");
  gm->callback([&]() {
    BackboneSpec bs;
    bs.arch = gmo.arch;
    bs.input_shape = parse_shape(gmo.input_shape);
    bs.channels = gmo.channels;
    bs.num_classes = gmo.classes;
    bs.seed = gmo.seed;
    const Graph g = make_backbone(bs);
    save_model(g, gmo.out);
    const CostReport cr = count_macs(g);
    if (gmo.json) {
      json j{{"file", gmo.out},
             {"name", g.name},
             {"layers", g.layers.size()},
             {"total_macs", cr.total_macs},
             {"param_count", cr.param_count},
             {"serialized_bytes", cr.serialized_bytes}};
      std::cout << j.dump(2) << "\n";
    } else {
      std::printf("wrote %s: %zu layers, %lld MACs, %lld params, %lld bytes\n",
                  gmo.out.c_str(), g.layers.size(),
                  static_cast<long long>(cr.total_macs),
                  static_cast<long long>(cr.param_count),
                  static_cast<long long>(cr.serialized_bytes));
    }
  });

  // prune
  auto* pr = app.add_subcommand("prune", "remove low-magnitude filters");
  struct {
    std::string model, out, report;
    double ratio = 0.0;
    int granularity = 16;
    bool prune_residual = false;
    bool unstructured = false;
    bool json = false;
    int threads = 1;
  } pro;
  pr->add_option("--model", pro.model, "input model")->required();
  pr->add_option("--out", pro.out, "output model")->required();
  pr->add_option("--ratio", pro.ratio, "fraction of filters to drop")
      ->required();
  pr->add_option("--granularity", pro.granularity,
                 "kept channel counts stay multiples of this");
  pr->add_flag("--prune-residual", pro.prune_residual,
               "also prune channel sets feeding Add layers");
  pr->add_flag("--unstructured", pro.unstructured,
               "zero individual weights instead of removing filters");
  pr->add_option("--report", pro.report, "write the per-layer report here");
  pr->add_flag("--json", pro.json, "print machine-readable result");
  pr->add_option("--threads", pro.threads, "worker threads");
  pr->callback([&]() {
    set_num_threads(pro.threads);
    const Graph g = load_model(pro.model);
    if (pro.unstructured) {
      const UnstructuredResult r =
          prune_unstructured_mask(g, static_cast<float>(pro.ratio));
      save_model(r.graph, pro.out);
      if (pro.json) {
        json j{{"file", pro.out}, {"sparsity", r.sparsity}};
        std::cout << j.dump(2) << "\n";
      } else {
        std::printf("wrote %s, weight sparsity %.4f\n", pro.out.c_str(),
                    r.sparsity);
      }
      return;
    }
    PruneConfig cfg;
    cfg.prune_ratio = static_cast<float>(pro.ratio);
    cfg.channel_granularity = pro.granularity;
    cfg.protect_residual_io = !pro.prune_residual;
    const PruneResult r = prune_structured(g, cfg);
    save_model(r.graph, pro.out);
    if (!pro.report.empty()) {
      std::ofstream f(pro.report, std::ios::trunc);
      if (!f) fail(ErrorCode::IoError, "cannot write '" + pro.report + "'");
      f << r.report.to_json();
    }
    if (pro.json) {
      std::cout << r.report.to_json();
    } else {
      std::printf("wrote %s: params %lld -> %lld (compression %s)\n",
                  pro.out.c_str(),
                  static_cast<long long>(r.report.params_before),
                  static_cast<long long>(r.report.params_after),
                  format2(r.report.compression_rate).c_str());
    }
  });

  // calibrate
  auto* ca = app.add_subcommand("calibrate",
                                "record activation ranges for quantization");
  struct {
    std::string model, out, preset = "full-graph";
    DataOpts data;
    bool json = false;
    int threads = 1;
  } cao;
  ca->add_option("--model", cao.model, "input model")->required();
  ca->add_option("--out", cao.out, "plan output path")->required();
  ca->add_option("--preset", cao.preset,
                 "efficientnet-style, shufflenet-style, or full-graph");
  add_data_options(ca, cao.data);
  ca->add_flag("--json", cao.json, "print machine-readable result");
  ca->add_option("--threads", cao.threads, "worker threads");
  ca->callback([&]() {
    set_num_threads(cao.threads);
    const Graph g = load_model(cao.model);
    const Dataset ds = load_dataset(to_ref(cao.data));
    const QuantPlan plan = calibrate(g, ds.inputs, quant_preset(cao.preset));
    std::ofstream f(cao.out, std::ios::trunc);
    if (!f) fail(ErrorCode::IoError, "cannot write '" + cao.out + "'");
    f << plan.to_json();
    if (cao.json) {
      std::cout << plan.to_json();
    } else {
      std::printf("wrote %s: %zu tensor ranges, %zu weight params\n",
                  cao.out.c_str(), plan.calibration.size(),
                  plan.weight_qp.size());
    }
  });

  // quantize
  auto* qz = app.add_subcommand("quantize", "convert covered layers to uint8");
  struct {
    std::string model, out, plan, preset = "full-graph", mode = "ptq";
    DataOpts data;
    bool json = false;
    int threads = 1;
  } qzo;
  qz->add_option("--model", qzo.model, "input model")->required();
  qz->add_option("--out", qzo.out, "output model")->required();
  qz->add_option("--mode", qzo.mode, "ptq (calibrated) or dq (per-inference)")
      ->check(CLI::IsMember({"ptq", "dq"}));
  qz->add_option("--preset", qzo.preset,
                 "efficientnet-style, shufflenet-style, or full-graph");
  qz->add_option("--plan", qzo.plan, "reuse a saved calibration plan");
  add_data_options(qz, qzo.data);
  qz->add_flag("--json", qzo.json, "print machine-readable result");
  qz->add_option("--threads", qzo.threads, "worker threads");
  qz->callback([&]() {
    set_num_threads(qzo.threads);
    const Graph g = load_model(qzo.model);
    Graph q;
    if (qzo.mode == "dq") {
      q = apply_dq(g, quant_preset(qzo.preset));
    } else if (!qzo.plan.empty()) {
      std::ifstream f(qzo.plan);
      if (!f) fail(ErrorCode::IoError, "cannot open '" + qzo.plan + "'");
      std::ostringstream os;
      os << f.rdbuf();
      q = apply_ptq(g, QuantPlan::from_json(os.str()));
    } else {
      const Dataset ds = load_dataset(to_ref(qzo.data));
      q = apply_ptq(g, calibrate(g, ds.inputs, quant_preset(qzo.preset)));
    }
    save_model(q, qzo.out);
    const int64_t before = static_cast<int64_t>(serialize_model(g).size());
    const int64_t after = static_cast<int64_t>(serialize_model(q).size());
    if (qzo.json) {
      json j{{"file", qzo.out},
             {"bytes_before", before},
             {"bytes_after", after},
             {"compression", compression_rate(before, after)}};
      std::cout << j.dump(2) << "\n";
    } else {
      std::printf("wrote %s: %lld -> %lld bytes (compression %s)\n",
                  qzo.out.c_str(), static_cast<long long>(before),
                  static_cast<long long>(after),
                  format2(compression_rate(before, after)).c_str());
    }
  });

  // train-exits
  auto* te = app.add_subcommand("train-exits",
                                "attach and fit confidence-gated exit heads");
  struct {
    std::string model, out, preset = "simple";
    std::vector<std::string> attach;
    DataOpts data;
    TrainConfig cfg;
    uint64_t seed = 1;
    double threshold = 0.0;
    bool json = false;
    int threads = 1;
  } teo;
  te->add_option("--model", teo.model, "backbone model")->required();
  te->add_option("--out", teo.out, "cascade manifest output path")->required();
  te->add_option("--attach", teo.attach, "tensor names to attach heads at")
      ->required();
  te->add_option("--preset", teo.preset, "head preset: simple or block");
  add_data_options(te, teo.data);
  te->add_option("--epochs", teo.cfg.epochs, "training epochs");
  te->add_option("--batch", teo.cfg.batch_size, "minibatch size");
  te->add_option("--lr", teo.cfg.learning_rate, "sgd learning rate");
  te->add_option("--train-seed", teo.cfg.seed, "shuffle seed");
  te->add_option("--seed", teo.seed, "head init seed");
  te->add_option("--threshold", teo.threshold,
                 "entropy gate stored in the manifest");
  te->add_flag("--json", teo.json, "print machine-readable result");
  te->add_option("--threads", teo.threads, "worker threads");
  te->callback([&]() {
    set_num_threads(teo.threads);
    const Graph g = load_model(teo.model);
    std::vector<HeadSpec> specs;
    for (const std::string& a : teo.attach)
      specs.push_back(HeadSpec{a, teo.preset});
    CascadeModel m = build_cascade(g, specs, teo.seed);
    const Dataset ds = load_dataset(to_ref(teo.data));
    const TrainReport rep = train_exit_heads(m, ds.inputs, ds.labels, teo.cfg);
    m.policy.threshold = teo.threshold;
    save_cascade(m, teo.out);
    if (teo.json) {
      json j{{"file", teo.out}, {"loss_per_epoch", rep.loss_per_epoch}};
      std::cout << j.dump(2) << "\n";
    } else {
      std::printf("wrote %s\n", teo.out.c_str());
      for (size_t k = 0; k < rep.loss_per_epoch.size(); ++k) {
        const auto& l = rep.loss_per_epoch[k];
        std::printf("head %zu at %s: loss %.4f -> %.4f over %zu epochs\n", k,
                    m.heads[k].attach_point.c_str(), l.empty() ? 0.0 : l.front(),
                    l.empty() ? 0.0 : l.back(), l.size());
      }
    }
  });

  // sweep
  auto* sw = app.add_subcommand("sweep", "trace the entropy-threshold curve");
  struct {
    std::string cascade, out, csv, dat, grid;
    DataOpts data;
    int points = 25;
    double budget = -1.0;
    bool json = false;
    int threads = 1;
  } swo;
  sw->add_option("--cascade", swo.cascade, "cascade manifest")->required();
  sw->add_option("--out", swo.out, "sweep report output path")->required();
  sw->add_option("--csv-out", swo.csv, "also write the table as csv");
  sw->add_option("--dat", swo.dat, "also write whitespace plot data");
  sw->add_option("--points", swo.points, "grid size over [0, ln classes]");
  sw->add_option("--grid", swo.grid, "explicit comma-separated thresholds");
  sw->add_option("--budget", swo.budget,
                 "allowed accuracy drop (pct) for the cheap operating point");
  add_data_options(sw, swo.data);
  sw->add_flag("--json", swo.json, "print machine-readable result");
  sw->add_option("--threads", swo.threads, "worker threads");
  sw->callback([&]() {
    set_num_threads(swo.threads);
    const CascadeModel m = load_cascade(swo.cascade);
    const Dataset ds = load_dataset(to_ref(swo.data));
    std::vector<double> grid;
    if (!swo.grid.empty()) {
      std::stringstream ss(swo.grid);
      std::string tok;
      while (std::getline(ss, tok, ','))
        try {
          grid.push_back(std::stod(tok));
        } catch (const std::exception&) {
          fail(ErrorCode::ParseError, "bad grid value '" + tok + "'");
        }
    } else {
      const double top = std::log(static_cast<double>(m.num_classes));
      const int n = std::max(swo.points, 2);
      for (int i = 0; i < n; ++i) grid.push_back(top * i / (n - 1));
    }
    const SweepReport rep =
        sweep_thresholds(m, ds.inputs, ds.labels, grid, swo.budget);
    std::ofstream f(swo.out, std::ios::trunc);
    if (!f) fail(ErrorCode::IoError, "cannot write '" + swo.out + "'");
    f << rep.to_json();
    if (!swo.csv.empty()) {
      std::ofstream c(swo.csv, std::ios::trunc);
      if (!c) fail(ErrorCode::IoError, "cannot write '" + swo.csv + "'");
      c << rep.to_csv();
    }
    if (!swo.dat.empty()) {
      std::ofstream d(swo.dat, std::ios::trunc);
      if (!d) fail(ErrorCode::IoError, "cannot write '" + swo.dat + "'");
      d << rep.to_plot_data();
    }
    if (swo.json) {
      std::cout << rep.to_json();
    } else {
      const SweepPoint& a = rep.acc_opt();
      const SweepPoint& i = rep.inf_opt();
      std::printf("%zu grid points written to %s\n", rep.points.size(),
                  swo.out.c_str());
      std::printf("accuracy-optimal  T=%.4f acc=%s%% exits=%s%% macs=%s\n",
                  a.threshold, format2(a.accuracy_pct).c_str(),
                  format2(a.early_exit_rate_pct).c_str(),
                  format2(a.expected_macs).c_str());
      std::printf("cheapest-in-budget T=%.4f acc=%s%% exits=%s%% macs=%s\n",
                  i.threshold, format2(i.accuracy_pct).c_str(),
                  format2(i.early_exit_rate_pct).c_str(),
                  format2(i.expected_macs).c_str());
    }
  });

  // infer
  auto* in = app.add_subcommand("infer", "classify one sample");
  struct {
    std::string model, cascade;
    DataOpts data;
    int index = 0;
    double threshold = -1.0;
    bool json = false;
    int threads = 1;
  } ino;
  in->add_option("--model", ino.model, "plain model to run");
  in->add_option("--cascade", ino.cascade, "cascade manifest to run");
  in->add_option("--index", ino.index, "sample index in the dataset");
  in->add_option("--threshold", ino.threshold,
                 "entropy gate override for cascades");
  add_data_options(in, ino.data);
  in->add_flag("--json", ino.json, "print machine-readable result");
  in->add_option("--threads", ino.threads, "worker threads");
  in->callback([&]() {
    set_num_threads(ino.threads);
    if (ino.model.empty() == ino.cascade.empty())
      fail(ErrorCode::ParseError, "give exactly one of --model / --cascade");
    const Dataset ds = load_dataset(to_ref(ino.data));
    if (ino.index < 0 || static_cast<size_t>(ino.index) >= ds.size())
      fail(ErrorCode::ParseError,
           "--index out of range for " + std::to_string(ds.size()) + " samples");
    const Tensor& x = ds.inputs[ino.index];

    int predicted = 0, exit_index = 0, exits = 0;
    int64_t macs = 0;
    std::vector<float> probs;
    if (!ino.model.empty()) {
      const Graph g = load_model(ino.model);
      const Tensor out = forward(g, x);
      std::vector<double> row(out.f32.begin(), out.f32.end());
      const bool ends_softmax = !g.layers.empty() &&
                                g.layers.back().kind == LayerKind::Softmax;
      const std::vector<double> p = ends_softmax ? row : softmax_d(row);
      for (size_t i = 0; i < p.size(); ++i)
        if (p[i] > p[predicted]) predicted = static_cast<int>(i);
      probs.assign(p.begin(), p.end());
      macs = count_macs(g).total_macs;
    } else {
      const CascadeModel m = load_cascade(ino.cascade);
      const double t = ino.threshold < 0 ? m.policy.threshold : ino.threshold;
      const Prediction pred = cascade_infer(m, x, t);
      predicted = pred.predicted;
      probs = pred.probs;
      exit_index = pred.exit_index;
      exits = static_cast<int>(m.heads.size());
      macs = pred.macs_executed;
    }
    if (ino.json) {
      json j{{"predicted", predicted},
             {"label", ds.labels[ino.index]},
             {"probs", probs},
             {"exit_index", exit_index},
             {"final_exit_index", exits},
             {"macs_executed", macs}};
      std::cout << j.dump(2) << "\n";
    } else {
      std::printf("predicted %d (label %d), exit %d/%d, %lld MACs\n", predicted,
                  ds.labels[ino.index], exit_index, exits,
                  static_cast<long long>(macs));
      std::printf("probs:");
      for (float p : probs) std::printf(" %.4f", p);
      std::printf("\n");
    }
  });

  // eval
  auto* ev = app.add_subcommand("eval", "score a model over a dataset");
  struct {
    std::string model, cascade, baseline;
    DataOpts data;
    double threshold = -1.0;
    bool json = false;
    int threads = 1;
  } evo;
  ev->add_option("--model", evo.model, "plain model to score");
  ev->add_option("--cascade", evo.cascade, "cascade manifest to score");
  ev->add_option("--baseline", evo.baseline,
                 "plain model the loyalty metrics compare against");
  ev->add_option("--threshold", evo.threshold,
                 "entropy gate override for cascades");
  add_data_options(ev, evo.data);
  ev->add_flag("--json", evo.json, "print machine-readable result");
  ev->add_option("--threads", evo.threads, "worker threads");
  ev->callback([&]() {
    set_num_threads(evo.threads);
    if (evo.model.empty() == evo.cascade.empty())
      fail(ErrorCode::ParseError, "give exactly one of --model / --cascade");
    const Dataset ds = load_dataset(to_ref(evo.data));

    std::string variant;
    std::vector<EvalRecord> recs;
    int64_t bytes = 0;
    if (!evo.model.empty()) {
      const Graph g = load_model(evo.model);
      recs = evaluate_graph(g, ds);
      bytes = static_cast<int64_t>(serialize_model(g).size());
      variant = g.name;
    } else {
      const CascadeModel m = load_cascade(evo.cascade);
      const double t = evo.threshold < 0 ? m.policy.threshold : evo.threshold;
      recs = evaluate_cascade(m, ds, t);
      for (const Graph& s : m.segments)
        bytes += static_cast<int64_t>(serialize_model(s).size());
      for (const ExitHead& h : m.heads)
        bytes += static_cast<int64_t>(serialize_model(h.head).size());
      variant = m.name;
    }

    std::vector<EvalRecord> base = recs;
    int64_t base_bytes = bytes;
    double base_total = 0.0;
    for (const EvalRecord& r : recs) base_total += r.latency_s;
    if (!evo.baseline.empty()) {
      const Graph bg = load_model(evo.baseline);
      base = evaluate_graph(bg, ds);
      base_bytes = static_cast<int64_t>(serialize_model(bg).size());
      base_total = 0.0;
      for (const EvalRecord& r : base) base_total += r.latency_s;
    }
    const MetricsSummary s =
        summarize(variant, recs, base, base_bytes, bytes, base_total);
    if (evo.json)
      std::cout << s.to_json();
    else
      print_summary_text(s);
  });

  // report
  auto* rp = app.add_subcommand("report",
                                "run a full experiment from a config file");
  struct {
    std::string config;
    int threads = 0;
    bool json = false;
  } rpo;
  rp->add_option("--config", rpo.config, "experiment config json")->required();
  rp->add_option("--threads", rpo.threads, "override the config thread count");
  rp->add_flag("--json", rpo.json, "print the full report");
  rp->callback([&]() {
    ExperimentConfig cfg = ExperimentConfig::load(rpo.config);
    if (rpo.threads > 0) cfg.threads = rpo.threads;
    const ExperimentResult res = run_experiment(cfg);
    if (rpo.json) {
      std::cout << res.to_json();
    } else {
      print_summary_table(res.summaries);
      std::printf("artifacts in %s:", cfg.output_dir.c_str());
      for (const std::string& a : res.artifacts) std::printf(" %s", a.c_str());
      std::printf("\n");
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::fprintf(stderr, "error [%s]: %s\n", error_code_name(e.code()),
                 e.what());
    return 1;
  }
  return 0;
}
