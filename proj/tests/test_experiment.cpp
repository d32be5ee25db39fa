#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "edgenet/costs.hpp"
#include "edgenet/experiment.hpp"
#include "edgenet/forward.hpp"
#include "edgenet/serialize.hpp"
#include "checks.hpp"
#include "helpers.hpp"

using namespace edgenet;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void strip_runtime(json& j) {
  if (j.is_object()) {
    j.erase("runtime");
    for (auto& [k, v] : j.items()) {
      (void)k;
      strip_runtime(v);
    }
  } else if (j.is_array()) {
    for (json& v : j) strip_runtime(v);
  }
}

std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  CHECK(static_cast<bool>(f), ("missing artifact: " + p.string()).c_str());
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

DatasetRef synthetic_ref(int samples, uint64_t seed) {
  DatasetRef r;
  r.kind = "synthetic";
  r.synthetic.num_classes = 4;
  r.synthetic.samples = samples;
  r.synthetic.shape = {4, 8, 8};
  r.synthetic.seed = seed;
  return r;
}

}  // namespace

void run_experiment_tests() {
  printf("=== experiment driver ===\n");

  {
    // Seeded toy backbones.
    for (const char* arch : {"toy-residual", "toy-depthwise", "linear"}) {
      BackboneSpec spec;
      spec.arch = arch;
      spec.seed = 14;
      Graph g = make_backbone(spec);
      validate(g);
      const Tensor y = forward(g, testutil::random_tensor({1, 4, 8, 8}, 1));
      CHECK((y.shape == std::vector<int64_t>{1, 4}), "logits shape");
      CHECK(count_macs(g).total_macs > 0, "nonzero cost");
      Graph h = make_backbone(spec);
      CHECK(graphs_equal(g, h), "same spec, same graph");
      BackboneSpec other = spec;
      other.seed = 15;
      CHECK(!graphs_equal(make_backbone(other), g), "seed changes weights");
    }
    bool has_add = false, has_dw = false, has_bn = false;
    for (const LayerSpec& l : make_backbone({}).layers)
      has_add = has_add || l.kind == LayerKind::Add;
    CHECK(has_add, "residual arch contains an Add");
    BackboneSpec dwspec;
    dwspec.arch = "toy-depthwise";
    for (const LayerSpec& l : make_backbone(dwspec).layers) {
      has_dw = has_dw || l.kind == LayerKind::DepthwiseConv2D;
      has_bn = has_bn || l.kind == LayerKind::BatchNormFolded;
    }
    CHECK(has_dw && has_bn, "depthwise arch contains dw and folded bn");
    BackboneSpec bad;
    bad.arch = "resnet50";
    CHECK_THROWS_CODE(make_backbone(bad), ErrorCode::ParseError);
  }

  {
    // Technique names round trip.
    const Technique all[] = {Technique::Base,   Technique::Prune,
                             Technique::PTQ,    Technique::DQ,
                             Technique::EE,     Technique::PTQ_EE,
                             Technique::DQ_EE};
    for (Technique t : all)
      CHECK(technique_from_name(technique_name(t)) == t,
            "technique name round trip");
    CHECK(std::string(technique_name(Technique::PTQ_EE)) == "ptq-ee",
          "combined technique spelling");
    CHECK_THROWS_CODE(technique_from_name("distillation"),
                      ErrorCode::ParseError);
  }

  {
    // evaluate_graph fills the record contract.
    Graph g = make_backbone({});
    SyntheticSpec spec;
    spec.samples = 12;
    spec.seed = 77;
    Dataset ds = gen_synthetic(spec);
    const std::vector<EvalRecord> recs = evaluate_graph(g, ds);
    CHECK(recs.size() == ds.size(), "one record per sample");
    const int64_t macs = count_macs(g).total_macs;
    for (size_t i = 0; i < recs.size(); ++i) {
      const EvalRecord& r = recs[i];
      CHECK(r.label == ds.labels[i], "label copied");
      CHECK(r.exit_index == 0 && r.final_exit_index == 0,
            "plain graphs have no exits");
      CHECK(r.macs_executed == macs, "full cost on every sample");
      CHECK(r.probs.size() == 4, "one probability per class");
      double sum = 0.0;
      int arg = 0;
      for (size_t c = 0; c < r.probs.size(); ++c) {
        sum += r.probs[c];
        if (r.probs[c] > r.probs[arg]) arg = static_cast<int>(c);
      }
      CHECK_NEAR(sum, 1.0, 1e-5, "probabilities normalized");
      CHECK(r.predicted == arg, "argmax prediction");
      CHECK(r.latency_s >= 0.0, "nonnegative latency");
    }
  }

  {
    // Config serialization round trip.
    ExperimentConfig c;
    c.name = "roundtrip";
    c.model_path = "builtin:toy-residual";
    c.technique = Technique::PTQ_EE;
    c.train = synthetic_ref(48, 2);
    c.calib = synthetic_ref(8, 3);
    c.eval = synthetic_ref(24, 4);
    c.seed = 9;
    c.threads = 2;
    c.fit_final = false;
    c.output_dir = "somewhere";
    c.prune.prune_ratio = 0.25;
    c.prune.channel_granularity = 8;
    c.quant_preset = "shufflenet-style";
    c.exit_heads = {{"add3_out", "simple"}, {"pool3_out", "block"}};
    c.head_cfg.epochs = 3;
    c.grid = {0.1, 0.7};
    c.accuracy_budget_pct = 2.0;
    const std::string j1 = c.to_json();
    const std::string j2 = ExperimentConfig::from_json(j1).to_json();
    CHECK(j1 == j2, "config JSON round trip");

    json tampered = json::parse(j1);
    tampered["config_version"] = 2;
    CHECK_THROWS_CODE(ExperimentConfig::from_json(tampered.dump()),
                      ErrorCode::FormatVersionMismatch);
    CHECK_THROWS_CODE(ExperimentConfig::from_json("{ not json"),
                      ErrorCode::ParseError);
    CHECK_THROWS_CODE(ExperimentConfig::load("/nonexistent/config.json"),
                      ErrorCode::IoError);

    DatasetRef bad;
    bad.kind = "parquet";
    CHECK_THROWS_CODE(load_dataset(bad), ErrorCode::ParseError);
  }

  const fs::path dir = fs::temp_directory_path() / "edgenet_experiment_test";
  fs::remove_all(dir);

  {
    // A base run writes its artifacts and is perfectly loyal to itself.
    ExperimentConfig c;
    c.name = "base-run";
    c.model_path = "builtin:toy-residual";
    c.technique = Technique::Base;
    c.eval = synthetic_ref(24, 4);
    c.fit_final = false;
    c.output_dir = (dir / "base").string();
    ExperimentResult res = run_experiment(c);
    CHECK(res.summaries.size() == 1, "base produces one summary");
    const MetricsSummary& s = res.summaries[0];
    CHECK(s.variant == "base", "base summary first");
    CHECK(s.label_loyalty_pct == 100.0 && s.prob_loyalty_pct == 100.0,
          "base is loyal to itself");
    CHECK(s.compression == 1.0 && s.speed_up == 1.0, "base is its own unit");
    CHECK(s.early_exit_rate_pct == 0.0, "no exits without heads");
    for (const char* rel : {"model_base.edgenet", "summary.csv",
                            "report.json"}) {
      bool listed = false;
      for (const std::string& a : res.artifacts) listed = listed || a == rel;
      CHECK(listed, "artifact listed");
      CHECK(fs::exists(dir / "base" / rel), "artifact written");
    }
    const std::string csv = read_file(dir / "base" / "summary.csv");
    CHECK(csv.rfind(MetricsSummary::csv_header(), 0) == 0,
          "summary csv starts with the header");
    const Graph reloaded =
        load_model((dir / "base" / "model_base.edgenet").string());
    CHECK(count_macs(reloaded).total_macs == s.expected_macs,
          "saved model matches the reported cost");
    json rep = json::parse(read_file(dir / "base" / "report.json"));
    CHECK(rep.contains("summaries") && rep.contains("format_version"),
          "report shape");
  }

  {
    // Early-exit runs are deterministic modulo runtime blocks.
    ExperimentConfig c;
    c.name = "ee-run";
    c.model_path = "builtin:toy-residual";
    c.technique = Technique::EE;
    c.train = synthetic_ref(48, 2);
    c.eval = synthetic_ref(24, 4);
    c.seed = 9;
    c.fit_final = false;
    c.exit_heads = {{"add3_out", "simple"}};
    c.head_cfg.epochs = 4;
    c.head_cfg.batch_size = 16;
    c.head_cfg.learning_rate = 0.1;
    c.grid_points = 7;
    c.output_dir = (dir / "ee1").string();
    ExperimentResult r1 = run_experiment(c);
    c.output_dir = (dir / "ee2").string();
    ExperimentResult r2 = run_experiment(c);

    CHECK(r1.summaries.size() == 3, "base, accuracy and efficiency points");
    CHECK(r1.summaries[1].variant == "ee-acc-opt" &&
              r1.summaries[2].variant == "ee-inf-opt",
          "both operating points reported");
    CHECK(r1.sweep.has_value(), "sweep attached to the result");
    CHECK(r1.sweep->points.size() >= 7, "grid plus endpoints");

    json a = json::parse(r1.to_json());
    json b = json::parse(r2.to_json());
    strip_runtime(a);
    strip_runtime(b);
    CHECK(a.dump(2) == b.dump(2), "reports agree modulo runtime");

    for (const char* rel :
         {"model_base.edgenet", "ee.cascade.json", "ee_seg0.edgenet",
          "ee_seg1.edgenet", "ee_head0.edgenet", "sweep.json", "sweep.csv",
          "sweep.dat", "summary.csv", "report.json"})
      CHECK(fs::exists(dir / "ee1" / rel), "cascade artifact written");
    // Latency columns live only in sweep.csv / summary.csv / the runtime
    // JSON blocks; everything else must be byte-identical across runs.
    for (const char* rel :
         {"model_base.edgenet", "ee.cascade.json", "ee_seg0.edgenet",
          "ee_seg1.edgenet", "ee_head0.edgenet", "sweep.dat"})
      CHECK(read_file(dir / "ee1" / rel) == read_file(dir / "ee2" / rel),
            "cascade artifact deterministic");
    json s1 = json::parse(read_file(dir / "ee1" / "sweep.json"));
    json s2 = json::parse(read_file(dir / "ee2" / "sweep.json"));
    strip_runtime(s1);
    strip_runtime(s2);
    CHECK(s1.dump(2) == s2.dump(2), "sweeps agree modulo runtime");
  }

  fs::remove_all(dir);
  printf("experiment driver: ok\n");
}
