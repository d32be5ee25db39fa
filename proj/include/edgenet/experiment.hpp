#pragma once

#include <optional>
#include <string>
#include <vector>

#include "edgenet/cascade.hpp"
#include "edgenet/dataset.hpp"
#include "edgenet/metrics.hpp"
#include "edgenet/prune.hpp"
#include "edgenet/train.hpp"

namespace edgenet {

inline constexpr int kConfigVersion = 1;

enum class Technique { Base, Prune, PTQ, DQ, EE, PTQ_EE, DQ_EE };

const char* technique_name(Technique t);
Technique technique_from_name(const std::string& s);

struct DatasetRef {
  std::string kind;  // "idx", "csv", "synthetic"
  std::string images;            // idx
  std::string labels;            // idx
  std::string path;              // csv
  std::vector<int64_t> shape;    // csv per-sample shape
  SyntheticSpec synthetic;       // synthetic
};

Dataset load_dataset(const DatasetRef& ref);

struct ExperimentConfig {
  std::string name = "experiment";
  std::string model_path;
  Technique technique = Technique::Base;
  DatasetRef train;
  DatasetRef calib;
  DatasetRef eval;
  uint64_t seed = 1;
  int threads = 1;
  bool fit_final = true;
  TrainConfig fit_cfg;   // final-classifier refit
  std::string output_dir = "out";

  PruneConfig prune;
  std::string quant_preset = "full-graph";

  std::vector<HeadSpec> exit_heads;
  TrainConfig head_cfg;
  int grid_points = 25;                 // linspace over [0, ln num_classes]
  std::vector<double> grid;             // explicit grid wins when non-empty
  double accuracy_budget_pct = -1.0;    // negative means unconstrained

  std::string to_json() const;
  static ExperimentConfig from_json(const std::string& text);
  static ExperimentConfig load(const std::string& path);
};

struct ExperimentResult {
  std::vector<MetricsSummary> summaries;  // base first
  std::optional<PruneReport> prune_report;
  std::optional<SweepReport> sweep;
  std::vector<std::string> artifacts;  // files written under output_dir

  // All wall-clock fields live under "runtime" keys so deterministic content
  // can be compared byte for byte.
  std::string to_json() const;
};

// Runs the full pipeline for cfg.technique, writes report.json, summary.csv
// and the per-technique artifacts into cfg.output_dir, and returns the
// result. Deterministic apart from "runtime" blocks given identical config
// and seed.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

std::vector<EvalRecord> evaluate_graph(const Graph& g, const Dataset& ds);
std::vector<EvalRecord> evaluate_cascade(const CascadeModel& m,
                                         const Dataset& ds, double threshold);

// Seeded toy backbones (imported-artifact stand-ins).
struct BackboneSpec {
  std::string arch = "toy-residual";  // toy-residual | toy-depthwise | linear
  std::vector<int64_t> input_shape = {1, 4, 8, 8};
  int num_classes = 4;
  int channels = 8;
  uint64_t seed = 1;
};

Graph make_backbone(const BackboneSpec& spec);

}  // namespace edgenet
