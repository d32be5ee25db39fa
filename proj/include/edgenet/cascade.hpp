#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "edgenet/graph.hpp"
#include "edgenet/quant.hpp"

namespace edgenet {

// Shannon entropy in nats of a probability vector; 0*log(0) == 0; result
// clamped into [0, ln n]. Errors: InvalidDistribution (negative entry or sum
// off 1 by more than 1e-5), EmptyInput.
float entropy(const std::vector<float>& probs);
double entropy_d(const std::vector<double>& probs);

struct ExitPolicy {
  // Exit at the first head whose prediction entropy is <= threshold.
  double threshold = 0.0;
};

struct ExitHead {
  std::string attach_point;  // tensor name in the original backbone
  Graph head;                // maps the attach tensor to num_classes logits
  bool trained = false;
};

// Sequential partition of a backbone. Concatenating all segments reproduces
// the original layer sequence exactly; head k consumes the boundary tensor
// after segment k. Segment boundaries carry f32 tensors even when segments
// are quantized.
struct CascadeModel {
  std::string name;
  int num_classes = 0;
  std::vector<Graph> segments;  // heads.size() + 1 of them
  std::vector<ExitHead> heads;
  ExitPolicy policy;
};

struct HeadSpec {
  std::string attach_point;
  std::string preset = "simple";  // "simple" or "block"
};

// simple: GlobalAvgPool, Flatten, FullyConnected
// block:  Conv2D 3x3 (same channels), ReLU, GlobalAvgPool, Flatten,
//         FullyConnected
// Head weights are seeded uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases 0.
// Errors: UnknownAttachPoint, AttachAtTerminal, and attach points where more
// than the boundary tensor crosses the cut are rejected.
CascadeModel attach_exit(const Graph& g, const std::string& attach_point,
                         const std::string& preset, uint64_t seed);
CascadeModel build_cascade(const Graph& g, const std::vector<HeadSpec>& heads,
                           uint64_t seed);

struct Prediction {
  std::vector<float> probs;
  int predicted = 0;   // argmax, ties to the lowest index
  int exit_index = 0;  // heads.size() means the final classifier
  int64_t macs_executed = 0;
  std::vector<double> segment_seconds;  // wall clock per executed segment
};

Prediction cascade_infer(const CascadeModel& m, const Tensor& input);
Prediction cascade_infer(const CascadeModel& m, const Tensor& input,
                         double threshold);

// MACs of segments 0..k plus heads 0..k when exiting at head k; all segments
// and all heads at the final exit.
std::vector<int64_t> cascade_exit_macs(const CascadeModel& m);
int64_t backbone_macs(const CascadeModel& m);

struct SweepPoint {
  double threshold = 0.0;
  double accuracy_pct = 0.0;
  double early_exit_rate_pct = 0.0;
  double expected_macs = 0.0;
  double label_loyalty_pct = 0.0;  // vs the final-only path
  double prob_loyalty_pct = 0.0;
  double mean_latency_ms = 0.0;    // informational, excluded from determinism
};

struct SweepReport {
  std::vector<SweepPoint> points;  // ascending threshold
  int acc_opt_index = 0;
  int inf_opt_index = 0;
  double accuracy_budget_pct = 0.0;  // infinity means unconstrained

  const SweepPoint& acc_opt() const { return points[acc_opt_index]; }
  const SweepPoint& inf_opt() const { return points[inf_opt_index]; }

  std::string to_json() const;
  static SweepReport from_json(const std::string& text);
  std::string to_csv() const;
  // Two-column-per-metric whitespace table for plotting tools.
  std::string to_plot_data() const;
};

// Evaluates the cascade once per sample (entropies and per-exit predictions
// are threshold-independent) and derives every grid point from that. The grid
// is sorted ascending and the endpoints 0 and ln(num_classes) are inserted
// when missing. acc_opt maximizes accuracy with ties to higher exit rate then
// smaller threshold; inf_opt minimizes expected MACs subject to accuracy >=
// acc_opt - budget, ties to higher accuracy then smaller threshold.
// Errors: EmptyEvalSet, UntrainedHead, LabelOutOfRange.
SweepReport sweep_thresholds(const CascadeModel& m,
                             const std::vector<Tensor>& inputs,
                             const std::vector<int>& labels,
                             std::vector<double> grid,
                             double accuracy_budget_pct);

// Quantizes every segment and head independently, after partitioning.
// PTQ mode calibrates each piece with the f32 boundary activations of the
// calibration set; DQ needs no calibration inputs. Boundary tensors stay f32.
CascadeModel quantize_cascade(const CascadeModel& m, QuantMode mode,
                              const std::vector<Tensor>& calib_set,
                              const std::set<LayerKind>& covered_kinds);

// Manifest JSON naming the per-segment / per-head model files next to it.
void save_cascade(const CascadeModel& m, const std::string& manifest_path);
CascadeModel load_cascade(const std::string& manifest_path);

}  // namespace edgenet
