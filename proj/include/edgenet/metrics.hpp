#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace edgenet {

struct EvalRecord {
  int label = 0;
  int predicted = 0;               // argmax, ties to the lowest index
  std::vector<float> probs;
  int exit_index = 0;
  int final_exit_index = 0;        // equal to exit_index when no heads exist
  double latency_s = 0.0;
  int64_t macs_executed = 0;
};

// Percentages are reported in [0, 100].
double accuracy(const std::vector<EvalRecord>& records);

// Fraction of samples where the variant's argmax matches the baseline's.
double label_loyalty(const std::vector<EvalRecord>& variant,
                     const std::vector<EvalRecord>& baseline);

// 100 * mean over samples of (1 - sqrt(JSD2)), JSD2 the Jensen-Shannon
// divergence with log base 2 (in [0, 1]). Computed in double.
double probability_loyalty(const std::vector<EvalRecord>& variant,
                           const std::vector<EvalRecord>& baseline);

double jsd_base2(const std::vector<float>& p, const std::vector<float>& q);

// base_bytes / optimized_bytes. Errors: ZeroSize.
double compression_rate(int64_t base_bytes, int64_t optimized_bytes);

double early_exit_rate(const std::vector<EvalRecord>& records);

struct LatencyStats {
  double total_s = 0.0;
  double avg_ms = 0.0;
  std::optional<double> early_avg_ms;  // empty bucket serializes as "n/a"
  std::optional<double> final_avg_ms;
};

LatencyStats latency_stats(const std::vector<EvalRecord>& records);

double speed_up(double baseline_total_s, double variant_total_s);

double expected_macs(const std::vector<EvalRecord>& records);

// Display rounding: 2 decimals, half up. JSON keeps raw values; this is for
// CSV and console output.
double round2(double x);
std::string format2(double x);
std::string format_opt2(const std::optional<double>& x);  // "n/a" when empty

struct MetricsSummary {
  std::string variant;
  int64_t size_bytes = 0;
  double compression = 1.0;
  double accuracy_pct = 0.0;
  double label_loyalty_pct = 100.0;
  double prob_loyalty_pct = 100.0;
  double early_exit_rate_pct = 0.0;
  double expected_macs = 0.0;
  // Wall-clock block, excluded from determinism comparisons.
  double total_time_s = 0.0;
  double avg_ms = 0.0;
  std::optional<double> early_avg_ms;
  std::optional<double> final_avg_ms;
  double speed_up = 1.0;
  int64_t peak_rss_kb = 0;

  std::string to_json() const;
  static MetricsSummary from_json(const std::string& text);
  static std::string csv_header();
  std::string to_csv_row() const;
};

MetricsSummary summarize(const std::string& variant,
                         const std::vector<EvalRecord>& records,
                         const std::vector<EvalRecord>& baseline,
                         int64_t base_bytes, int64_t variant_bytes,
                         double baseline_total_s);

int64_t peak_rss_kb();

}  // namespace edgenet
