#include "edgenet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <sys/resource.h>

#include <nlohmann/json.hpp>

#include "edgenet/error.hpp"

namespace edgenet {

using nlohmann::json;

double accuracy(const std::vector<EvalRecord>& records) {
  if (records.empty()) fail(ErrorCode::EmptyRecords, "accuracy of no records");
  int correct = 0;
  for (const EvalRecord& r : records)
    if (r.predicted == r.label) ++correct;
  return 100.0 * correct / static_cast<double>(records.size());
}

double label_loyalty(const std::vector<EvalRecord>& variant,
                     const std::vector<EvalRecord>& baseline) {
  if (variant.empty()) fail(ErrorCode::EmptyRecords, "loyalty of no records");
  if (variant.size() != baseline.size())
    fail(ErrorCode::LengthMismatch, "variant vs baseline records");
  int same = 0;
  for (size_t i = 0; i < variant.size(); ++i)
    if (variant[i].predicted == baseline[i].predicted) ++same;
  return 100.0 * same / static_cast<double>(variant.size());
}

double jsd_base2(const std::vector<float>& p, const std::vector<float>& q) {
  if (p.empty()) fail(ErrorCode::EmptyInput, "jsd of empty distributions");
  if (p.size() != q.size()) fail(ErrorCode::LengthMismatch, "jsd inputs");
  double d = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    const double pi = p[i], qi = q[i];
    if (pi < 0.0 || qi < 0.0 || !std::isfinite(pi) || !std::isfinite(qi))
      fail(ErrorCode::InvalidDistribution, "probability out of range");
    const double mi = 0.5 * (pi + qi);
    if (pi > 0.0) d += 0.5 * pi * std::log2(pi / mi);
    if (qi > 0.0) d += 0.5 * qi * std::log2(qi / mi);
  }
  // Mathematically in [0, 1]; clamp away roundoff before callers take sqrt.
  return std::clamp(d, 0.0, 1.0);
}

double probability_loyalty(const std::vector<EvalRecord>& variant,
                           const std::vector<EvalRecord>& baseline) {
  if (variant.empty()) fail(ErrorCode::EmptyRecords, "loyalty of no records");
  if (variant.size() != baseline.size())
    fail(ErrorCode::LengthMismatch, "variant vs baseline records");
  double total = 0.0;
  for (size_t i = 0; i < variant.size(); ++i)
    total += 1.0 - std::sqrt(jsd_base2(baseline[i].probs, variant[i].probs));
  return 100.0 * total / static_cast<double>(variant.size());
}

double compression_rate(int64_t base_bytes, int64_t optimized_bytes) {
  if (base_bytes <= 0 || optimized_bytes <= 0)
    fail(ErrorCode::ZeroSize, "compression rate needs positive byte counts");
  return static_cast<double>(base_bytes) / static_cast<double>(optimized_bytes);
}

double early_exit_rate(const std::vector<EvalRecord>& records) {
  if (records.empty()) fail(ErrorCode::EmptyRecords, "exit rate of no records");
  int early = 0;
  for (const EvalRecord& r : records)
    if (r.exit_index < r.final_exit_index) ++early;
  return 100.0 * early / static_cast<double>(records.size());
}

LatencyStats latency_stats(const std::vector<EvalRecord>& records) {
  if (records.empty()) fail(ErrorCode::EmptyRecords, "latency of no records");
  LatencyStats s;
  double early_total = 0.0, final_total = 0.0;
  int early_n = 0, final_n = 0;
  for (const EvalRecord& r : records) {
    s.total_s += r.latency_s;
    if (r.exit_index < r.final_exit_index) {
      early_total += r.latency_s;
      ++early_n;
    } else {
      final_total += r.latency_s;
      ++final_n;
    }
  }
  s.avg_ms = 1000.0 * s.total_s / static_cast<double>(records.size());
  if (early_n > 0) s.early_avg_ms = 1000.0 * early_total / early_n;
  if (final_n > 0) s.final_avg_ms = 1000.0 * final_total / final_n;
  return s;
}

double speed_up(double baseline_total_s, double variant_total_s) {
  if (variant_total_s <= 0.0)
    fail(ErrorCode::ZeroSize, "variant total time must be positive");
  return baseline_total_s / variant_total_s;
}

double expected_macs(const std::vector<EvalRecord>& records) {
  if (records.empty()) fail(ErrorCode::EmptyRecords, "macs of no records");
  double total = 0.0;
  for (const EvalRecord& r : records)
    total += static_cast<double>(r.macs_executed);
  return total / static_cast<double>(records.size());
}

double round2(double x) { return std::floor(x * 100.0 + 0.5) / 100.0; }

std::string format2(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", round2(x));
  return buf;
}

std::string format_opt2(const std::optional<double>& x) {
  return x.has_value() ? format2(*x) : "n/a";
}

namespace {

json opt_json(const std::optional<double>& x) {
  if (x.has_value()) return *x;
  return "n/a";
}

std::optional<double> opt_from(const json& j) {
  if (j.is_number()) return j.get<double>();
  return std::nullopt;
}

}  // namespace

std::string MetricsSummary::to_json() const {
  json j;
  j["format_version"] = 1;
  j["variant"] = variant;
  j["size_bytes"] = size_bytes;
  j["compression"] = compression;
  j["accuracy_pct"] = accuracy_pct;
  j["label_loyalty_pct"] = label_loyalty_pct;
  j["prob_loyalty_pct"] = prob_loyalty_pct;
  j["early_exit_rate_pct"] = early_exit_rate_pct;
  j["expected_macs"] = expected_macs;
  j["runtime"] = json{{"total_time_s", total_time_s},
                      {"avg_ms", avg_ms},
                      {"early_avg_ms", opt_json(early_avg_ms)},
                      {"final_avg_ms", opt_json(final_avg_ms)},
                      {"speed_up", speed_up},
                      {"peak_rss_kb", peak_rss_kb}};
  return j.dump(2) + "\n";
}

MetricsSummary MetricsSummary::from_json(const std::string& text) {
  MetricsSummary s;
  try {
    const json j = json::parse(text);
    s.variant = j.at("variant").get<std::string>();
    s.size_bytes = j.at("size_bytes").get<int64_t>();
    s.compression = j.at("compression").get<double>();
    s.accuracy_pct = j.at("accuracy_pct").get<double>();
    s.label_loyalty_pct = j.at("label_loyalty_pct").get<double>();
    s.prob_loyalty_pct = j.at("prob_loyalty_pct").get<double>();
    s.early_exit_rate_pct = j.at("early_exit_rate_pct").get<double>();
    s.expected_macs = j.at("expected_macs").get<double>();
    const json& rt = j.at("runtime");
    s.total_time_s = rt.at("total_time_s").get<double>();
    s.avg_ms = rt.at("avg_ms").get<double>();
    s.early_avg_ms = opt_from(rt.at("early_avg_ms"));
    s.final_avg_ms = opt_from(rt.at("final_avg_ms"));
    s.speed_up = rt.at("speed_up").get<double>();
    s.peak_rss_kb = rt.at("peak_rss_kb").get<int64_t>();
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, std::string("metrics summary: ") + e.what());
  }
  return s;
}

std::string MetricsSummary::csv_header() {
  return "variant,size_bytes,compression,accuracy_pct,label_loyalty_pct,"
         "prob_loyalty_pct,early_exit_rate_pct,expected_macs,total_time_s,"
         "avg_ms,early_avg_ms,final_avg_ms,speed_up,peak_rss_kb";
}

std::string MetricsSummary::to_csv_row() const {
  std::ostringstream os;
  os << variant << "," << size_bytes << "," << format2(compression) << ","
     << format2(accuracy_pct) << "," << format2(label_loyalty_pct) << ","
     << format2(prob_loyalty_pct) << "," << format2(early_exit_rate_pct) << ","
     << format2(expected_macs) << "," << format2(total_time_s) << ","
     << format2(avg_ms) << "," << format_opt2(early_avg_ms) << ","
     << format_opt2(final_avg_ms) << "," << format2(speed_up) << ","
     << peak_rss_kb;
  return os.str();
}

MetricsSummary summarize(const std::string& variant,
                         const std::vector<EvalRecord>& records,
                         const std::vector<EvalRecord>& baseline,
                         int64_t base_bytes, int64_t variant_bytes,
                         double baseline_total_s) {
  MetricsSummary s;
  s.variant = variant;
  s.size_bytes = variant_bytes;
  s.compression = compression_rate(base_bytes, variant_bytes);
  s.accuracy_pct = accuracy(records);
  s.label_loyalty_pct = label_loyalty(records, baseline);
  s.prob_loyalty_pct = probability_loyalty(records, baseline);
  s.early_exit_rate_pct = early_exit_rate(records);
  s.expected_macs = expected_macs(records);
  const LatencyStats ls = latency_stats(records);
  s.total_time_s = ls.total_s;
  s.avg_ms = ls.avg_ms;
  s.early_avg_ms = ls.early_avg_ms;
  s.final_avg_ms = ls.final_avg_ms;
  s.speed_up = speed_up(baseline_total_s, ls.total_s);
  s.peak_rss_kb = edgenet::peak_rss_kb();
  return s;
}

int64_t peak_rss_kb() {
  rusage ru{};
  getrusage(RUSAGE_SELF, &ru);
  return static_cast<int64_t>(ru.ru_maxrss);
}

}  // namespace edgenet
