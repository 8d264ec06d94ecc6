#pragma once

#include <cstdint>
#include <vector>

namespace flaresim {

// One finished request. Timed-out requests carry +inf latency so they drag
// the tail percentiles instead of silently vanishing.
struct LatencyRecord {
  double arrival_s = 0.0;
  double finalize_s = 0.0;
  double e2e_ms = 0.0;
  uint16_t entry_svc = 0;
  uint8_t hops = 0;
  uint64_t tier_mask = 0;  // bit i set: hop i ran on serverless
  bool timed_out = false;
};

class MetricsRecorder {
 public:
  void reserve(size_t n) { records_.reserve(n); }
  void add(const LatencyRecord& r) { records_.push_back(r); }
  const std::vector<LatencyRecord>& records() const { return records_; }
  size_t size() const { return records_.size(); }

 private:
  std::vector<LatencyRecord> records_;
};

// Nearest-rank percentile of a sorted sample: the ceil(p*n)-th smallest.
// p in (0, 1]; throws std::invalid_argument on an empty sample or bad p.
double nearest_rank(const std::vector<double>& sorted_values, double p);

struct SeriesPoint {
  double window_end_s = 0.0;
  double value_ms = 0.0;  // +inf when timeouts dominate the rank
  size_t count = 0;       // 0: no request finished in this window
};

// Latency percentile over tumbling windows keyed by finalize time. Window k
// covers (k*w, (k+1)*w]. The series spans [0, end_s] even where empty.
std::vector<SeriesPoint> percentile_series(const std::vector<LatencyRecord>& records,
                                           double p, double window_s, double end_s);

struct SloInterval {
  double start_s = 0.0;
  double end_s = 0.0;
};

struct SloStats {
  std::vector<SloInterval> intervals;  // maximal runs of violating windows
  double total_violation_s = 0.0;
  double peak_ms = 0.0;  // max over windows with data; 0 when series is empty
};

SloStats slo_stats(const std::vector<SeriesPoint>& series, double slo_ms, double window_s);

struct CostBreakdown {
  double vm_node_seconds = 0.0;
  double vm_cost = 0.0;
  uint64_t invocations = 0;
  double billed_gb_seconds = 0.0;
  double faas_cost = 0.0;
  double total = 0.0;
};

}  // namespace flaresim
