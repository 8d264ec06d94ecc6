#include "flaresim/metrics.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace flaresim {

double nearest_rank(const std::vector<double>& sorted_values, double p) {
  if (sorted_values.empty())
    throw std::invalid_argument("nearest_rank: empty sample");
  if (!(p > 0.0) || p > 1.0)
    throw std::invalid_argument(fmt::format("nearest_rank: p must be in (0, 1], got {}", p));
  size_t n = sorted_values.size();
  auto rank = static_cast<size_t>(std::ceil(p * static_cast<double>(n) - 1e-12));
  if (rank < 1) rank = 1;
  if (rank > n) rank = n;
  return sorted_values[rank - 1];
}

std::vector<SeriesPoint> percentile_series(const std::vector<LatencyRecord>& records,
                                           double p, double window_s, double end_s) {
  if (!(window_s > 0.0)) throw std::invalid_argument("percentile_series: window must be > 0");
  size_t n_windows = static_cast<size_t>(std::ceil(end_s / window_s - 1e-12));
  if (n_windows == 0) return {};
  std::vector<std::vector<double>> buckets(n_windows);
  for (const auto& r : records) {
    // Window k covers (k*w, (k+1)*w]; records finishing after end_s (drain
    // tail) fold into the last window so nothing is dropped.
    double t = r.finalize_s;
    size_t k = t <= 0.0 ? 0 : static_cast<size_t>(std::ceil(t / window_s - 1e-9)) - 1;
    if (k >= n_windows) k = n_windows - 1;
    buckets[k].push_back(r.e2e_ms);
  }
  std::vector<SeriesPoint> out(n_windows);
  for (size_t k = 0; k < n_windows; ++k) {
    out[k].window_end_s = static_cast<double>(k + 1) * window_s;
    out[k].count = buckets[k].size();
    if (!buckets[k].empty()) {
      std::sort(buckets[k].begin(), buckets[k].end());
      out[k].value_ms = nearest_rank(buckets[k], p);
    }
  }
  return out;
}

SloStats slo_stats(const std::vector<SeriesPoint>& series, double slo_ms, double window_s) {
  SloStats st;
  bool open = false;
  for (const auto& pt : series) {
    if (pt.count > 0) st.peak_ms = std::max(st.peak_ms, pt.value_ms);
    bool violating = pt.count > 0 && pt.value_ms > slo_ms;
    if (violating) {
      double start = pt.window_end_s - window_s;
      if (open && std::abs(st.intervals.back().end_s - start) < 1e-9) {
        st.intervals.back().end_s = pt.window_end_s;
      } else {
        st.intervals.push_back({start, pt.window_end_s});
        open = true;
      }
    } else {
      open = false;
    }
  }
  for (const auto& iv : st.intervals) st.total_violation_s += iv.end_s - iv.start_s;
  return st;
}

}  // namespace flaresim
