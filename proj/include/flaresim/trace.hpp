#pragma once

#include <string>
#include <vector>

#include "flaresim/rng.hpp"

namespace flaresim {

enum class RateUnit { PerSecond, PerMinute };

// A workload trace: request rate sampled on a uniform time grid. Rates are
// stored in requests/second regardless of the unit they were parsed from.
class LoadTrace {
 public:
  LoadTrace() = default;
  // Throws ValidationError unless timestamps are strictly increasing,
  // uniformly spaced and every rate is finite and non-negative.
  LoadTrace(std::vector<double> times_s, std::vector<double> rates_rps);

  size_t size() const { return times_.size(); }
  double start_s() const { return times_.front(); }
  double end_s() const { return times_.back(); }
  double span_s() const { return times_.back() - times_.front(); }
  double resolution_s() const { return resolution_; }
  const std::vector<double>& times() const { return times_; }
  const std::vector<double>& rates() const { return rates_; }
  double max_rate() const;

  // Linearly interpolated rate; throws std::invalid_argument outside the span.
  double rate_at(double t_s) const;

  // Stable fingerprint of the sampled points, used to pair runs for comparison.
  uint64_t fingerprint() const;

 private:
  std::vector<double> times_;
  std::vector<double> rates_;
  double resolution_ = 0.0;
};

// Parses `timestamp_seconds,rate` rows. A single leading header row is
// skipped, blank lines are ignored, CRLF is accepted. Malformed rows raise
// ValidationError naming the line number.
LoadTrace parse_trace_text(const std::string& text, RateUnit unit);
LoadTrace parse_trace_file(const std::string& path, RateUnit unit);

// Multiplies every rate by factor (> 0, finite).
LoadTrace scale_trace(const LoadTrace& t, double factor);

// Re-samples [start, start+duration] onto the same resolution, re-based so the
// first timestamp is 0. Grid-aligned windows are preserved exactly.
LoadTrace extract_window(const LoadTrace& t, double start_s, double duration_s);

// Trapezoid profile: baseline until start, linear ramp to peak, hold, linear
// decay back to baseline, baseline until total.
struct SpikeSpec {
  double baseline_rps = 0.0;
  double peak_rps = 0.0;
  double start_s = 0.0;
  double ramp_s = 0.0;
  double hold_s = 0.0;
  double decay_s = 0.0;
};

double spike_rate_at(const SpikeSpec& spec, double t_s);
LoadTrace synthesize_spike(const SpikeSpec& spec, double total_s, double resolution_s);

// Open-loop arrival generator over a trace. Poisson mode draws a
// non-homogeneous process by thinning against the trace maximum; deterministic
// mode spaces arrivals exactly 1/rate apart. Arrival times never depend on
// what happens to earlier requests.
class ArrivalProcess {
 public:
  ArrivalProcess(LoadTrace trace, bool deterministic);

  // First arrival strictly after t_s, or +inf when the trace is exhausted.
  double next_after(double t_s, RngStream& rng) const;

  const LoadTrace& trace() const { return trace_; }

 private:
  LoadTrace trace_;
  bool deterministic_ = false;
  double max_rate_ = 0.0;
};

}  // namespace flaresim
