#pragma once

#include <cstdint>
#include <vector>

namespace flaresim {

struct RoutingWeights {
  double vm = 1.0;
  double serverless = 0.0;
};

// Splits traffic so the VM tier receives at most what its ready pods can
// sustain and the excess overflows to serverless. The load estimate leans
// forward: a rising rate adds its last delta on top, so the split reacts one
// interval early on ramps.
//
//   estimate = rps_t + max(rps_t - rps_prev, 0)
//   w_vm     = clamp(capacity / estimate, 0, 1), or 1 when estimate == 0
//
// Negative inputs raise std::invalid_argument.
RoutingWeights compute_weights(double capacity_rps, double rps_t, double rps_prev);

// Utilization signal handed to the horizontal autoscaler in place of
// VM-observed CPU: demand over ready capacity, deliberately unclamped so the
// scaler sees the true backlog even when pods are saturated. With traffic but
// zero ready pods the signal is pinned to 10.0.
double synthesize_autoscaler_metric(double total_rps, int ready_pods,
                                    double per_pod_capacity_rps);

struct ControllerConfig {
  double tick_interval_s = 1.0;
  // 0 disables smoothing; otherwise rps_t is an exponentially weighted
  // moving average with this alpha.
  double ewma_alpha = 0.0;
};

struct MetricsSnapshot {
  double t_s = 0.0;
  uint16_t svc = 0;
  double rps_t = 0.0;
  double rps_prev = 0.0;
  double capacity_rps = 0.0;
  int ready_pods = 0;
  double synth_cpu = 0.0;
  RoutingWeights weights;
};

// Per-tick measurement loop: derives each service's request rate from
// cumulative hop counters, computes routing weights and the synthesized
// autoscaler signal. When not acting (serverless tier disabled or a mode
// where it only observes) it measures but changes nothing.
class Controller {
 public:
  Controller(ControllerConfig cfg, size_t n_services);

  // counts: cumulative hop arrivals per service (both tiers).
  std::vector<MetricsSnapshot> tick(double now, const std::vector<uint64_t>& counts,
                                    const std::vector<int>& ready_pods,
                                    const std::vector<double>& per_pod_caps,
                                    bool act);

  const RoutingWeights& weights(uint16_t svc) const { return weights_[svc]; }
  double synth_cpu(uint16_t svc) const { return synth_cpu_[svc]; }
  // Freshest rate estimate, for consumers that sample between ticks. The
  // autoscaler recombines it with the ready count it is about to act on;
  // pairing a stale per-pod figure with a newer pod count double-books every
  // pod that became ready since the last tick.
  double last_rps(uint16_t svc) const { return prev_rps_[svc]; }
  const ControllerConfig& config() const { return cfg_; }

 private:
  ControllerConfig cfg_;
  std::vector<uint64_t> prev_counts_;
  std::vector<double> prev_rps_;
  std::vector<double> ewma_;
  std::vector<RoutingWeights> weights_;
  std::vector<double> synth_cpu_;
  bool first_tick_ = true;
};

}  // namespace flaresim
