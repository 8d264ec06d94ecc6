#include "flaresim/controller.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace flaresim {

RoutingWeights compute_weights(double capacity_rps, double rps_t, double rps_prev) {
  if (capacity_rps < 0.0 || rps_t < 0.0 || rps_prev < 0.0 ||
      !std::isfinite(capacity_rps) || !std::isfinite(rps_t) || !std::isfinite(rps_prev))
    throw std::invalid_argument(
        fmt::format("compute_weights: inputs must be finite and >= 0, got "
                    "capacity={} rps_t={} rps_prev={}",
                    capacity_rps, rps_t, rps_prev));
  double delta = rps_t - rps_prev;
  double estimate = delta > 0.0 ? rps_t + delta : rps_t;
  if (estimate == 0.0) return {1.0, 0.0};
  double w_vm = std::clamp(capacity_rps / estimate, 0.0, 1.0);
  return {w_vm, 1.0 - w_vm};
}

double synthesize_autoscaler_metric(double total_rps, int ready_pods,
                                    double per_pod_capacity_rps) {
  if (total_rps < 0.0 || !std::isfinite(total_rps))
    throw std::invalid_argument("synthesize_autoscaler_metric: total_rps must be finite and >= 0");
  if (ready_pods < 0)
    throw std::invalid_argument("synthesize_autoscaler_metric: ready_pods must be >= 0");
  if (!(per_pod_capacity_rps > 0.0))
    throw std::invalid_argument("synthesize_autoscaler_metric: per_pod_capacity_rps must be > 0");
  if (total_rps == 0.0) return 0.0;
  if (ready_pods == 0) return 10.0;
  return total_rps / (static_cast<double>(ready_pods) * per_pod_capacity_rps);
}

Controller::Controller(ControllerConfig cfg, size_t n_services) : cfg_(cfg) {
  prev_counts_.assign(n_services, 0);
  prev_rps_.assign(n_services, 0.0);
  ewma_.assign(n_services, 0.0);
  weights_.assign(n_services, RoutingWeights{});
  synth_cpu_.assign(n_services, 0.0);
}

std::vector<MetricsSnapshot> Controller::tick(double now,
                                              const std::vector<uint64_t>& counts,
                                              const std::vector<int>& ready_pods,
                                              const std::vector<double>& per_pod_caps,
                                              bool act) {
  std::vector<MetricsSnapshot> out;
  out.reserve(counts.size());
  for (size_t svc = 0; svc < counts.size(); ++svc) {
    double raw = static_cast<double>(counts[svc] - prev_counts_[svc]) / cfg_.tick_interval_s;
    prev_counts_[svc] = counts[svc];

    double rps = raw;
    if (cfg_.ewma_alpha > 0.0) {
      ewma_[svc] = first_tick_ ? raw : cfg_.ewma_alpha * raw + (1.0 - cfg_.ewma_alpha) * ewma_[svc];
      rps = ewma_[svc];
    }

    // No history on the first measurement: a slope of rps - 0 would read the
    // whole standing load as a surge and shift traffic at startup.
    if (first_tick_) prev_rps_[svc] = rps;

    MetricsSnapshot snap;
    snap.t_s = now;
    snap.svc = static_cast<uint16_t>(svc);
    snap.rps_t = rps;
    snap.rps_prev = prev_rps_[svc];
    snap.ready_pods = ready_pods[svc];
    snap.capacity_rps = per_pod_caps[svc] * static_cast<double>(ready_pods[svc]);

    if (act) {
      weights_[svc] = compute_weights(snap.capacity_rps, rps, prev_rps_[svc]);
      synth_cpu_[svc] = synthesize_autoscaler_metric(rps, ready_pods[svc], per_pod_caps[svc]);
    }
    snap.weights = weights_[svc];
    snap.synth_cpu = synth_cpu_[svc];
    out.push_back(snap);

    prev_rps_[svc] = rps;
  }
  first_tick_ = false;
  return out;
}

}  // namespace flaresim
