#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "flaresim/rng.hpp"

namespace flaresim {

struct ServiceSpec {
  std::string name;
  double service_time_ms = 0.0;       // mean busy time per request
  double per_pod_capacity_rps = 0.0;  // sustainable req/s per pod at 100% of the scaling metric
  double vcpu_per_pod = 0.0;
  int concurrency_per_pod = 1;        // parallel requests a pod serves; extras queue FCFS
  std::vector<std::string> downstream;  // called in order, one call each
};

struct Entrypoint {
  std::string service;
  double weight = 0.0;
};

// Expanded call paths are stored per hop in a 64-bit tier mask, so chains are
// capped at this depth.
constexpr size_t kMaxPathLen = 64;

// A validated service DAG. Services keep their definition order; every chain
// reachable from an entrypoint is pre-expanded depth-first so call-path
// sampling is a single weighted choice.
class ServiceGraph {
 public:
  ServiceGraph() = default;
  ServiceGraph(std::vector<ServiceSpec> services, std::vector<Entrypoint> entrypoints);

  size_t service_count() const { return services_.size(); }
  const ServiceSpec& service(size_t idx) const { return services_[idx]; }
  const std::vector<ServiceSpec>& services() const { return services_; }
  const std::vector<Entrypoint>& entrypoints() const { return entrypoints_; }

  // Index of a service by name; throws std::invalid_argument when unknown.
  size_t index_of(const std::string& name) const;

  // Depth-first call sequence starting at the given service (inclusive).
  const std::vector<uint16_t>& path_from(size_t svc_idx) const { return paths_[svc_idx]; }

  // Entrypoint chosen by weight, then its full call sequence.
  const std::vector<uint16_t>& sample_call_path(RngStream& rng) const;

 private:
  std::vector<ServiceSpec> services_;
  std::vector<Entrypoint> entrypoints_;
  std::vector<std::vector<uint16_t>> paths_;   // per service
  std::vector<size_t> entry_idx_;              // entrypoint -> service index
  std::vector<double> entry_cum_;              // cumulative weights
};

// Checks the graph and throws a single ValidationError listing every
// violation: unknown downstream references, self-calls, cycles (with the cycle
// spelled out), non-positive capacities/times, bad entrypoint weights.
void validate_graph(const std::vector<ServiceSpec>& services,
                    const std::vector<Entrypoint>& entrypoints);

// Aggregate sustainable req/s of `ready_pods` pods of this service.
double throughput_capacity(const ServiceSpec& spec, int ready_pods);

}  // namespace flaresim
