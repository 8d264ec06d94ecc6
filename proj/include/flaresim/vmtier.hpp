#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "flaresim/engine.hpp"
#include "flaresim/topology.hpp"

namespace flaresim {

struct HpaConfig {
  double cpu_target = 0.50;
  double sync_period_s = 15.0;
  int min_replicas = 1;
  int max_replicas = 1000;
  double pod_start_delay_s = 10.0;
  double scale_down_stabilization_s = 300.0;
};

struct CaConfig {
  double scan_interval_s = 10.0;
  double vm_boot_delay_s = 120.0;
  int pods_per_vm = 4;
  double vm_hourly_cost = 0.1670;
  int vcpu_per_vm = 4;
  double idle_grace_s = 120.0;  // release a node after this long with zero pods
};

struct VmNode {
  int id = -1;
  bool ready = false;
  double ready_at = 0.0;
  bool failed = false;
  int pod_count = 0;        // assigned pods, including ones still starting
  double idle_since = 0.0;  // meaningful while ready && pod_count == 0
  double billed_from = -1.0;
  double released_at = -1.0;
};

struct Pod {
  int id = -1;
  uint16_t svc = 0;
  int node = -1;  // -1 while waiting for the autoscaler to provide a VM
  bool ready = false;
  double ready_at = 0.0;
  bool failed = false;
  // A dead pod keeps receiving traffic until the failure is detected; only
  // then does it leave the routable set and the capacity counts.
  bool failure_visible = false;
  bool draining = false;
  bool removed = false;
  int in_flight = 0;
  std::deque<uint64_t> waiting;  // FCFS queue of request ids

  int load() const { return in_flight + static_cast<int>(waiting.size()); }
};

struct AdmitOutcome {
  int pod_id = -1;      // -1: no routable pod, request is stranded
  bool start_now = false;  // free slot on an alive pod
};

// Cluster state plus the two autoscalers. The horizontal scaler resizes a
// service's pod count from an observed utilization; the cluster scaler turns
// unplaced pods into new VMs after a boot delay and releases idle VMs.
// Event scheduling (pod/VM readiness) goes through the shared EventQueue.
class VmTier {
 public:
  VmTier(const ServiceGraph& graph, HpaConfig hpa, CaConfig ca, EventQueue& eq);

  // Creates the starting fleet: pods packed onto nodes in service order,
  // everything ready at time 0 with billing running.
  void init_cluster(const std::vector<int>& initial_replicas, int initial_nodes);

  // Least-loaded routable pod; ties break toward the lowest pod id. Dead pods
  // stay routable until their failure is visible. Occupies a slot or queues.
  AdmitOutcome admit(uint16_t svc, uint64_t req_id);

  void occupy_slot(int pod_id) { ++pods_[pod_id].in_flight; }
  void release_slot(int pod_id);
  std::optional<uint64_t> pop_waiting(int pod_id);

  // desired = clamp(ceil(ready * cpu / target), min, max)
  int hpa_desired(uint16_t svc, double observed_cpu) const;

  // Applies a desired replica count: scale-up immediately, scale-down only
  // when the max desired over the stabilization window has dropped.
  void apply_hpa(uint16_t svc, int desired, double now);

  // One autoscaler scan: provision ceil(unplaced/pods_per_vm) VMs for pods
  // that fit nowhere (never double-provisioning against VMs already booting,
  // since pods are bound to a VM the moment it is requested), and release
  // nodes that have sat empty past the idle grace.
  void ca_scan(double now);

  void fail_nodes(const std::vector<int>& node_ids, double now);
  void reveal_failures(double now);

  // Removes a drained pod from its node. Public because the caller owns the
  // drain condition (no slot in use, queue empty).
  void remove_pod(int pod_id, double now);

  int visible_ready_pods(uint16_t svc) const;
  int visible_active_pods(uint16_t svc) const;  // ready + starting, not draining

  Pod& pod(int id) { return pods_[id]; }
  const Pod& pod(int id) const { return pods_[id]; }
  const std::vector<Pod>& pods() const { return pods_; }
  const std::vector<VmNode>& nodes() const { return nodes_; }
  const std::vector<int>& service_pods(uint16_t svc) const { return by_svc_[svc]; }

  double node_seconds(double end_s) const;
  double vm_cost(double end_s) const;
  int effective_min(uint16_t svc) const { return min_override_[svc]; }
  void set_min_replicas(uint16_t svc, int n) { min_override_[svc] = n; }
  // Pins the ceiling too; with min == max the fleet is static.
  void set_max_replicas(uint16_t svc, int n) { max_override_[svc] = n; }

  const HpaConfig& hpa() const { return hpa_; }
  const CaConfig& ca() const { return ca_; }

 private:
  int create_node(double ready_at, double now);
  int create_pod(uint16_t svc, double now);
  bool place_pod(Pod& p, double now);
  void bind_pod_to_node(Pod& p, VmNode& n, double now);
  void schedule_pod_ready(Pod& p);

  const ServiceGraph& graph_;
  HpaConfig hpa_;
  CaConfig ca_;
  EventQueue& eq_;

  std::vector<VmNode> nodes_;
  std::vector<Pod> pods_;
  std::vector<std::vector<int>> by_svc_;
  std::vector<int> min_override_;
  std::vector<int> max_override_;
  std::vector<std::deque<std::pair<double, int>>> desired_history_;
  std::vector<int> unplaced_;  // pod ids waiting for a VM
};

}  // namespace flaresim
