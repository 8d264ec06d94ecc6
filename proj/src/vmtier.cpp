#include "flaresim/vmtier.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "flaresim/errors.hpp"

namespace flaresim {

VmTier::VmTier(const ServiceGraph& graph, HpaConfig hpa, CaConfig ca, EventQueue& eq)
    : graph_(graph), hpa_(hpa), ca_(ca), eq_(eq) {
  by_svc_.resize(graph.service_count());
  min_override_.assign(graph.service_count(), hpa_.min_replicas);
  max_override_.assign(graph.service_count(), hpa_.max_replicas);
  desired_history_.resize(graph.service_count());
}

int VmTier::create_node(double ready_at, double now) {
  VmNode n;
  n.id = static_cast<int>(nodes_.size());
  n.ready_at = ready_at;
  if (ready_at <= now) {
    n.ready = true;
    n.billed_from = ready_at;
    n.idle_since = ready_at;
  } else {
    int id = n.id;
    eq_.schedule(ready_at, EventKind::VmReady,
                 [this, id] {
                   VmNode& node = nodes_[id];
                   if (node.failed) return;
                   node.ready = true;
                   node.billed_from = node.ready_at;
                   if (node.pod_count == 0) node.idle_since = node.ready_at;
                 },
                 eq_.logging() ? fmt::format("node={}", n.id) : std::string());
  }
  nodes_.push_back(n);
  return n.id;
}

int VmTier::create_pod(uint16_t svc, double now) {
  Pod p;
  p.id = static_cast<int>(pods_.size());
  p.svc = svc;
  pods_.push_back(p);
  by_svc_[svc].push_back(p.id);
  if (!place_pod(pods_.back(), now)) unplaced_.push_back(p.id);
  return p.id;
}

void VmTier::bind_pod_to_node(Pod& p, VmNode& n, double now) {
  p.node = n.id;
  ++n.pod_count;
  p.ready_at = std::max(now, n.ready_at) + hpa_.pod_start_delay_s;
  schedule_pod_ready(p);
}

void VmTier::schedule_pod_ready(Pod& p) {
  int id = p.id;
  eq_.schedule(p.ready_at, EventKind::PodReady,
               [this, id] {
                 Pod& pod = pods_[id];
                 if (pod.removed || pod.failed) return;
                 pod.ready = true;
               },
               eq_.logging() ? fmt::format("pod={} svc={}", p.id, graph_.service(p.svc).name)
                             : std::string());
}

bool VmTier::place_pod(Pod& p, double now) {
  // Ready nodes first, then ones still booting; lowest id wins so placement
  // is reproducible.
  int best = -1;
  for (const VmNode& n : nodes_) {
    if (n.failed || n.released_at >= 0.0) continue;
    if (n.pod_count >= ca_.pods_per_vm) continue;
    if (best < 0) best = n.id;
    else if (nodes_[best].ready != n.ready) {
      if (!nodes_[best].ready && n.ready) best = n.id;
    }
  }
  if (best < 0) return false;
  bind_pod_to_node(p, nodes_[best], now);
  return true;
}

void VmTier::init_cluster(const std::vector<int>& initial_replicas, int initial_nodes) {
  int total_pods = 0;
  for (int r : initial_replicas) total_pods += r;
  int need = (total_pods + ca_.pods_per_vm - 1) / ca_.pods_per_vm;
  int n_nodes = std::max(need, initial_nodes);
  for (int i = 0; i < n_nodes; ++i) create_node(0.0, 0.0);
  for (uint16_t svc = 0; svc < initial_replicas.size(); ++svc) {
    for (int k = 0; k < initial_replicas[svc]; ++k) {
      int id = create_pod(svc, 0.0);
      Pod& p = pods_[id];
      if (p.node < 0)
        throw SimulationError("initial pods must fit on initial nodes");
      p.ready = true;
      p.ready_at = 0.0;
    }
  }
}

AdmitOutcome VmTier::admit(uint16_t svc, uint64_t req_id) {
  int best = -1;
  int best_load = 0;
  for (int id : by_svc_[svc]) {
    const Pod& p = pods_[id];
    if (!p.ready || p.removed || p.draining) continue;
    if (p.failed && p.failure_visible) continue;
    int load = p.load();
    if (best < 0 || load < best_load) {
      best = id;
      best_load = load;
    }
  }
  if (best < 0) return {};
  Pod& p = pods_[best];
  AdmitOutcome out;
  out.pod_id = best;
  const auto& spec = graph_.service(svc);
  if (p.in_flight < spec.concurrency_per_pod) {
    ++p.in_flight;
    out.start_now = !p.failed;  // a dead pod accepts the connection and hangs
  } else {
    p.waiting.push_back(req_id);
    out.start_now = false;
  }
  return out;
}

void VmTier::release_slot(int pod_id) {
  Pod& p = pods_[pod_id];
  if (p.in_flight <= 0) throw SimulationError("release_slot on an idle pod");
  --p.in_flight;
}

std::optional<uint64_t> VmTier::pop_waiting(int pod_id) {
  Pod& p = pods_[pod_id];
  if (p.waiting.empty()) return std::nullopt;
  uint64_t id = p.waiting.front();
  p.waiting.pop_front();
  return id;
}

int VmTier::visible_ready_pods(uint16_t svc) const {
  int n = 0;
  for (int id : by_svc_[svc]) {
    const Pod& p = pods_[id];
    if (p.ready && !p.removed && !p.draining && !(p.failed && p.failure_visible)) ++n;
  }
  return n;
}

int VmTier::visible_active_pods(uint16_t svc) const {
  int n = 0;
  for (int id : by_svc_[svc]) {
    const Pod& p = pods_[id];
    if (p.removed || p.draining) continue;
    if (p.failed && p.failure_visible) continue;
    ++n;
  }
  return n;
}

int VmTier::hpa_desired(uint16_t svc, double observed_cpu) const {
  if (observed_cpu < 0.0 || !std::isfinite(observed_cpu))
    throw std::invalid_argument(fmt::format("observed_cpu must be finite and >= 0, got {}", observed_cpu));
  int ready = visible_ready_pods(svc);
  double raw = std::ceil(static_cast<double>(ready) * observed_cpu / hpa_.cpu_target);
  int desired = static_cast<int>(raw);
  return std::clamp(desired, min_override_[svc], max_override_[svc]);
}

void VmTier::apply_hpa(uint16_t svc, int desired, double now) {
  auto& hist = desired_history_[svc];
  hist.emplace_back(now, desired);
  while (!hist.empty() && hist.front().first < now - hpa_.scale_down_stabilization_s)
    hist.pop_front();

  int active = visible_active_pods(svc);
  if (desired > active) {
    for (int k = 0; k < desired - active; ++k) create_pod(svc, now);
    return;
  }

  // Scale-down waits out the stabilization window: act on the max desired
  // seen recently, so a transient dip never kills pods.
  int effective = desired;
  for (const auto& [t, d] : hist) effective = std::max(effective, d);
  if (effective >= active) return;

  int to_drain = active - effective;
  // Newest ready pods first; starting pods keep booting and are counted again
  // next tick.
  for (auto it = by_svc_[svc].rbegin(); it != by_svc_[svc].rend() && to_drain > 0; ++it) {
    Pod& p = pods_[*it];
    if (!p.ready || p.removed || p.draining) continue;
    if (p.failed && p.failure_visible) continue;
    p.draining = true;
    --to_drain;
    if (p.in_flight == 0 && p.waiting.empty()) remove_pod(p.id, now);
  }
}

void VmTier::remove_pod(int pod_id, double now) {
  Pod& p = pods_[pod_id];
  if (p.removed) return;
  p.removed = true;
  p.ready = false;
  if (p.node >= 0) {
    VmNode& n = nodes_[p.node];
    if (--n.pod_count == 0) n.idle_since = now;
  }
}

void VmTier::ca_scan(double now) {
  // Pods may fit onto slots freed since they were created.
  std::vector<int> still_unplaced;
  for (int id : unplaced_) {
    Pod& p = pods_[id];
    if (p.removed) continue;
    if (!place_pod(p, now)) still_unplaced.push_back(id);
  }
  unplaced_ = std::move(still_unplaced);

  if (!unplaced_.empty()) {
    int vms = (static_cast<int>(unplaced_.size()) + ca_.pods_per_vm - 1) / ca_.pods_per_vm;
    size_t next = 0;
    for (int v = 0; v < vms; ++v) {
      int nid = create_node(now + ca_.vm_boot_delay_s, now);
      for (int slot = 0; slot < ca_.pods_per_vm && next < unplaced_.size(); ++slot, ++next)
        bind_pod_to_node(pods_[unplaced_[next]], nodes_[nid], now);
    }
    unplaced_.clear();
  }

  for (VmNode& n : nodes_) {
    if (!n.ready || n.failed || n.released_at >= 0.0) continue;
    if (n.pod_count == 0 && now - n.idle_since >= ca_.idle_grace_s) {
      n.released_at = now;
      n.ready = false;
    }
  }
}

void VmTier::fail_nodes(const std::vector<int>& node_ids, double now) {
  for (int id : node_ids) {
    if (id < 0 || id >= static_cast<int>(nodes_.size()))
      throw std::invalid_argument(fmt::format("fail_nodes: no node {}", id));
    VmNode& n = nodes_[id];
    if (n.failed) continue;
    n.failed = true;
    n.ready = false;
    if (n.billed_from >= 0.0 && n.released_at < 0.0) n.released_at = now;
    for (Pod& p : pods_)
      if (p.node == id && !p.removed) p.failed = true;
  }
}

void VmTier::reveal_failures(double) {
  for (Pod& p : pods_)
    if (p.failed) p.failure_visible = true;
}

double VmTier::node_seconds(double end_s) const {
  double total = 0.0;
  for (const VmNode& n : nodes_) {
    if (n.billed_from < 0.0 || n.billed_from >= end_s) continue;
    double until = n.released_at >= 0.0 ? std::min(n.released_at, end_s) : end_s;
    total += std::max(0.0, until - n.billed_from);
  }
  return total;
}

double VmTier::vm_cost(double end_s) const {
  return node_seconds(end_s) / 3600.0 * ca_.vm_hourly_cost;
}

}  // namespace flaresim
