#include "flaresim/faastier.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "flaresim/errors.hpp"

namespace flaresim {

FaasTier::FaasTier(const ServiceGraph& graph, FaasConfig cfg, EventQueue& eq)
    : graph_(graph), cfg_(cfg), eq_(eq) {
  pool_.resize(graph.service_count());
  queued_.resize(graph.service_count());
  usage_.resize(graph.service_count());
}

int FaasTier::live_instances(uint16_t svc) const {
  int n = 0;
  for (const auto& inst : pool_[svc])
    if (!inst.reaped) ++n;
  return n;
}

Invocation FaasTier::invoke(uint16_t svc, uint64_t req_id, double now) {
  auto& pool = pool_[svc];

  // Reuse the warm instance that has been idle longest (lowest id on ties)
  // so reap timers on the rest stay meaningful.
  int pick = -1;
  for (auto& inst : pool) {
    if (inst.reaped || inst.warming) continue;
    if (inst.active >= cfg_.per_instance_concurrency) continue;
    if (pick < 0 || inst.idle_since < pool[pick].idle_since) pick = inst.id;
  }
  if (pick >= 0) {
    FaasInstance& inst = pool[pick];
    ++inst.active;
    ++inst.idle_epoch;  // cancel any pending reap
    return {inst.id, cfg_.warm_start_ms / 1000.0, false};
  }

  if (live_instances(svc) >= cfg_.max_instances) {
    queued_[svc].push_back(req_id);
    return {};
  }

  FaasInstance inst;
  inst.id = static_cast<int>(pool.size());
  inst.active = 1;
  bool cold = !cfg_.prewarmed;
  inst.warming = cold;
  pool.push_back(inst);
  usage_[svc].peak_instances = std::max(usage_[svc].peak_instances, live_instances(svc));
  if (cold) ++usage_[svc].cold_starts;
  double delay = (cold ? cfg_.cold_start_ms : cfg_.warm_start_ms) / 1000.0;
  return {inst.id, delay, cold};
}

void FaasTier::occupy(uint16_t svc, int instance) {
  FaasInstance& inst = pool_[svc][instance];
  ++inst.active;
  ++inst.idle_epoch;
}

std::optional<uint64_t> FaasTier::pop_queued(uint16_t svc) {
  auto& q = queued_[svc];
  if (q.empty()) return std::nullopt;
  uint64_t id = q.front();
  q.pop_front();
  return id;
}

void FaasTier::release(uint16_t svc, int instance, double now) {
  FaasInstance& inst = pool_[svc][instance];
  if (inst.active <= 0) throw SimulationError("faas release on an idle instance");
  --inst.active;
  inst.warming = false;
  if (inst.active == 0) {
    inst.idle_since = now;
    schedule_reap(svc, inst, now);
  }
}

void FaasTier::schedule_reap(uint16_t svc, FaasInstance& inst, double now) {
  uint64_t epoch = ++inst.idle_epoch;
  int id = inst.id;
  eq_.schedule(now + cfg_.keep_alive_s, EventKind::InstanceReap,
               [this, svc, id, epoch] {
                 FaasInstance& i = pool_[svc][id];
                 if (i.reaped || i.active > 0 || i.idle_epoch != epoch) return;
                 i.reaped = true;
               },
               eq_.logging() ? fmt::format("svc={} inst={}", graph_.service(svc).name, id)
                             : std::string());
}

void FaasTier::bill(uint16_t svc, double service_s, double cold_s) {
  double billable = service_s + (cfg_.bill_cold_start ? cold_s : 0.0);
  double gran = cfg_.billing_granularity_ms / 1000.0;
  double rounded = std::ceil(billable / gran - 1e-12) * gran;
  usage_[svc].billed_gb_seconds += rounded * cfg_.memory_gb;
  ++usage_[svc].invocations;
}

FaasUsage FaasTier::total_usage() const {
  FaasUsage t;
  for (const auto& u : usage_) {
    t.invocations += u.invocations;
    t.billed_gb_seconds += u.billed_gb_seconds;
    t.cold_starts += u.cold_starts;
    t.peak_instances += u.peak_instances;
  }
  return t;
}

double FaasTier::cost() const {
  FaasUsage t = total_usage();
  return static_cast<double>(t.invocations) * cfg_.price_per_invocation +
         t.billed_gb_seconds * cfg_.price_per_gb_s;
}

}  // namespace flaresim
