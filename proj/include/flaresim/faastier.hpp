#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "flaresim/engine.hpp"
#include "flaresim/topology.hpp"

namespace flaresim {

struct FaasConfig {
  bool enabled = true;
  double cold_start_ms = 150.0;
  double warm_start_ms = 1.0;
  double keep_alive_s = 600.0;
  int per_instance_concurrency = 1;
  int max_instances = 10000;  // per service
  bool prewarmed = false;     // pre-provisioned pool: every start is warm
  double memory_gb = 1.0;
  double price_per_invocation = 2.0e-7;
  double price_per_gb_s = 1.6667e-5;
  bool bill_cold_start = false;
  double billing_granularity_ms = 1.0;
};

struct FaasInstance {
  int id = -1;
  int active = 0;        // running invocations
  bool warming = false;  // cold start in progress; not joinable
  double idle_since = 0.0;
  uint64_t idle_epoch = 0;  // invalidates stale reap timers
  bool reaped = false;
};

struct Invocation {
  int instance = -1;      // -1: service at max_instances, request queued
  double start_delay_s = 0.0;
  bool cold = false;
};

struct FaasUsage {
  uint64_t invocations = 0;
  double billed_gb_seconds = 0.0;
  uint64_t cold_starts = 0;
  int peak_instances = 0;
};

// Serverless pool per service: instances appear on demand (cold) or are
// reused while warm, and are reaped after sitting idle for the keep-alive.
// Billing is per invocation plus GB-seconds of busy time rounded up to the
// billing granularity; cold-start time is unbilled unless configured.
class FaasTier {
 public:
  FaasTier(const ServiceGraph& graph, FaasConfig cfg, EventQueue& eq);

  Invocation invoke(uint16_t svc, uint64_t req_id, double now);

  // Instance finished one invocation; schedules the reap timer when it goes
  // idle. The caller then feeds the queue via pop_queued/occupy.
  void release(uint16_t svc, int instance, double now);

  // Pop the next queued request (requests that died in the queue are the
  // caller's to skip).
  std::optional<uint64_t> pop_queued(uint16_t svc);

  // Occupies the instance for a queued request being started.
  void occupy(uint16_t svc, int instance);

  // Cold start finished; the instance becomes joinable.
  void mark_warm(uint16_t svc, int instance) { pool_[svc][instance].warming = false; }

  const FaasInstance& instance(uint16_t svc, int id) const { return pool_[svc][id]; }

  void bill(uint16_t svc, double service_s, double cold_s);

  double cost() const;
  const FaasUsage& usage(uint16_t svc) const { return usage_[svc]; }
  FaasUsage total_usage() const;
  int live_instances(uint16_t svc) const;
  const FaasConfig& config() const { return cfg_; }

 private:
  void schedule_reap(uint16_t svc, FaasInstance& inst, double now);

  const ServiceGraph& graph_;
  FaasConfig cfg_;
  EventQueue& eq_;
  std::vector<std::vector<FaasInstance>> pool_;
  std::vector<std::deque<uint64_t>> queued_;
  std::vector<FaasUsage> usage_;
};

}  // namespace flaresim
