#pragma once

#include <deque>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "flaresim/controller.hpp"
#include "flaresim/engine.hpp"
#include "flaresim/faastier.hpp"
#include "flaresim/metrics.hpp"
#include "flaresim/router.hpp"
#include "flaresim/scenario.hpp"
#include "flaresim/topology.hpp"
#include "flaresim/trace.hpp"
#include "flaresim/vmtier.hpp"

namespace flaresim {

struct RunOptions {
  std::string out_dir;          // empty: nothing written to disk
  bool event_log = false;       // events.log next to the reports
  bool controller_log = false;  // controller.csv next to the reports
  // Test hook: receives every logged event; replaces the events.log file sink.
  EventQueue::LogSink log_sink;
};

struct RunOutcome {
  std::string name;
  Mode mode = Mode::Baseline;
  uint64_t seed = 0;
  uint64_t trace_fingerprint = 0;
  double duration_s = 0.0;
  double drained_at_s = 0.0;
  double wall_seconds = 0.0;

  uint64_t arrivals = 0;
  uint64_t completions = 0;
  uint64_t timeouts = 0;
  std::vector<uint64_t> vm_hops;          // per service
  std::vector<uint64_t> serverless_hops;  // per service

  double p50_ms = 0.0;  // over all finished requests; +inf possible
  double p95_ms = 0.0;
  double p99_ms = 0.0;
  std::vector<SeriesPoint> p50_series;
  std::vector<SeriesPoint> p95_series;
  SloStats slo_p50;
  SloStats slo_p95;
  CostBreakdown cost;
  uint64_t cold_starts = 0;
  int peak_instances = 0;

  std::vector<LatencyRecord> records;
  std::vector<MetricsSnapshot> controller_series;

  nlohmann::json summary;  // exactly what summary.json holds
};

// One scenario end to end: builds the cluster and tiers for the mode, replays
// the trace through the event queue, drains, checks conservation, and folds
// the recorder into reports. Single-shot: construct, run once.
class Simulation {
 public:
  explicit Simulation(ScenarioConfig cfg);

  RunOutcome run(const RunOptions& opts = {});

  // Config with derived initial replica counts filled in.
  const ScenarioConfig& config() const { return cfg_; }

 private:
  struct Request {
    double arrival_s = 0.0;
    const std::vector<uint16_t>* path = nullptr;
    std::vector<double> service_s;  // pre-drawn per hop, tier-independent
    uint16_t hop = 0;
    uint64_t tier_mask = 0;
    bool sticky_serverless = false;
    bool done = false;
    bool timed_out = false;
    // live-hop state
    int pod = -1;
    int instance = -1;
    double cold_s = 0.0;
  };

  void init_tiers();
  void derive_initial_replicas();
  void schedule_arrival_chain(size_t stream);
  void on_arrival(size_t stream, double t);
  void start_hop(uint64_t id);
  void begin_vm_service(uint64_t id, int pod_id);
  void begin_faas_service(uint64_t id, int instance, double extra_delay_s, bool cold);
  void complete_hop(uint64_t id);
  void finalize(uint64_t id, bool timed_out);
  void feed_pod(int pod_id);
  void feed_faas(uint16_t svc, int instance);
  void on_controller_tick();
  void on_hpa_tick();
  void on_ca_tick();
  double vm_observed_cpu(uint16_t svc) const;
  std::string req_note(uint64_t id) const;
  nlohmann::json build_summary() const;
  void write_reports(const std::string& out_dir, bool controller_log) const;

  ScenarioConfig cfg_;
  ServiceGraph graph_;
  EventQueue eq_;
  RngSet rng_;

  std::unique_ptr<VmTier> vm_;
  std::unique_ptr<FaasTier> faas_;
  Controller controller_;
  Router router_;
  MetricsRecorder recorder_;

  // One arrival process per trace; entry_of_[i] is the entrypoint service it
  // drives, or -1 for the anonymous whole-graph trace.
  std::vector<ArrivalProcess> arrivals_;
  std::vector<RngStream> arrival_rng_;
  std::vector<int> entry_of_;

  std::deque<Request> requests_;
  std::vector<double> per_pod_caps_;
  std::vector<uint64_t> hpa_prev_vm_counts_;
  std::vector<MetricsSnapshot> controller_series_;

  uint64_t arrivals_n_ = 0;
  uint64_t completions_n_ = 0;
  uint64_t timeouts_n_ = 0;
  uint64_t trace_fingerprint_ = 0;
  bool ran_ = false;

  RunOutcome out_;
};

RunOutcome run_scenario(const ScenarioConfig& cfg, const RunOptions& opts = {});

}  // namespace flaresim
