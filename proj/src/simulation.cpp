#include "flaresim/simulation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "flaresim/errors.hpp"

namespace flaresim {

namespace fs = std::filesystem;

namespace {

int ceil_scaled(int n, double factor) {
  return static_cast<int>(std::ceil(n * factor - 1e-9));
}

std::string csv_cell(const SeriesPoint& pt) {
  if (pt.count == 0) return {};
  if (std::isinf(pt.value_ms)) return "inf";
  return fmt::format("{:.6g}", pt.value_ms);
}

}  // namespace

Simulation::Simulation(ScenarioConfig cfg)
    : cfg_(std::move(cfg)),
      graph_(cfg_.services, cfg_.entrypoints),
      rng_(cfg_.seed),
      controller_(cfg_.controller, cfg_.services.size()),
      router_(cfg_.services.size()) {
  init_tiers();
}

void Simulation::init_tiers() {
  const size_t n = graph_.service_count();
  per_pod_caps_.resize(n);
  for (size_t s = 0; s < n; ++s) per_pod_caps_[s] = graph_.service(s).per_pod_capacity_rps;
  hpa_prev_vm_counts_.assign(n, 0);

  for (const TraceSpec& ts : cfg_.traces) {
    LoadTrace lt = ts.build(cfg_.duration_s, cfg_.base_dir);
    trace_fingerprint_ = splitmix64(trace_fingerprint_ ^ lt.fingerprint() ^ fnv1a64(ts.entry));
    entry_of_.push_back(ts.entry.empty() ? -1 : static_cast<int>(graph_.index_of(ts.entry)));
    arrival_rng_.emplace_back(cfg_.seed, ts.entry.empty() ? std::string("arrivals")
                                                          : "arrivals/" + ts.entry);
    arrivals_.emplace_back(std::move(lt), cfg_.deterministic_arrivals);
  }

  if (cfg_.vm_tier_on()) {
    derive_initial_replicas();
    std::vector<int> replicas = cfg_.initial_replicas;
    int nodes = std::max(cfg_.initial_nodes, 0);
    if (cfg_.mode == Mode::Overprovisioned) {
      for (int& r : replicas) r = ceil_scaled(r, cfg_.overprovision_factor);
      nodes = ceil_scaled(nodes, cfg_.overprovision_factor);
    }
    vm_ = std::make_unique<VmTier>(graph_, cfg_.hpa, cfg_.ca, eq_);
    vm_->init_cluster(replicas, nodes);
    if (cfg_.mode == Mode::Overprovisioned) {
      // The over-provisioned fleet is static: factor-scaled and pinned on
      // both sides so neither autoscaler moves it.
      for (size_t s = 0; s < n; ++s) {
        vm_->set_min_replicas(static_cast<uint16_t>(s), replicas[s]);
        vm_->set_max_replicas(static_cast<uint16_t>(s), replicas[s]);
      }
    }
  }
  if (cfg_.faas_tier_on()) faas_ = std::make_unique<FaasTier>(graph_, cfg_.faas, eq_);

  if (cfg_.mode == Mode::ServerlessOnly)
    for (size_t s = 0; s < n; ++s) router_.set_weights(static_cast<uint16_t>(s), {0.0, 1.0});

  if (cfg_.failure.enabled) {
    const int n_nodes = static_cast<int>(vm_->nodes().size());
    for (int id : cfg_.failure.node_ids)
      if (id >= n_nodes)
        throw ValidationError(fmt::format(
            "failure.node_ids: node {} does not exist (cluster starts with {} nodes)", id,
            n_nodes));
  }
}

// A service's starting fleet, when not pinned in the scenario, is sized the
// same way the autoscaler would size it: enough pods to carry the rate at the
// start of the trace while staying at the scaling target.
void Simulation::derive_initial_replicas() {
  const size_t n = graph_.service_count();
  std::vector<double> demand(n, 0.0);
  double weight_sum = 0.0;
  for (const Entrypoint& e : cfg_.entrypoints) weight_sum += e.weight;

  for (size_t i = 0; i < arrivals_.size(); ++i) {
    const LoadTrace& tr = arrivals_[i].trace();
    const double r0 = tr.rate_at(tr.start_s());
    if (entry_of_[i] >= 0) {
      for (uint16_t s : graph_.path_from(static_cast<size_t>(entry_of_[i]))) demand[s] += r0;
    } else {
      for (const Entrypoint& e : cfg_.entrypoints) {
        const double share = r0 * e.weight / weight_sum;
        for (uint16_t s : graph_.path_from(graph_.index_of(e.service))) demand[s] += share;
      }
    }
  }

  for (size_t s = 0; s < n; ++s) {
    if (cfg_.initial_replicas[s] > 0) continue;
    const double per_pod = cfg_.hpa.cpu_target * per_pod_caps_[s];
    const int fit = demand[s] <= 0.0 ? 1 : static_cast<int>(std::ceil(demand[s] / per_pod - 1e-9));
    cfg_.initial_replicas[s] = std::max({1, cfg_.hpa.min_replicas, fit});
  }
}

RunOutcome Simulation::run(const RunOptions& opts) {
  if (ran_) throw SimulationError("a Simulation runs once; construct a new one to rerun");
  ran_ = true;
  const auto wall0 = std::chrono::steady_clock::now();

  std::shared_ptr<std::ofstream> log_file;
  if (opts.log_sink) {
    eq_.set_log_sink(opts.log_sink);
  } else if (opts.event_log && !opts.out_dir.empty()) {
    fs::create_directories(opts.out_dir);
    log_file = std::make_shared<std::ofstream>(fs::path(opts.out_dir) / "events.log");
    if (!*log_file)
      throw SimulationError("cannot open events.log under " + opts.out_dir);
    eq_.set_log_sink([f = log_file](double t, EventKind k, const std::string& note) {
      *f << fmt::format("{:.6f} {}", t, event_kind_name(k));
      if (!note.empty()) *f << ' ' << note;
      *f << '\n';
    });
  }

  const double end = cfg_.duration_s;
  const double eps = 1e-9;
  if (cfg_.controller.tick_interval_s <= end + eps)
    eq_.schedule(cfg_.controller.tick_interval_s, EventKind::ControllerTick,
                 [this] { on_controller_tick(); });
  if (vm_) {
    if (cfg_.hpa.sync_period_s <= end + eps)
      eq_.schedule(cfg_.hpa.sync_period_s, EventKind::HpaTick, [this] { on_hpa_tick(); });
    if (cfg_.ca.scan_interval_s <= end + eps)
      eq_.schedule(cfg_.ca.scan_interval_s, EventKind::CaTick, [this] { on_ca_tick(); });
  }
  if (cfg_.failure.enabled && cfg_.failure.at_s <= end) {
    std::string ids;
    for (int id : cfg_.failure.node_ids) {
      if (!ids.empty()) ids += ',';
      ids += std::to_string(id);
    }
    eq_.schedule(cfg_.failure.at_s, EventKind::NodeFailure,
                 [this] { vm_->fail_nodes(cfg_.failure.node_ids, eq_.now()); }, "nodes=" + ids);
    eq_.schedule(cfg_.failure.at_s + cfg_.failure.detection_delay_s, EventKind::NodeFailure,
                 [this] { vm_->reveal_failures(eq_.now()); }, "detected");
  }
  for (size_t i = 0; i < arrivals_.size(); ++i) schedule_arrival_chain(i);

  eq_.run_until(end);
  eq_.drain();

  if (arrivals_n_ != completions_n_ + timeouts_n_)
    throw SimulationError(fmt::format(
        "request conservation violated: {} arrivals but {} completions + {} timeouts",
        arrivals_n_, completions_n_, timeouts_n_));

  out_.name = cfg_.name;
  out_.mode = cfg_.mode;
  out_.seed = cfg_.seed;
  out_.trace_fingerprint = trace_fingerprint_;
  out_.duration_s = end;
  out_.drained_at_s = eq_.now();
  out_.arrivals = arrivals_n_;
  out_.completions = completions_n_;
  out_.timeouts = timeouts_n_;
  out_.vm_hops = router_.vm_counts();
  out_.serverless_hops = router_.serverless_counts();

  std::vector<double> lat;
  lat.reserve(recorder_.size());
  for (const LatencyRecord& r : recorder_.records()) lat.push_back(r.e2e_ms);
  std::sort(lat.begin(), lat.end());
  if (!lat.empty()) {
    out_.p50_ms = nearest_rank(lat, 0.50);
    out_.p95_ms = nearest_rank(lat, 0.95);
    out_.p99_ms = nearest_rank(lat, 0.99);
  }

  const double w = cfg_.percentile_window_s;
  out_.p50_series = percentile_series(recorder_.records(), 0.50, w, end);
  out_.p95_series = percentile_series(recorder_.records(), 0.95, w, end);
  out_.slo_p50 = slo_stats(out_.p50_series, cfg_.slo_ms, w);
  out_.slo_p95 = slo_stats(out_.p95_series, cfg_.slo_ms, w);

  if (vm_) {
    out_.cost.vm_node_seconds = vm_->node_seconds(end);
    out_.cost.vm_cost = vm_->vm_cost(end);
  }
  if (faas_) {
    const FaasUsage u = faas_->total_usage();
    out_.cost.invocations = u.invocations;
    out_.cost.billed_gb_seconds = u.billed_gb_seconds;
    out_.cost.faas_cost = faas_->cost();
    out_.cold_starts = u.cold_starts;
    out_.peak_instances = u.peak_instances;
  }
  out_.cost.total = out_.cost.vm_cost + out_.cost.faas_cost;

  out_.records = recorder_.records();
  out_.controller_series = std::move(controller_series_);
  out_.summary = build_summary();
  out_.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();

  if (!opts.out_dir.empty()) write_reports(opts.out_dir, opts.controller_log);
  return out_;
}

void Simulation::schedule_arrival_chain(size_t stream) {
  const double next = arrivals_[stream].next_after(eq_.now(), arrival_rng_[stream]);
  if (!(next <= cfg_.duration_s)) return;
  eq_.schedule(next, EventKind::RequestArrival,
               [this, stream] { on_arrival(stream, eq_.now()); }, EventQueue::kSuppressLog);
}

void Simulation::on_arrival(size_t stream, double t) {
  const uint64_t id = requests_.size();
  requests_.emplace_back();
  Request& r = requests_.back();
  r.arrival_s = t;
  const int entry = entry_of_[stream];
  r.path = entry >= 0 ? &graph_.path_from(static_cast<size_t>(entry))
                      : &graph_.sample_call_path(rng_.paths);
  r.service_s.reserve(r.path->size());
  for (uint16_t svc : *r.path) {
    const double mean_s = graph_.service(svc).service_time_ms / 1000.0;
    switch (cfg_.service_dist) {
      case ServiceDist::Exponential:
        r.service_s.push_back(rng_.service.exponential(mean_s));
        break;
      case ServiceDist::Erlang:
        r.service_s.push_back(rng_.service.erlang(cfg_.erlang_shape, mean_s));
        break;
      case ServiceDist::Deterministic:
        r.service_s.push_back(mean_s);
        break;
    }
  }
  ++arrivals_n_;
  if (eq_.logging())
    eq_.log_now(EventKind::RequestArrival,
                fmt::format("req={} entry={}", id, graph_.service((*r.path)[0]).name));

  eq_.schedule(
      t + cfg_.request_timeout_s, EventKind::RequestTimeout,
      [this, id] {
        if (requests_[id].done) return;
        if (eq_.logging()) eq_.log_now(EventKind::RequestTimeout, fmt::format("req={}", id));
        finalize(id, true);
      },
      EventQueue::kSuppressLog);

  start_hop(id);
  schedule_arrival_chain(stream);
}

void Simulation::start_hop(uint64_t id) {
  Request& r = requests_[id];
  const uint16_t svc = (*r.path)[r.hop];
  const Tier tier = router_.route(svc, r.sticky_serverless, rng_.routing);
  if (tier == Tier::VM) {
    const AdmitOutcome a = vm_->admit(svc, id);
    if (a.pod_id < 0) return;  // nothing routable; the timeout claims it
    r.pod = a.pod_id;
    if (a.start_now) begin_vm_service(id, a.pod_id);
    return;
  }
  r.sticky_serverless = true;
  r.tier_mask |= uint64_t{1} << r.hop;
  const Invocation inv = faas_->invoke(svc, id, eq_.now());
  if (inv.instance < 0) return;  // queued behind max_instances
  begin_faas_service(id, inv.instance, inv.start_delay_s, inv.cold);
}

void Simulation::begin_vm_service(uint64_t id, int pod_id) {
  Request& r = requests_[id];
  r.pod = pod_id;
  r.instance = -1;
  const double dur = r.service_s[r.hop];
  std::string note;
  if (eq_.logging())
    note = fmt::format("req={} hop={} svc={} tier=vm pod={}", id, r.hop,
                       graph_.service((*r.path)[r.hop]).name, pod_id);
  eq_.schedule(
      eq_.now(), EventKind::HopStart,
      [this, id, dur] {
        eq_.schedule(eq_.now() + dur, EventKind::HopComplete, [this, id] { complete_hop(id); },
                     eq_.logging() ? req_note(id) : std::string());
      },
      std::move(note));
}

void Simulation::begin_faas_service(uint64_t id, int instance, double extra_delay_s, bool cold) {
  Request& r = requests_[id];
  r.instance = instance;
  r.pod = -1;
  r.cold_s = cold ? extra_delay_s : 0.0;
  const uint16_t svc = (*r.path)[r.hop];
  const double dur = r.service_s[r.hop];
  if (cold) {
    std::string warm_note;
    if (eq_.logging())
      warm_note = fmt::format("svc={} inst={}", graph_.service(svc).name, instance);
    eq_.schedule(
        eq_.now() + extra_delay_s, EventKind::InstanceWarm,
        [this, svc, instance] { faas_->mark_warm(svc, instance); }, std::move(warm_note));
  }
  std::string note;
  if (eq_.logging())
    note = fmt::format("req={} hop={} svc={} tier=faas inst={}{}", id, r.hop,
                       graph_.service(svc).name, instance, cold ? " cold" : "");
  eq_.schedule(
      eq_.now() + extra_delay_s, EventKind::HopStart,
      [this, id, dur] {
        eq_.schedule(eq_.now() + dur, EventKind::HopComplete, [this, id] { complete_hop(id); },
                     eq_.logging() ? req_note(id) : std::string());
      },
      std::move(note));
}

void Simulation::complete_hop(uint64_t id) {
  Request& r = requests_[id];
  const uint16_t svc = (*r.path)[r.hop];
  if (r.instance >= 0) {
    const int inst = r.instance;
    faas_->bill(svc, r.service_s[r.hop], r.cold_s);
    faas_->release(svc, inst, eq_.now());
    r.instance = -1;
    r.cold_s = 0.0;
    feed_faas(svc, inst);
  } else if (r.pod >= 0) {
    const int pod = r.pod;
    r.pod = -1;
    vm_->release_slot(pod);
    feed_pod(pod);
  }
  if (r.done) return;  // timed out while in service; resources are now free
  ++r.hop;
  if (r.hop == r.path->size()) {
    finalize(id, false);
    return;
  }
  start_hop(id);
}

void Simulation::finalize(uint64_t id, bool timed_out) {
  Request& r = requests_[id];
  r.done = true;
  r.timed_out = timed_out;
  LatencyRecord rec;
  rec.arrival_s = r.arrival_s;
  rec.finalize_s = eq_.now();
  rec.e2e_ms = timed_out ? std::numeric_limits<double>::infinity()
                         : (eq_.now() - r.arrival_s) * 1000.0;
  rec.entry_svc = (*r.path)[0];
  rec.hops = static_cast<uint8_t>(r.path->size());
  rec.tier_mask = r.tier_mask;
  rec.timed_out = timed_out;
  recorder_.add(rec);
  if (timed_out)
    ++timeouts_n_;
  else
    ++completions_n_;
}

void Simulation::feed_pod(int pod_id) {
  Pod& p = vm_->pod(pod_id);
  if (p.failed || p.removed) return;
  const int conc = graph_.service(p.svc).concurrency_per_pod;
  while (p.in_flight < conc) {
    const auto next = vm_->pop_waiting(pod_id);
    if (!next) break;
    if (requests_[*next].done) continue;  // expired in the queue
    vm_->occupy_slot(pod_id);
    begin_vm_service(*next, pod_id);
  }
  if (p.draining && p.in_flight == 0 && p.waiting.empty()) vm_->remove_pod(pod_id, eq_.now());
}

void Simulation::feed_faas(uint16_t svc, int instance) {
  const FaasInstance& inst = faas_->instance(svc, instance);
  const int conc = cfg_.faas.per_instance_concurrency;
  while (!inst.reaped && inst.active < conc) {
    const auto next = faas_->pop_queued(svc);
    if (!next) break;
    if (requests_[*next].done) continue;  // expired in the queue
    faas_->occupy(svc, instance);
    begin_faas_service(*next, instance, cfg_.faas.warm_start_ms / 1000.0, false);
  }
}

void Simulation::on_controller_tick() {
  const size_t n = graph_.service_count();
  std::vector<int> ready(n, 0);
  if (vm_)
    for (size_t s = 0; s < n; ++s) ready[s] = vm_->visible_ready_pods(static_cast<uint16_t>(s));
  const bool act = cfg_.controller_acts();
  auto snaps = controller_.tick(eq_.now(), router_.total_counts(), ready, per_pod_caps_, act);
  if (act)
    for (size_t s = 0; s < n; ++s)
      router_.set_weights(static_cast<uint16_t>(s), controller_.weights(static_cast<uint16_t>(s)));
  controller_series_.insert(controller_series_.end(), snaps.begin(), snaps.end());

  const double next = eq_.now() + cfg_.controller.tick_interval_s;
  if (next <= cfg_.duration_s + 1e-9)
    eq_.schedule(next, EventKind::ControllerTick, [this] { on_controller_tick(); });
}

void Simulation::on_hpa_tick() {
  const size_t n = graph_.service_count();
  const bool synth = cfg_.controller_acts();
  for (size_t s = 0; s < n; ++s) {
    const auto svc = static_cast<uint16_t>(s);
    const double observed =
        synth ? synthesize_autoscaler_metric(controller_.last_rps(svc),
                                             vm_->visible_ready_pods(svc), per_pod_caps_[s])
              : vm_observed_cpu(svc);
    vm_->apply_hpa(svc, vm_->hpa_desired(svc, observed), eq_.now());
  }
  hpa_prev_vm_counts_ = router_.vm_counts();

  const double next = eq_.now() + cfg_.hpa.sync_period_s;
  if (next <= cfg_.duration_s + 1e-9)
    eq_.schedule(next, EventKind::HpaTick, [this] { on_hpa_tick(); });
}

void Simulation::on_ca_tick() {
  vm_->ca_scan(eq_.now());
  const double next = eq_.now() + cfg_.ca.scan_interval_s;
  if (next <= cfg_.duration_s + 1e-9)
    eq_.schedule(next, EventKind::CaTick, [this] { on_ca_tick(); });
}

double Simulation::vm_observed_cpu(uint16_t svc) const {
  const int ready = vm_->visible_ready_pods(svc);
  if (ready <= 0) return 0.0;
  const double rate =
      static_cast<double>(router_.vm_counts()[svc] - hpa_prev_vm_counts_[svc]) /
      cfg_.hpa.sync_period_s;
  return std::clamp(rate / (ready * per_pod_caps_[svc]), 0.0, 1.0);
}

std::string Simulation::req_note(uint64_t id) const {
  const Request& r = requests_[id];
  return fmt::format("req={} hop={} svc={}", id, r.hop, graph_.service((*r.path)[r.hop]).name);
}

nlohmann::json Simulation::build_summary() const {
  using nlohmann::json;
  auto num = [](double v) -> json {
    if (std::isinf(v)) return "inf";
    return v;
  };

  json per_service = json::object();
  uint64_t vm_total = 0;
  uint64_t sl_total = 0;
  for (size_t s = 0; s < graph_.service_count(); ++s) {
    vm_total += out_.vm_hops[s];
    sl_total += out_.serverless_hops[s];
    per_service[graph_.service(s).name] = {{"vm", out_.vm_hops[s]},
                                           {"serverless", out_.serverless_hops[s]}};
  }

  auto intervals = [](const SloStats& st) {
    json arr = json::array();
    for (const SloInterval& iv : st.intervals) arr.push_back({iv.start_s, iv.end_s});
    return arr;
  };

  return json{
      {"scenario", out_.name},
      {"mode", mode_name(out_.mode)},
      {"seed", out_.seed},
      {"duration_s", out_.duration_s},
      {"drained_at_s", out_.drained_at_s},
      {"trace_fingerprint", fmt::format("{:016x}", out_.trace_fingerprint)},
      {"requests",
       {{"arrivals", out_.arrivals},
        {"completions", out_.completions},
        {"timeouts", out_.timeouts}}},
      {"hops",
       {{"vm_total", vm_total}, {"serverless_total", sl_total}, {"per_service", per_service}}},
      {"latency_ms",
       {{"p50", num(out_.p50_ms)}, {"p95", num(out_.p95_ms)}, {"p99", num(out_.p99_ms)}}},
      {"slo",
       {{"slo_ms", cfg_.slo_ms},
        {"violation_intervals_p50", intervals(out_.slo_p50)},
        {"violation_intervals_p95", intervals(out_.slo_p95)},
        {"total_violation_p50_s", out_.slo_p50.total_violation_s},
        {"total_violation_p95_s", out_.slo_p95.total_violation_s},
        {"peak_p50_ms", num(out_.slo_p50.peak_ms)},
        {"peak_p95_ms", num(out_.slo_p95.peak_ms)}}},
      {"cost",
       {{"vm_node_seconds", out_.cost.vm_node_seconds},
        {"vm_usd", out_.cost.vm_cost},
        {"invocations", out_.cost.invocations},
        {"billed_gb_seconds", out_.cost.billed_gb_seconds},
        {"serverless_usd", out_.cost.faas_cost},
        {"total_usd", out_.cost.total}}},
      {"serverless",
       {{"cold_starts", out_.cold_starts}, {"peak_instances", out_.peak_instances}}},
  };
}

void Simulation::write_reports(const std::string& out_dir, bool controller_log) const {
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);

  {
    std::ofstream f(dir / "summary.json");
    if (!f) throw SimulationError("cannot write summary.json under " + out_dir);
    f << out_.summary.dump(2) << '\n';
  }
  {
    std::ofstream f(dir / "latency_series.csv");
    f << "window_end_s,p50_ms,p95_ms,count\n";
    for (size_t i = 0; i < out_.p95_series.size(); ++i) {
      const SeriesPoint& p50 = out_.p50_series[i];
      const SeriesPoint& p95 = out_.p95_series[i];
      f << fmt::format("{:.6g},{},{},{}\n", p95.window_end_s, csv_cell(p50), csv_cell(p95),
                       p95.count);
    }
  }
  {
    std::ofstream f(dir / "slo_report.json");
    f << out_.summary["slo"].dump(2) << '\n';
  }
  {
    std::ofstream f(dir / "cost_report.json");
    f << out_.summary["cost"].dump(2) << '\n';
  }
  if (controller_log) {
    std::ofstream f(dir / "controller.csv");
    f << "time,service,rps_t,rps_prev,capacity,w_v,w_s,synth_cpu\n";
    for (const MetricsSnapshot& m : out_.controller_series)
      f << fmt::format("{:.6g},{},{:.6g},{:.6g},{:.6g},{:.6g},{:.6g},{:.6g}\n", m.t_s,
                       graph_.service(m.svc).name, m.rps_t, m.rps_prev, m.capacity_rps,
                       m.weights.vm, m.weights.serverless, m.synth_cpu);
  }
}

RunOutcome run_scenario(const ScenarioConfig& cfg, const RunOptions& opts) {
  Simulation sim(cfg);
  return sim.run(opts);
}

}  // namespace flaresim
