#include "flaresim/scenario.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "flaresim/errors.hpp"
#include "flaresim/toml_lite.hpp"

namespace flaresim {

namespace {

using nlohmann::json;

const char* kModeNames[] = {"baseline", "flare", "overprovisioned", "serverless_only",
                            "node_failure"};

struct Collector {
  std::vector<std::string> errors;

  void add(std::string msg) { errors.push_back(std::move(msg)); }

  void finish(const std::string& what) const {
    if (errors.empty()) return;
    std::string msg = fmt::format("invalid scenario '{}':", what);
    for (const auto& e : errors) msg += "\n  - " + e;
    throw ValidationError(msg);
  }
};

// Typed field access that records problems instead of throwing, so a bad file
// reports everything wrong with it at once.
struct Table {
  const json& j;
  std::string where;
  Collector& errs;

  void allow_only(std::initializer_list<const char*> keys) const {
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (auto it = j.begin(); it != j.end(); ++it)
      if (!allowed.count(it.key()))
        errs.add(fmt::format("{}: unknown key '{}'", where, it.key()));
  }

  bool has(const char* key) const { return j.contains(key); }

  double number(const char* key, double fallback, double lo, double hi,
                bool required = false) {
    if (!j.contains(key)) {
      if (required) errs.add(fmt::format("{}: missing required key '{}'", where, key));
      return fallback;
    }
    const json& v = j.at(key);
    if (!v.is_number()) {
      errs.add(fmt::format("{}: '{}' must be a number", where, key));
      return fallback;
    }
    double d = v.get<double>();
    if (!std::isfinite(d) || d < lo || d > hi) {
      errs.add(fmt::format("{}: '{}' = {} outside [{}, {}]", where, key, d, lo, hi));
      return fallback;
    }
    return d;
  }

  int integer(const char* key, int fallback, int lo, int hi, bool required = false) {
    if (!j.contains(key)) {
      if (required) errs.add(fmt::format("{}: missing required key '{}'", where, key));
      return fallback;
    }
    const json& v = j.at(key);
    if (!v.is_number_integer()) {
      errs.add(fmt::format("{}: '{}' must be an integer", where, key));
      return fallback;
    }
    auto n = v.get<int64_t>();
    if (n < lo || n > hi) {
      errs.add(fmt::format("{}: '{}' = {} outside [{}, {}]", where, key, n, lo, hi));
      return fallback;
    }
    return static_cast<int>(n);
  }

  bool boolean(const char* key, bool fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_boolean()) {
      errs.add(fmt::format("{}: '{}' must be a boolean", where, key));
      return fallback;
    }
    return v.get<bool>();
  }

  std::string text(const char* key, const std::string& fallback, bool required = false) {
    if (!j.contains(key)) {
      if (required) errs.add(fmt::format("{}: missing required key '{}'", where, key));
      return fallback;
    }
    const json& v = j.at(key);
    if (!v.is_string()) {
      errs.add(fmt::format("{}: '{}' must be a string", where, key));
      return fallback;
    }
    return v.get<std::string>();
  }
};

json json_or_empty(const json& j, const char* key) {
  return j.contains(key) ? j.at(key) : json::object();
}

}  // namespace

const char* mode_name(Mode m) { return kModeNames[static_cast<int>(m)]; }

Mode parse_mode(const std::string& name) {
  for (int i = 0; i < 5; ++i)
    if (name == kModeNames[i]) return static_cast<Mode>(i);
  throw ValidationError(fmt::format(
      "unknown mode '{}' (expected baseline, flare, overprovisioned, "
      "serverless_only or node_failure)",
      name));
}

LoadTrace TraceSpec::build(double total_s, const std::string& base_dir) const {
  LoadTrace t;
  switch (kind) {
    case Kind::Csv: {
      std::filesystem::path p(path);
      if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
      t = parse_trace_file(p.string(), unit);
      break;
    }
    case Kind::Spike:
      t = synthesize_spike(spike, total_s, resolution_s);
      break;
    case Kind::Constant: {
      std::vector<double> times, rates;
      for (double at = 0.0; at <= total_s + 1e-9; at += resolution_s) {
        times.push_back(at);
        rates.push_back(rate_rps);
      }
      t = LoadTrace(std::move(times), std::move(rates));
      break;
    }
  }
  if (scale != 1.0) t = scale_trace(t, scale);
  return t;
}

ScenarioConfig scenario_from_json(const json& j, const std::string& base_dir,
                                  const std::string& name_hint) {
  Collector errs;
  if (!j.is_object()) throw ValidationError("scenario: top level must be a table");

  Table root{j, "scenario", errs};
  root.allow_only({"name", "mode", "seed", "duration_s", "deterministic_arrivals",
                   "service_time_distribution", "erlang_shape", "request_timeout_s", "slo_ms",
                   "percentile_window_s", "service", "entrypoint", "trace", "cluster",
                   "hpa", "faas", "controller", "overprovision", "failure"});

  ScenarioConfig cfg;
  cfg.base_dir = base_dir;
  cfg.name = root.text("name", name_hint);

  std::string mode_str = root.text("mode", "", true);
  if (!mode_str.empty()) {
    try {
      cfg.mode = parse_mode(mode_str);
    } catch (const ValidationError& e) {
      errs.add(e.what());
    }
  }

  if (!j.contains("seed")) {
    errs.add("scenario: missing required key 'seed' (runs never seed from the clock)");
  } else if (!j.at("seed").is_number_integer() || j.at("seed").get<int64_t>() < 0) {
    errs.add("scenario: 'seed' must be a non-negative integer");
  } else {
    cfg.seed = j.at("seed").get<uint64_t>();
  }

  cfg.duration_s = root.number("duration_s", 0.0, 1e-9, 1e9, true);
  cfg.deterministic_arrivals = root.boolean("deterministic_arrivals", false);
  cfg.request_timeout_s = root.number("request_timeout_s", 10.0, 1e-9, 1e6);
  cfg.slo_ms = root.number("slo_ms", 400.0, 1e-9, 1e9);
  cfg.percentile_window_s = root.number("percentile_window_s", 5.0, 1e-9, 1e6);

  std::string dist = root.text("service_time_distribution", "exponential");
  if (dist == "exponential") cfg.service_dist = ServiceDist::Exponential;
  else if (dist == "deterministic") cfg.service_dist = ServiceDist::Deterministic;
  else if (dist == "erlang") cfg.service_dist = ServiceDist::Erlang;
  else errs.add(fmt::format("scenario: service_time_distribution '{}' must be exponential, deterministic, or erlang", dist));
  cfg.erlang_shape = root.integer("erlang_shape", 16, 1, 1000);

  // --- services ---
  if (!j.contains("service") || !j.at("service").is_array() || j.at("service").empty()) {
    errs.add("scenario: at least one [[service]] is required");
  } else {
    for (const auto& js : j.at("service")) {
      Table ts{js, "service", errs};
      ts.allow_only({"name", "service_time_ms", "per_pod_capacity_rps", "vcpu_per_pod",
                     "concurrency_per_pod", "downstream", "initial_replicas"});
      ServiceSpec s;
      s.name = ts.text("name", "", true);
      ts.where = fmt::format("service '{}'", s.name);
      s.service_time_ms = ts.number("service_time_ms", 1.0, 1e-9, 1e7, true);
      s.per_pod_capacity_rps = ts.number("per_pod_capacity_rps", 1.0, 1e-9, 1e9, true);
      s.vcpu_per_pod = ts.number("vcpu_per_pod", 0.5, 1e-9, 1024.0);
      s.concurrency_per_pod = ts.integer("concurrency_per_pod", 1, 1, 100000);
      if (js.contains("downstream")) {
        if (!js.at("downstream").is_array()) {
          errs.add(fmt::format("{}: 'downstream' must be an array of service names", ts.where));
        } else {
          for (const auto& d : js.at("downstream")) {
            if (!d.is_string()) errs.add(fmt::format("{}: downstream entries must be strings", ts.where));
            else s.downstream.push_back(d.get<std::string>());
          }
        }
      }
      cfg.services.push_back(std::move(s));
      cfg.initial_replicas.push_back(ts.integer("initial_replicas", -1, 1, 1000000));
    }
  }

  // --- entrypoints ---
  if (!j.contains("entrypoint") || !j.at("entrypoint").is_array() || j.at("entrypoint").empty()) {
    errs.add("scenario: at least one [[entrypoint]] is required");
  } else {
    for (const auto& je : j.at("entrypoint")) {
      Table te{je, "entrypoint", errs};
      te.allow_only({"service", "weight"});
      Entrypoint e;
      e.service = te.text("service", "", true);
      e.weight = te.number("weight", 0.0, 0.0, 1.0, true);
      cfg.entrypoints.push_back(std::move(e));
    }
  }

  // --- traces ---
  if (!j.contains("trace")) {
    errs.add("scenario: at least one [[trace]] is required");
  } else {
    const json& jt_all = j.at("trace");
    if (!jt_all.is_array() || jt_all.empty()) {
      errs.add("scenario: 'trace' must be a non-empty array of tables");
    } else {
      for (const auto& jt : jt_all) {
        Table tt{jt, "trace", errs};
        tt.allow_only({"kind", "entry", "path", "unit", "baseline_rps", "peak_rps",
                       "start_s", "ramp_s", "hold_s", "decay_s", "rate_rps",
                       "resolution_s", "scale"});
        TraceSpec t;
        t.entry = tt.text("entry", "");
        t.resolution_s = tt.number("resolution_s", 1.0, 1e-9, 1e6);
        t.scale = tt.number("scale", 1.0, 1e-12, 1e12);
        std::string kind = tt.text("kind", "", true);
        if (kind == "csv") {
          t.kind = TraceSpec::Kind::Csv;
          t.path = tt.text("path", "", true);
          std::string unit = tt.text("unit", "per_second");
          if (unit == "per_second") t.unit = RateUnit::PerSecond;
          else if (unit == "per_minute") t.unit = RateUnit::PerMinute;
          else errs.add(fmt::format("trace: unit '{}' must be per_second or per_minute", unit));
        } else if (kind == "spike") {
          t.kind = TraceSpec::Kind::Spike;
          t.spike.baseline_rps = tt.number("baseline_rps", 0.0, 0.0, 1e9, true);
          t.spike.peak_rps = tt.number("peak_rps", 0.0, 0.0, 1e9, true);
          t.spike.start_s = tt.number("start_s", 0.0, 0.0, 1e9, true);
          t.spike.ramp_s = tt.number("ramp_s", 0.0, 0.0, 1e9, true);
          t.spike.hold_s = tt.number("hold_s", 0.0, 0.0, 1e9, true);
          t.spike.decay_s = tt.number("decay_s", 0.0, 0.0, 1e9, true);
        } else if (kind == "constant") {
          t.kind = TraceSpec::Kind::Constant;
          t.rate_rps = tt.number("rate_rps", 0.0, 0.0, 1e9, true);
        } else {
          errs.add(fmt::format("trace: kind '{}' must be csv, spike or constant", kind));
        }
        cfg.traces.push_back(std::move(t));
      }
    }
  }

  // --- cluster / autoscalers ---
  {
    Table tc{json_or_empty(j, "cluster"), "cluster", errs};
    tc.allow_only({"initial_nodes", "pods_per_vm", "vm_boot_delay_s", "vm_hourly_cost",
                   "vcpu_per_vm", "ca_scan_interval_s", "idle_grace_s"});
    cfg.initial_nodes = tc.integer("initial_nodes", -1, 1, 1000000);
    cfg.ca.pods_per_vm = tc.integer("pods_per_vm", 4, 1, 10000);
    cfg.ca.vm_boot_delay_s = tc.number("vm_boot_delay_s", 120.0, 60.0, 600.0);
    cfg.ca.vm_hourly_cost = tc.number("vm_hourly_cost", 0.1670, 0.0, 1e6);
    cfg.ca.vcpu_per_vm = tc.integer("vcpu_per_vm", 4, 1, 1024);
    cfg.ca.scan_interval_s = tc.number("ca_scan_interval_s", 10.0, 1e-9, 1e6);
    cfg.ca.idle_grace_s = tc.number("idle_grace_s", 120.0, 0.0, 1e6);
  }
  {
    Table th{json_or_empty(j, "hpa"), "hpa", errs};
    th.allow_only({"cpu_target", "sync_period_s", "min_replicas", "max_replicas",
                   "pod_start_delay_s", "scale_down_stabilization_s"});
    cfg.hpa.cpu_target = th.number("cpu_target", 0.50, 1e-9, 1.0);
    cfg.hpa.sync_period_s = th.number("sync_period_s", 15.0, 1e-9, 1e6);
    cfg.hpa.min_replicas = th.integer("min_replicas", 1, 1, 1000000);
    cfg.hpa.max_replicas = th.integer("max_replicas", 1000, 1, 1000000);
    if (cfg.hpa.max_replicas < cfg.hpa.min_replicas)
      errs.add("hpa: max_replicas must be >= min_replicas");
    cfg.hpa.pod_start_delay_s = th.number("pod_start_delay_s", 10.0, 0.0, 1e6);
    cfg.hpa.scale_down_stabilization_s = th.number("scale_down_stabilization_s", 300.0, 0.0, 1e6);
  }
  {
    Table tf{json_or_empty(j, "faas"), "faas", errs};
    tf.allow_only({"enabled", "cold_start_ms", "warm_start_ms", "keep_alive_s",
                   "per_instance_concurrency", "max_instances", "prewarmed", "memory_gb",
                   "price_per_invocation", "price_per_gb_s", "bill_cold_start",
                   "billing_granularity_ms"});
    cfg.faas.enabled = tf.boolean("enabled", true);
    cfg.faas.cold_start_ms = tf.number("cold_start_ms", 150.0, 0.0, 1e7);
    cfg.faas.warm_start_ms = tf.number("warm_start_ms", 1.0, 0.0, 1e7);
    cfg.faas.keep_alive_s = tf.number("keep_alive_s", 600.0, 0.0, 1e7);
    cfg.faas.per_instance_concurrency = tf.integer("per_instance_concurrency", 1, 1, 100000);
    cfg.faas.max_instances = tf.integer("max_instances", 10000, 1, 100000000);
    cfg.faas.prewarmed = tf.boolean("prewarmed", false);
    cfg.faas.memory_gb = tf.number("memory_gb", 1.0, 1e-9, 1e4);
    cfg.faas.price_per_invocation = tf.number("price_per_invocation", 2.0e-7, 0.0, 1e3);
    cfg.faas.price_per_gb_s = tf.number("price_per_gb_s", 1.6667e-5, 0.0, 1e3);
    cfg.faas.bill_cold_start = tf.boolean("bill_cold_start", false);
    cfg.faas.billing_granularity_ms = tf.number("billing_granularity_ms", 1.0, 1e-9, 1e7);
  }
  {
    Table tk{json_or_empty(j, "controller"), "controller", errs};
    tk.allow_only({"tick_interval_s", "ewma_alpha"});
    cfg.controller.tick_interval_s = tk.number("tick_interval_s", 1.0, 1e-9, 1e6);
    cfg.controller.ewma_alpha = tk.number("ewma_alpha", 0.0, 0.0, 1.0);
  }
  {
    Table to{json_or_empty(j, "overprovision"), "overprovision", errs};
    to.allow_only({"factor"});
    cfg.overprovision_factor = to.number("factor", 2.0, 1.0, 100.0);
  }
  if (j.contains("failure")) {
    Table tl{j.at("failure"), "failure", errs};
    tl.allow_only({"at_s", "node_ids", "detection_delay_s"});
    cfg.failure.enabled = true;
    cfg.failure.at_s = tl.number("at_s", 0.0, 0.0, 1e9, true);
    cfg.failure.detection_delay_s = tl.number("detection_delay_s", 45.0, 0.0, 1e6);
    if (!j.at("failure").contains("node_ids") || !j.at("failure").at("node_ids").is_array() ||
        j.at("failure").at("node_ids").empty()) {
      errs.add("failure: 'node_ids' must be a non-empty array of node indices");
    } else {
      for (const auto& v : j.at("failure").at("node_ids")) {
        if (!v.is_number_integer() || v.get<int64_t>() < 0)
          errs.add("failure: node ids must be integers >= 0");
        else
          cfg.failure.node_ids.push_back(v.get<int>());
      }
    }
  }

  // --- cross-field rules ---
  if (cfg.mode == Mode::NodeFailure && !cfg.failure.enabled)
    errs.add("mode 'node_failure' requires a [failure] table (at_s, node_ids, detection_delay_s)");
  if (cfg.failure.enabled &&
      (cfg.mode == Mode::ServerlessOnly || cfg.mode == Mode::Overprovisioned))
    errs.add(fmt::format("[failure] is not supported in mode '{}'", mode_name(cfg.mode)));
  if (cfg.mode == Mode::ServerlessOnly && !cfg.faas.enabled)
    errs.add("mode 'serverless_only' cannot run with faas disabled");

  if (!cfg.services.empty() && !cfg.entrypoints.empty()) {
    try {
      validate_graph(cfg.services, cfg.entrypoints);
    } catch (const ValidationError& e) {
      errs.add(e.what());
    }
  }

  // Trace/entry pairing: one anonymous trace drives the weighted entrypoints,
  // or every entrypoint gets its own named trace.
  size_t named = 0;
  for (const auto& t : cfg.traces)
    if (!t.entry.empty()) ++named;
  if (named == 0) {
    if (cfg.traces.size() > 1) errs.add("multiple traces require an 'entry' key on each");
  } else if (named != cfg.traces.size()) {
    errs.add("either give every trace an 'entry' or use a single anonymous trace");
  } else {
    std::set<std::string> covered;
    for (const auto& t : cfg.traces) {
      bool is_entry = false;
      for (const auto& e : cfg.entrypoints) is_entry |= e.service == t.entry;
      if (!is_entry) errs.add(fmt::format("trace entry '{}' is not an entrypoint", t.entry));
      if (!covered.insert(t.entry).second)
        errs.add(fmt::format("duplicate trace for entry '{}'", t.entry));
    }
    for (const auto& e : cfg.entrypoints)
      if (!covered.count(e.service))
        errs.add(fmt::format("entrypoint '{}' has no trace", e.service));
  }

  // Building traces validates spike arithmetic and csv files up front.
  if (errs.errors.empty()) {
    for (const auto& t : cfg.traces) {
      try {
        t.build(cfg.duration_s, cfg.base_dir);
      } catch (const std::exception& e) {
        errs.add(e.what());
      }
    }
  }

  errs.finish(cfg.name.empty() ? name_hint : cfg.name);
  return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValidationError(fmt::format("cannot open scenario '{}'", path));
  std::ostringstream buf;
  buf << f.rdbuf();

  std::filesystem::path p(path);
  std::string stem = p.stem().string();
  std::string dir = p.parent_path().string();

  json j;
  if (p.extension() == ".json") {
    j = json::parse(buf.str(), nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded())
      throw ValidationError(fmt::format("{}: not valid JSON", path));
  } else {
    try {
      j = toml_lite_parse(buf.str());
    } catch (const ValidationError& e) {
      throw ValidationError(fmt::format("{}: {}", path, e.what()));
    }
  }
  try {
    return scenario_from_json(j, dir, stem);
  } catch (const ValidationError& e) {
    throw ValidationError(fmt::format("{}: {}", path, e.what()));
  }
}

nlohmann::json ScenarioConfig::to_json() const {
  json j;
  j["name"] = name;
  j["mode"] = mode_name(mode);
  j["seed"] = seed;
  j["duration_s"] = duration_s;
  j["deterministic_arrivals"] = deterministic_arrivals;
  j["service_time_distribution"] = service_dist == ServiceDist::Exponential ? "exponential"
                                   : service_dist == ServiceDist::Erlang    ? "erlang"
                                                                            : "deterministic";
  if (service_dist == ServiceDist::Erlang) j["erlang_shape"] = erlang_shape;
  j["request_timeout_s"] = request_timeout_s;
  j["slo_ms"] = slo_ms;
  j["percentile_window_s"] = percentile_window_s;

  j["service"] = json::array();
  for (size_t i = 0; i < services.size(); ++i) {
    const auto& s = services[i];
    json js;
    js["name"] = s.name;
    js["service_time_ms"] = s.service_time_ms;
    js["per_pod_capacity_rps"] = s.per_pod_capacity_rps;
    js["vcpu_per_pod"] = s.vcpu_per_pod;
    js["concurrency_per_pod"] = s.concurrency_per_pod;
    js["downstream"] = s.downstream;
    if (initial_replicas[i] > 0) js["initial_replicas"] = initial_replicas[i];
    j["service"].push_back(js);
  }

  j["entrypoint"] = json::array();
  for (const auto& e : entrypoints)
    j["entrypoint"].push_back({{"service", e.service}, {"weight", e.weight}});

  j["trace"] = json::array();
  for (const auto& t : traces) {
    json jt;
    if (!t.entry.empty()) jt["entry"] = t.entry;
    jt["resolution_s"] = t.resolution_s;
    jt["scale"] = t.scale;
    switch (t.kind) {
      case TraceSpec::Kind::Csv:
        jt["kind"] = "csv";
        jt["path"] = t.path;
        jt["unit"] = t.unit == RateUnit::PerMinute ? "per_minute" : "per_second";
        break;
      case TraceSpec::Kind::Spike:
        jt["kind"] = "spike";
        jt["baseline_rps"] = t.spike.baseline_rps;
        jt["peak_rps"] = t.spike.peak_rps;
        jt["start_s"] = t.spike.start_s;
        jt["ramp_s"] = t.spike.ramp_s;
        jt["hold_s"] = t.spike.hold_s;
        jt["decay_s"] = t.spike.decay_s;
        break;
      case TraceSpec::Kind::Constant:
        jt["kind"] = "constant";
        jt["rate_rps"] = t.rate_rps;
        break;
    }
    j["trace"].push_back(jt);
  }

  j["cluster"] = {{"pods_per_vm", ca.pods_per_vm},
                  {"vm_boot_delay_s", ca.vm_boot_delay_s},
                  {"vm_hourly_cost", ca.vm_hourly_cost},
                  {"vcpu_per_vm", ca.vcpu_per_vm},
                  {"ca_scan_interval_s", ca.scan_interval_s},
                  {"idle_grace_s", ca.idle_grace_s}};
  if (initial_nodes > 0) j["cluster"]["initial_nodes"] = initial_nodes;

  j["hpa"] = {{"cpu_target", hpa.cpu_target},
              {"sync_period_s", hpa.sync_period_s},
              {"min_replicas", hpa.min_replicas},
              {"max_replicas", hpa.max_replicas},
              {"pod_start_delay_s", hpa.pod_start_delay_s},
              {"scale_down_stabilization_s", hpa.scale_down_stabilization_s}};

  j["faas"] = {{"enabled", faas.enabled},
               {"cold_start_ms", faas.cold_start_ms},
               {"warm_start_ms", faas.warm_start_ms},
               {"keep_alive_s", faas.keep_alive_s},
               {"per_instance_concurrency", faas.per_instance_concurrency},
               {"max_instances", faas.max_instances},
               {"prewarmed", faas.prewarmed},
               {"memory_gb", faas.memory_gb},
               {"price_per_invocation", faas.price_per_invocation},
               {"price_per_gb_s", faas.price_per_gb_s},
               {"bill_cold_start", faas.bill_cold_start},
               {"billing_granularity_ms", faas.billing_granularity_ms}};

  j["controller"] = {{"tick_interval_s", controller.tick_interval_s},
                     {"ewma_alpha", controller.ewma_alpha}};
  j["overprovision"] = {{"factor", overprovision_factor}};
  if (failure.enabled)
    j["failure"] = {{"at_s", failure.at_s},
                    {"node_ids", failure.node_ids},
                    {"detection_delay_s", failure.detection_delay_s}};
  return j;
}

}  // namespace flaresim
