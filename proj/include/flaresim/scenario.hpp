#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "flaresim/controller.hpp"
#include "flaresim/faastier.hpp"
#include "flaresim/topology.hpp"
#include "flaresim/trace.hpp"
#include "flaresim/vmtier.hpp"

namespace flaresim {

enum class Mode { Baseline, Flare, Overprovisioned, ServerlessOnly, NodeFailure };

const char* mode_name(Mode m);
Mode parse_mode(const std::string& name);

enum class ServiceDist { Exponential, Deterministic, Erlang };

struct TraceSpec {
  enum class Kind { Csv, Spike, Constant } kind = Kind::Constant;
  std::string entry;  // empty: drives the whole graph via entrypoint weights
  // csv
  std::string path;
  RateUnit unit = RateUnit::PerSecond;
  // spike
  SpikeSpec spike;
  // constant
  double rate_rps = 0.0;
  double resolution_s = 1.0;
  double scale = 1.0;

  LoadTrace build(double total_s, const std::string& base_dir) const;
};

struct FailureSpec {
  bool enabled = false;
  double at_s = 0.0;
  std::vector<int> node_ids;
  double detection_delay_s = 45.0;
};

struct ScenarioConfig {
  std::string name;
  Mode mode = Mode::Baseline;
  uint64_t seed = 0;
  double duration_s = 0.0;

  std::vector<ServiceSpec> services;
  std::vector<Entrypoint> entrypoints;
  std::vector<int> initial_replicas;  // aligned with services; -1 = derive from load
  int initial_nodes = -1;             // -1 = just enough for the initial pods

  std::vector<TraceSpec> traces;
  bool deterministic_arrivals = false;
  ServiceDist service_dist = ServiceDist::Exponential;
  int erlang_shape = 16;  // stages when service_dist is Erlang; CV = 1/sqrt(k)

  double request_timeout_s = 10.0;
  double slo_ms = 400.0;
  double percentile_window_s = 5.0;

  HpaConfig hpa;
  CaConfig ca;
  FaasConfig faas;
  ControllerConfig controller;
  double overprovision_factor = 2.0;
  FailureSpec failure;

  std::string base_dir;  // directory of the scenario file, for relative paths

  // Mode-resolved switches.
  bool vm_tier_on() const { return mode != Mode::ServerlessOnly; }
  bool faas_tier_on() const {
    if (mode == Mode::ServerlessOnly) return true;
    if (mode == Mode::Flare || mode == Mode::NodeFailure) return faas.enabled;
    return false;
  }
  bool controller_acts() const {
    return (mode == Mode::Flare || mode == Mode::NodeFailure) && faas.enabled;
  }

  nlohmann::json to_json() const;
};

// Loads .toml or .json scenario files. Every structural problem (unknown
// keys, missing fields, out-of-range values) is collected into a single
// ValidationError.
ScenarioConfig load_scenario(const std::string& path);
ScenarioConfig scenario_from_json(const nlohmann::json& j, const std::string& base_dir,
                                  const std::string& name_hint);

}  // namespace flaresim
