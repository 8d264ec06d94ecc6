#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <nlohmann/json.hpp>
#include <string>

#include "flaresim/controller.hpp"
#include "flaresim/errors.hpp"
#include "flaresim/metrics.hpp"
#include "flaresim/scenario.hpp"
#include "flaresim/simulation.hpp"

namespace py = pybind11;
using namespace flaresim;

namespace {

py::object json_to_py(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

nlohmann::json py_to_json(const py::object& obj) {
  auto dumped = py::module_::import("json").attr("dumps")(obj).cast<std::string>();
  return nlohmann::json::parse(dumped);
}

py::object run_cfg(ScenarioConfig cfg, const py::object& mode, const py::object& seed,
                   const std::string& out_dir, bool event_log, bool controller_log) {
  if (!mode.is_none()) cfg.mode = parse_mode(mode.cast<std::string>());
  if (!seed.is_none()) cfg.seed = seed.cast<uint64_t>();
  RunOptions opts;
  opts.out_dir = out_dir;
  opts.event_log = event_log;
  opts.controller_log = controller_log;
  nlohmann::json summary;
  {
    py::gil_scoped_release release;
    summary = run_scenario(cfg, opts).summary;
  }
  return json_to_py(summary);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Discrete-event simulator of microservice chains on a VM tier "
            "with controlled spillover to a serverless tier.";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<SimulationError>(m, "SimulationError", PyExc_RuntimeError);

  m.def(
      "compute_weights",
      [](double capacity_rps, double rps, double prev_rps) {
        RoutingWeights w = compute_weights(capacity_rps, rps, prev_rps);
        return py::make_tuple(w.vm, w.serverless);
      },
      py::arg("capacity_rps"), py::arg("rps"), py::arg("prev_rps"),
      "Traffic split (vm, serverless) from advertised capacity and the last "
      "two rate samples.");

  m.def("synthesize_autoscaler_metric", &synthesize_autoscaler_metric, py::arg("total_rps"),
        py::arg("ready_pods"), py::arg("per_pod_capacity_rps"),
        "Utilization signal fed to the horizontal autoscaler in place of "
        "VM-observed CPU.");

  m.def("nearest_rank", &nearest_rank, py::arg("sorted_values"), py::arg("p"),
        "Nearest-rank percentile of an ascending sample, p in (0, 1].");

  m.def(
      "load_scenario",
      [](const std::string& path) { return json_to_py(load_scenario(path).to_json()); },
      py::arg("path"), "Parse and validate a scenario file into a dict.");

  m.def(
      "run",
      [](const std::string& path, const py::object& mode, const py::object& seed,
         const std::string& out_dir, bool event_log, bool controller_log) {
        return run_cfg(load_scenario(path), mode, seed, out_dir, event_log, controller_log);
      },
      py::arg("path"), py::arg("mode") = py::none(), py::arg("seed") = py::none(),
      py::arg("out_dir") = std::string(), py::arg("event_log") = false,
      py::arg("controller_log") = false,
      "Run a scenario file and return its summary as a dict. mode and seed "
      "override the file; out_dir enables report files.");

  m.def(
      "run_config",
      [](const py::dict& config, const py::object& mode, const py::object& seed,
         const std::string& out_dir, bool event_log, bool controller_log) {
        ScenarioConfig cfg = scenario_from_json(py_to_json(config), ".", "inline");
        return run_cfg(std::move(cfg), mode, seed, out_dir, event_log, controller_log);
      },
      py::arg("config"), py::arg("mode") = py::none(), py::arg("seed") = py::none(),
      py::arg("out_dir") = std::string(), py::arg("event_log") = false,
      py::arg("controller_log") = false,
      "Run a scenario given as a dict (same schema as the files).");

#ifdef FLARESIM_VERSION_INFO
  m.attr("__version__") = FLARESIM_VERSION_INFO;
#else
  m.attr("__version__") = "dev";
#endif
}
