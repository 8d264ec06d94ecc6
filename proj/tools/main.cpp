// Command line front end: run scenarios, compare finished runs, fit service
// constants to latency targets. Exit codes: 0 ok, 1 bad input, 2 broken
// run-time invariant.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "flaresim/errors.hpp"
#include "flaresim/scenario.hpp"
#include "flaresim/simulation.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace flaresim;

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double as_number(const json& v) {
  if (v.is_string()) return std::numeric_limits<double>::infinity();  // "inf" sentinel
  return v.get<double>();
}

std::string show_ms(double v) {
  if (std::isinf(v)) return "inf";
  return fmt::format("{:.1f}", v);
}

std::string default_out_dir(const std::string& scenario_name) {
  if (const char* env = std::getenv("FLARESIM_OUT_DIR"))
    return (fs::path(env) / scenario_name).string();
  return (fs::path("runs") / scenario_name).string();
}

void print_run_line(const RunOutcome& out) {
  fmt::print(
      "{} mode={} seed={} arrivals={} timeouts={} p50={}ms p95={}ms "
      "viol_p95={:.1f}s cost={:.4f} wall={:.2f}s\n",
      out.name, mode_name(out.mode), out.seed, out.arrivals, out.timeouts, show_ms(out.p50_ms),
      show_ms(out.p95_ms), out.slo_p95.total_violation_s, out.cost.total, out.wall_seconds);
}

int cmd_simulate(const std::string& path, std::string out_dir, int64_t seed_override,
                 const std::string& mode_override, bool event_log, bool controller_log,
                 int repeat) {
  ScenarioConfig cfg = load_scenario(path);
  if (seed_override >= 0) cfg.seed = static_cast<uint64_t>(seed_override);
  if (!mode_override.empty()) cfg.mode = parse_mode(mode_override);
  if (out_dir.empty()) out_dir = default_out_dir(cfg.name);

  if (repeat <= 1) {
    RunOptions opts;
    opts.out_dir = out_dir;
    opts.event_log = event_log;
    opts.controller_log = controller_log;
    RunOutcome out = run_scenario(cfg, opts);
    print_run_line(out);
    return 0;
  }

  // One fully isolated simulation per worker thread, seeds counting up from
  // the scenario seed, reports in per-seed subdirectories.
  std::vector<std::thread> workers;
  std::vector<RunOutcome> outcomes(repeat);
  std::vector<std::exception_ptr> errors(repeat);
  for (int i = 0; i < repeat; ++i) {
    workers.emplace_back([&, i] {
      try {
        ScenarioConfig c = cfg;
        c.seed = cfg.seed + static_cast<uint64_t>(i);
        RunOptions opts;
        opts.out_dir = (fs::path(out_dir) / fmt::format("seed_{}", c.seed)).string();
        opts.event_log = event_log;
        opts.controller_log = controller_log;
        outcomes[i] = run_scenario(c, opts);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<double> p95s, viols;
  for (const RunOutcome& out : outcomes) {
    print_run_line(out);
    p95s.push_back(out.slo_p95.peak_ms);
    viols.push_back(out.slo_p95.total_violation_s);
  }
  fmt::print("median over {} seeds: peak_p95={}ms viol_p95={:.1f}s\n", repeat,
             show_ms(median(p95s)), median(viols));
  return 0;
}

struct RunGroup {
  std::string mode;
  std::vector<json> runs;
};

int cmd_compare(const std::vector<std::string>& dirs, const std::string& out_file, bool force) {
  std::vector<RunGroup> groups;
  std::string fingerprint;
  std::string scenario;
  for (const std::string& dir : dirs) {
    const fs::path p = fs::path(dir) / "summary.json";
    std::ifstream f(p);
    if (!f) throw ValidationError("no summary.json under " + dir);
    json s = json::parse(f, nullptr, false);
    if (s.is_discarded()) throw ValidationError("unparseable summary.json under " + dir);

    const std::string fp = s.value("trace_fingerprint", "");
    if (fingerprint.empty()) {
      fingerprint = fp;
      scenario = s.value("scenario", "");
    } else if (fp != fingerprint && !force) {
      throw ValidationError(fmt::format(
          "refusing to compare different traces: {} has fingerprint {}, expected {} "
          "(pass --force to override)",
          dir, fp, fingerprint));
    }
    const std::string mode = s.value("mode", "?");
    auto it = std::find_if(groups.begin(), groups.end(),
                           [&](const RunGroup& g) { return g.mode == mode; });
    if (it == groups.end()) {
      groups.push_back({mode, {}});
      it = groups.end() - 1;
    }
    it->runs.push_back(std::move(s));
  }

  auto seeds_of = [](const RunGroup& g) {
    std::vector<uint64_t> seeds;
    for (const json& r : g.runs) seeds.push_back(r.value("seed", uint64_t{0}));
    std::sort(seeds.begin(), seeds.end());
    return seeds;
  };
  const auto ref_seeds = seeds_of(groups.front());
  for (const RunGroup& g : groups) {
    const auto seeds = seeds_of(g);
    if (seeds != ref_seeds && !force)
      throw ValidationError(fmt::format(
          "refusing to compare mismatched seeds: {} ran [{}], {} ran [{}] "
          "(pass --force to override)",
          groups.front().mode, fmt::join(ref_seeds, ","), g.mode, fmt::join(seeds, ",")));
  }

  json table = json::array();
  double ref_peak95 = 0.0;
  double ref_cost = 0.0;
  for (size_t gi = 0; gi < groups.size(); ++gi) {
    const RunGroup& g = groups[gi];
    std::vector<double> peak50, peak95, viol50, viol95, cost;
    for (const json& r : g.runs) {
      peak50.push_back(as_number(r["slo"]["peak_p50_ms"]));
      peak95.push_back(as_number(r["slo"]["peak_p95_ms"]));
      viol50.push_back(as_number(r["slo"]["total_violation_p50_s"]));
      viol95.push_back(as_number(r["slo"]["total_violation_p95_s"]));
      cost.push_back(as_number(r["cost"]["total_usd"]));
    }
    json row{{"mode", g.mode},          {"runs", g.runs.size()},
             {"peak_p50_ms", median(peak50)}, {"peak_p95_ms", median(peak95)},
             {"violation_p50_s", median(viol50)}, {"violation_p95_s", median(viol95)},
             {"cost_usd", median(cost)}};
    if (gi == 0) {
      ref_peak95 = median(peak95);
      ref_cost = median(cost);
    } else {
      if (ref_peak95 > 0.0 && std::isfinite(ref_peak95) && std::isfinite(median(peak95)))
        row["peak_p95_reduction_pct"] = 100.0 * (ref_peak95 - median(peak95)) / ref_peak95;
      if (ref_cost > 0.0) row["cost_vs_first"] = median(cost) / ref_cost;
    }
    table.push_back(std::move(row));
  }

  json out{{"scenario", scenario}, {"trace_fingerprint", fingerprint}, {"runs", table}};
  {
    std::ofstream f(out_file);
    if (!f) throw ValidationError("cannot write " + out_file);
    f << out.dump(2) << '\n';
  }

  fmt::print("{:<16} {:>5} {:>12} {:>12} {:>10} {:>10} {:>10}\n", "mode", "runs", "peak_p50",
             "peak_p95", "viol_p95", "cost", "vs_first");
  for (const json& row : table) {
    const std::string vs =
        row.contains("peak_p95_reduction_pct")
            ? fmt::format("-{:.1f}%", row["peak_p95_reduction_pct"].get<double>())
            : "";
    fmt::print("{:<16} {:>5} {:>12} {:>12} {:>10.1f} {:>10.4f} {:>10}\n",
               row["mode"].get<std::string>(), row["runs"].get<size_t>(),
               show_ms(row["peak_p50_ms"].get<double>()),
               show_ms(row["peak_p95_ms"].get<double>()),
               row["violation_p95_s"].get<double>(), row["cost_usd"].get<double>(), vs);
  }
  return 0;
}

int cmd_calibrate(const std::string& path, double target_p50, double target_p95,
                  std::string out_file) {
  ScenarioConfig cfg = load_scenario(path);
  if (out_file.empty())
    out_file = (fs::path(cfg.base_dir) / (cfg.name + ".calibrated.json")).string();

  // Two knobs, fitted in turn each round: service times move both percentiles
  // together, the advertised per-pod capacity sets how many pods the
  // autoscaler holds and with it the queueing tail above the median.
  double measured50 = 0.0;
  double measured95 = 0.0;
  bool converged = false;
  for (int round = 0; round < 8; ++round) {
    RunOutcome out = run_scenario(cfg, {});
    measured50 = out.p50_ms;
    measured95 = out.p95_ms;
    if (!std::isfinite(measured50) || !std::isfinite(measured95) || measured50 <= 0.0)
      throw ValidationError("calibrate: scenario is unstable at these targets, percentiles "
                            "are infinite; raise capacities or lower the load first");
    const double e50 = measured50 / target_p50;
    const double tail = measured95 / measured50;
    const double target_tail = target_p95 / target_p50;
    const double e_tail = tail / target_tail;
    fmt::print("round {}: p50={:.2f}ms p95={:.2f}ms (targets {:.0f}/{:.0f})\n", round + 1,
               measured50, measured95, target_p50, target_p95);
    if (std::abs(e50 - 1.0) <= 0.02 && std::abs(measured95 / target_p95 - 1.0) <= 0.05) {
      converged = true;
      break;
    }
    const double time_scale = std::clamp(1.0 / e50, 0.5, 2.0);
    const double cap_scale = std::clamp(e_tail, 0.7, 1.3);
    for (ServiceSpec& s : cfg.services) {
      s.service_time_ms *= time_scale;
      // Thinner tail wanted -> advertise less per pod so the scaler holds
      // more of them; fatter tail wanted -> the opposite.
      s.per_pod_capacity_rps *= cap_scale;
    }
  }

  {
    std::ofstream f(out_file);
    if (!f) throw ValidationError("cannot write " + out_file);
    f << cfg.to_json().dump(2) << '\n';
  }
  fmt::print("{} p50={:.2f}ms p95={:.2f}ms -> {}\n", converged ? "converged:" : "best effort:",
             measured50, measured95, out_file);
  if (!converged) {
    fmt::print(stderr, "calibrate: targets not reached within 8 rounds\n");
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flaresim: two-tier microservice chain simulator"};
  app.require_subcommand(1);

  std::string scenario_path, out_dir, mode_override;
  int64_t seed_override = -1;
  bool event_log = false, controller_log = false;
  int repeat = 1;
  auto* sim = app.add_subcommand("simulate", "run one scenario and write its reports");
  sim->add_option("scenario", scenario_path, "scenario file (.toml or .json)")->required();
  sim->add_option("--out", out_dir, "report directory (default: $FLARESIM_OUT_DIR or ./runs)");
  sim->add_option("--seed", seed_override, "override the scenario seed");
  sim->add_option("--mode", mode_override, "override the scenario mode");
  sim->add_flag("--event-log", event_log, "also write events.log");
  sim->add_flag("--controller-log", controller_log, "also write controller.csv");
  sim->add_option("--repeat", repeat, "run N seeds in parallel worker threads")
      ->check(CLI::Range(1, 64));

  std::vector<std::string> run_dirs;
  std::string compare_out;
  bool force = false;
  auto* cmp = app.add_subcommand("compare", "summarize finished runs side by side");
  cmp->add_option("dirs", run_dirs, "report directories")->required()->expected(-1);
  cmp->add_option("--out", compare_out, "comparison file to write")->required();
  cmp->add_flag("--force", force, "compare even when traces or seeds differ");

  std::string cal_path, cal_out;
  double target_p50 = 0.0, target_p95 = 0.0;
  auto* cal = app.add_subcommand("calibrate", "fit service constants to latency targets");
  cal->add_option("scenario", cal_path, "scenario file to fit")->required();
  cal->add_option("--target-p50", target_p50, "steady-state median target, ms")->required();
  cal->add_option("--target-p95", target_p95, "steady-state tail target, ms")->required();
  cal->add_option("--out", cal_out, "where to write the fitted scenario (default: alongside)");

  try {
    app.parse(argc, argv);
    if (sim->parsed())
      return cmd_simulate(scenario_path, out_dir, seed_override, mode_override, event_log,
                          controller_log, repeat);
    if (cmp->parsed()) return cmd_compare(run_dirs, compare_out, force);
    if (cal->parsed()) {
      if (target_p50 <= 0.0 || target_p95 < target_p50)
        throw ValidationError("calibrate: need 0 < --target-p50 <= --target-p95");
      return cmd_calibrate(cal_path, target_p50, target_p95, cal_out);
    }
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const ValidationError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  } catch (const SimulationError& e) {
    fmt::print(stderr, "invariant violated: {}\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  }
  return 0;
}
