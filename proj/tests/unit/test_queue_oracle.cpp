#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "flaresim/scenario.hpp"
#include "flaresim/simulation.hpp"

using namespace flaresim;
using nlohmann::json;

namespace {

json single_queue(double rate_rps, double duration_s) {
  return json{
      {"mode", "baseline"},
      {"seed", 7},
      {"duration_s", duration_s},
      {"request_timeout_s", 3600.0},
      {"service", json::array({{{"name", "queue"},
                                {"service_time_ms", 10.0},
                                {"per_pod_capacity_rps", 200.0},
                                {"concurrency_per_pod", 1},
                                {"initial_replicas", 1}}})},
      {"entrypoint", json::array({{{"service", "queue"}, {"weight", 1.0}}})},
      {"trace", json::array({{{"kind", "constant"}, {"rate_rps", rate_rps}}})},
      {"hpa", {{"min_replicas", 1}, {"max_replicas", 1}}},
      {"cluster", {{"initial_nodes", 1}}},
      {"faas", {{"enabled", false}}},
  };
}

struct SortedRun {
  std::vector<double> arrive;
  std::vector<double> depart;
};

SortedRun sorted_times(const RunOutcome& out) {
  std::vector<const LatencyRecord*> by_arrival;
  for (const auto& r : out.records) by_arrival.push_back(&r);
  std::sort(by_arrival.begin(), by_arrival.end(),
            [](const LatencyRecord* a, const LatencyRecord* b) { return a->arrival_s < b->arrival_s; });
  SortedRun s;
  for (const auto* r : by_arrival) {
    s.arrive.push_back(r->arrival_s);
    s.depart.push_back(r->arrival_s + r->e2e_ms / 1000.0);
  }
  return s;
}

}  // namespace

// Independent check of the whole service path: for a single FCFS server the
// departures must satisfy the Lindley recursion D_n = max(A_n, D_{n-1}) + S_n
// for SOME non-negative service times with the configured distribution. The
// implied S_n are recovered from the run and tested against Exp(mean 10 ms).
TEST_CASE("single busy server is exactly an M/M/1 queue") {
  RunOutcome out = run_scenario(scenario_from_json(single_queue(50.0, 600.0), ".", "mm1"));
  REQUIRE(out.timeouts == 0);
  REQUIRE(out.arrivals > 25000);

  SortedRun s = sorted_times(out);
  double prev_depart = 0.0;
  double sum = 0.0, sq = 0.0, sojourn = 0.0;
  size_t n = s.arrive.size();
  for (size_t i = 0; i < n; ++i) {
    CHECK(s.depart[i] >= prev_depart - 1e-9);  // FIFO order
    double implied = s.depart[i] - std::max(s.arrive[i], prev_depart);
    REQUIRE(implied >= -1e-9);
    sum += implied;
    sq += implied * implied;
    sojourn += s.depart[i] - s.arrive[i];
    prev_depart = s.depart[i];
  }
  double mean_s = sum / n;
  double cv = std::sqrt(std::max(0.0, sq / n - mean_s * mean_s)) / mean_s;
  CHECK(mean_s == doctest::Approx(0.010).epsilon(0.02));
  CHECK(cv == doctest::Approx(1.0).epsilon(0.05));

  // Analytic sojourn of M/M/1 at rho = 0.5: 1/(mu - lambda) = 20 ms.
  CHECK(sojourn / n * 1000.0 == doctest::Approx(20.0).epsilon(0.10));
}

TEST_CASE("an overloaded queue diverges instead of secretly shedding work") {
  // rho = 2: the backlog must grow linearly for the whole run.
  RunOutcome out = run_scenario(scenario_from_json(single_queue(200.0, 200.0), ".", "rho2"));
  REQUIRE(out.timeouts == 0);
  CHECK(out.arrivals == out.completions);

  SortedRun s = sorted_times(out);
  double early = 0.0, mid = 0.0, late = 0.0;
  size_t ne = 0, nm = 0, nl = 0;
  for (size_t i = 0; i < s.arrive.size(); ++i) {
    double w = s.depart[i] - s.arrive[i];
    if (s.arrive[i] < 66.0) { early += w; ++ne; }
    else if (s.arrive[i] < 133.0) { mid += w; ++nm; }
    else { late += w; ++nl; }
  }
  early /= ne; mid /= nm; late /= nl;
  CHECK(mid > 1.5 * early);
  CHECK(late > 1.5 * mid);
  CHECK(late > 50.0);  // seconds of queueing, far beyond any service time
}
