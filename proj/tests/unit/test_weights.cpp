#include <vector>

#include "doctest.h"
#include "flaresim/controller.hpp"
#include <stdexcept>

using namespace flaresim;

// Hand-derived: estimate = rps + max(rps - prev, 0), w_vm = cap / estimate.
TEST_CASE("traffic split formula, exact cases") {
  RoutingWeights w = compute_weights(300, 400, 200);  // estimate 600
  CHECK(w.vm == 0.5);
  CHECK(w.serverless == 0.5);

  w = compute_weights(300, 200, 250);  // falling rate, estimate 200 < capacity
  CHECK(w.vm == 1.0);
  CHECK(w.serverless == 0.0);

  for (double cap : {0.0, 1.0, 444.4}) {
    w = compute_weights(cap, 0, 0);
    CHECK(w.vm == 1.0);
    CHECK(w.serverless == 0.0);
  }
}

TEST_CASE("traffic split clamps and rejects bad input") {
  CHECK(compute_weights(0, 100, 100).vm == 0.0);
  CHECK(compute_weights(1000, 100, 50).vm == 1.0);
  // weights always sum to 1
  RoutingWeights w = compute_weights(120, 400, 350);
  CHECK(w.vm + w.serverless == doctest::Approx(1.0));
  CHECK(w.vm == doctest::Approx(120.0 / 450.0));

  CHECK_THROWS_AS(compute_weights(-1, 0, 0), std::invalid_argument);
  CHECK_THROWS_AS(compute_weights(1, -2, 0), std::invalid_argument);
  CHECK_THROWS_AS(compute_weights(1, 0, -3), std::invalid_argument);
}

TEST_CASE("synthesized autoscaler metric") {
  CHECK(synthesize_autoscaler_metric(100, 2, 25) == doctest::Approx(2.0));
  CHECK(synthesize_autoscaler_metric(50, 4, 25) == doctest::Approx(0.5));
  CHECK(synthesize_autoscaler_metric(0, 4, 25) == 0.0);
  CHECK(synthesize_autoscaler_metric(0, 0, 25) == 0.0);
  // No ready pods with traffic pending: pinned recovery signal.
  CHECK(synthesize_autoscaler_metric(1.0, 0, 25) == 10.0);
  CHECK_THROWS_AS(synthesize_autoscaler_metric(-1, 1, 25), std::invalid_argument);
  CHECK_THROWS_AS(synthesize_autoscaler_metric(1, -1, 25), std::invalid_argument);
  CHECK_THROWS_AS(synthesize_autoscaler_metric(1, 1, 0), std::invalid_argument);
}

TEST_CASE("first controller tick has no slope, so standing load never shifts") {
  Controller c({1.0, 0.0}, 1);
  // 500 requests in the first second against capacity 600: without history
  // suppression the estimate would be 500 + 500 = 1000 and shift 40%.
  auto snaps = c.tick(1.0, {500}, {6}, {100.0}, true);
  REQUIRE(snaps.size() == 1);
  CHECK(snaps[0].rps_prev == snaps[0].rps_t);
  CHECK(snaps[0].weights.vm == 1.0);

  // Second tick at the same rate: still no slope, still unshifted.
  snaps = c.tick(2.0, {1000}, {6}, {100.0}, true);
  CHECK(snaps[0].weights.vm == 1.0);

  // A real surge shifts: rate 900, slope 400, estimate 1300 > 600.
  snaps = c.tick(3.0, {1900}, {6}, {100.0}, true);
  CHECK(snaps[0].weights.vm == doctest::Approx(600.0 / 1300.0));
  CHECK(snaps[0].synth_cpu == doctest::Approx(900.0 / 600.0));
}

TEST_CASE("rate derives from cumulative counts over the tick interval") {
  Controller c({5.0, 0.0}, 2);
  auto snaps = c.tick(5.0, {100, 0}, {1, 1}, {100.0, 100.0}, true);
  CHECK(snaps[0].rps_t == doctest::Approx(20.0));
  CHECK(snaps[1].rps_t == 0.0);
  CHECK(snaps[1].weights.vm == 1.0);  // zero estimate keeps everything on pods
  snaps = c.tick(10.0, {400, 0}, {1, 1}, {100.0, 100.0}, true);
  CHECK(snaps[0].rps_t == doctest::Approx(60.0));
  CHECK(snaps[0].rps_prev == doctest::Approx(20.0));
}

TEST_CASE("ewma smoothing follows the configured alpha") {
  Controller c({1.0, 0.5}, 1);
  c.tick(1.0, {100}, {4}, {100.0}, true);          // seeds ewma at 100
  auto snaps = c.tick(2.0, {300}, {4}, {100.0}, true);  // raw 200
  CHECK(snaps[0].rps_t == doctest::Approx(150.0)); // 0.5*200 + 0.5*100
}

TEST_CASE("an observing controller measures but never moves the weights") {
  Controller c({1.0, 0.0}, 1);
  c.tick(1.0, {500}, {1}, {10.0}, false);
  auto snaps = c.tick(2.0, {2000}, {1}, {10.0}, false);  // far beyond capacity
  CHECK(snaps[0].rps_t == doctest::Approx(1500.0));
  CHECK(c.weights(0).vm == 1.0);
  CHECK(c.weights(0).serverless == 0.0);
  CHECK(c.synth_cpu(0) == 0.0);
}

TEST_CASE("last_rps exposes the freshest measurement between ticks") {
  Controller c({1.0, 0.0}, 1);
  c.tick(1.0, {100}, {1}, {1000.0}, true);
  CHECK(c.last_rps(0) == doctest::Approx(100.0));
  c.tick(2.0, {350}, {1}, {1000.0}, true);
  CHECK(c.last_rps(0) == doctest::Approx(250.0));
}
