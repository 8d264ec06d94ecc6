#include "doctest.h"
#include "flaresim/engine.hpp"
#include "flaresim/errors.hpp"
#include "flaresim/faastier.hpp"

using namespace flaresim;

namespace {

ServiceGraph one_service() {
  return ServiceGraph({{"fn", 10.0, 100.0, 1.0, 1, {}}}, {{"fn", 1.0}});
}

FaasConfig faas_cfg() {
  FaasConfig f;
  f.cold_start_ms = 180.0;
  f.warm_start_ms = 1.0;
  f.keep_alive_s = 600.0;
  f.per_instance_concurrency = 1;
  f.max_instances = 10000;
  f.memory_gb = 0.5;
  f.price_per_invocation = 2.0e-7;
  f.price_per_gb_s = 1.6667e-5;
  f.billing_granularity_ms = 1.0;
  return f;
}

}  // namespace

TEST_CASE("first invocation is cold, the next reuses the warm instance") {
  EventQueue eq;
  ServiceGraph g = one_service();
  FaasTier faas(g, faas_cfg(), eq);

  Invocation a = faas.invoke(0, 1, 0.0);
  CHECK(a.instance == 0);
  CHECK(a.cold);
  CHECK(a.start_delay_s == doctest::Approx(0.180));
  CHECK(faas.usage(0).cold_starts == 1);

  faas.mark_warm(0, a.instance);
  faas.release(0, a.instance, 0.5);

  Invocation b = faas.invoke(0, 2, 1.0);
  CHECK(b.instance == 0);
  CHECK_FALSE(b.cold);
  CHECK(b.start_delay_s == doctest::Approx(0.001));
  CHECK(faas.usage(0).cold_starts == 1);
}

TEST_CASE("a warming instance is not joinable, so bursts fan out") {
  EventQueue eq;
  ServiceGraph g = one_service();
  FaasTier faas(g, faas_cfg(), eq);

  Invocation a = faas.invoke(0, 1, 0.0);
  Invocation b = faas.invoke(0, 2, 0.0);
  CHECK(a.instance != b.instance);
  CHECK(b.cold);
  CHECK(faas.usage(0).peak_instances == 2);
}

TEST_CASE("prewarmed pools only ever start warm") {
  EventQueue eq;
  ServiceGraph g = one_service();
  FaasConfig cfg = faas_cfg();
  cfg.prewarmed = true;
  FaasTier faas(g, cfg, eq);

  for (uint64_t i = 0; i < 5; ++i) {
    Invocation inv = faas.invoke(0, i, 0.0);
    CHECK_FALSE(inv.cold);
    CHECK(inv.start_delay_s == doctest::Approx(0.001));
  }
  CHECK(faas.usage(0).cold_starts == 0);
  CHECK(faas.live_instances(0) == 5);
}

TEST_CASE("idle instances are reaped after the keep-alive, unless reused") {
  EventQueue eq;
  ServiceGraph g = one_service();
  FaasConfig cfg = faas_cfg();
  cfg.keep_alive_s = 100.0;
  FaasTier faas(g, cfg, eq);

  Invocation a = faas.invoke(0, 1, 0.0);
  faas.mark_warm(0, a.instance);
  faas.release(0, a.instance, 10.0);

  // Reuse at 50 cancels the reap scheduled for 110.
  Invocation b = faas.invoke(0, 2, 50.0);
  CHECK(b.instance == a.instance);
  faas.release(0, b.instance, 60.0);

  eq.run_until(115.0);  // the stale timer pops and must do nothing
  CHECK(faas.live_instances(0) == 1);
  eq.run_until(161.0);  // the live timer from t=60 fires at 160
  CHECK(faas.live_instances(0) == 0);

  // The next call after the reap is cold again.
  Invocation c = faas.invoke(0, 3, 200.0);
  CHECK(c.cold);
  CHECK(faas.usage(0).cold_starts == 2);
}

TEST_CASE("the longest-idle warm instance is reused first") {
  EventQueue eq;
  ServiceGraph g = one_service();
  FaasTier faas(g, faas_cfg(), eq);

  Invocation a = faas.invoke(0, 1, 0.0);
  Invocation b = faas.invoke(0, 2, 0.0);
  faas.mark_warm(0, a.instance);
  faas.mark_warm(0, b.instance);
  faas.release(0, b.instance, 5.0);   // idle since 5
  faas.release(0, a.instance, 20.0);  // idle since 20

  Invocation c = faas.invoke(0, 3, 30.0);
  CHECK(c.instance == b.instance);
}

TEST_CASE("instance cap queues the overflow") {
  EventQueue eq;
  ServiceGraph g = one_service();
  FaasConfig cfg = faas_cfg();
  cfg.max_instances = 1;
  FaasTier faas(g, cfg, eq);

  Invocation a = faas.invoke(0, 1, 0.0);
  CHECK(a.instance == 0);
  Invocation b = faas.invoke(0, 2, 0.0);
  CHECK(b.instance == -1);

  faas.mark_warm(0, 0);
  faas.release(0, 0, 1.0);
  auto queued = faas.pop_queued(0);
  REQUIRE(queued.has_value());
  CHECK(*queued == 2);
  faas.occupy(0, 0);
  CHECK(faas.instance(0, 0).active == 1);
  CHECK_FALSE(faas.pop_queued(0).has_value());
}

TEST_CASE("per-instance concurrency lets invocations share") {
  EventQueue eq;
  ServiceGraph g = one_service();
  FaasConfig cfg = faas_cfg();
  cfg.per_instance_concurrency = 2;
  cfg.prewarmed = true;
  FaasTier faas(g, cfg, eq);

  Invocation a = faas.invoke(0, 1, 0.0);
  Invocation b = faas.invoke(0, 2, 0.0);
  CHECK(a.instance == b.instance);
  Invocation c = faas.invoke(0, 3, 0.0);
  CHECK(c.instance != a.instance);
}

// Hand-derived: 10.3 ms busy time rounds up to 11 ms, times 0.5 GB.
TEST_CASE("billing rounds busy time up to the granularity") {
  EventQueue eq;
  ServiceGraph g = one_service();
  FaasTier faas(g, faas_cfg(), eq);

  faas.bill(0, 0.0103, 0.180);
  CHECK(faas.usage(0).billed_gb_seconds == doctest::Approx(0.011 * 0.5));
  CHECK(faas.usage(0).invocations == 1);

  // An exact multiple of the granularity is not rounded further.
  faas.bill(0, 0.010, 0.0);
  CHECK(faas.usage(0).billed_gb_seconds == doctest::Approx((0.011 + 0.010) * 0.5));

  double expect = (0.011 + 0.010) * 0.5 * 1.6667e-5 + 2 * 2.0e-7;
  CHECK(faas.cost() == doctest::Approx(expect));
}

TEST_CASE("cold start time is billable only when configured") {
  EventQueue eq;
  ServiceGraph g = one_service();
  FaasConfig cfg = faas_cfg();
  cfg.bill_cold_start = true;
  FaasTier faas(g, cfg, eq);

  faas.bill(0, 0.010, 0.180);
  CHECK(faas.usage(0).billed_gb_seconds == doctest::Approx(0.190 * 0.5));
}

TEST_CASE("releasing an idle instance is a simulation bug") {
  EventQueue eq;
  ServiceGraph g = one_service();
  FaasTier faas(g, faas_cfg(), eq);
  Invocation a = faas.invoke(0, 1, 0.0);
  faas.release(0, a.instance, 1.0);
  CHECK_THROWS_AS(faas.release(0, a.instance, 2.0), SimulationError);
}
