#include <cmath>
#include <limits>

#include "doctest.h"
#include "flaresim/errors.hpp"
#include "flaresim/trace.hpp"
#include <stdexcept>

using namespace flaresim;

static const SpikeSpec kSpike{100.0, 325.0, 60.0, 10.0, 30.0, 20.0};

// Trapezoid values hand-derived from the piecewise definition.
TEST_CASE("spike profile hits every segment") {
  CHECK(spike_rate_at(kSpike, 0.0) == 100.0);
  CHECK(spike_rate_at(kSpike, 59.999) == 100.0);
  CHECK(spike_rate_at(kSpike, 62.5) == doctest::Approx(156.25));
  CHECK(spike_rate_at(kSpike, 70.0) == doctest::Approx(325.0));
  CHECK(spike_rate_at(kSpike, 85.0) == 325.0);
  CHECK(spike_rate_at(kSpike, 100.0) == doctest::Approx(325.0));
  CHECK(spike_rate_at(kSpike, 105.0) == doctest::Approx(268.75));
  CHECK(spike_rate_at(kSpike, 120.0) == doctest::Approx(100.0));
  CHECK(spike_rate_at(kSpike, 500.0) == 100.0);
}

TEST_CASE("synthesized spike samples the profile on the grid") {
  LoadTrace t = synthesize_spike(kSpike, 200.0, 1.0);
  CHECK(t.start_s() == 0.0);
  CHECK(t.end_s() == 200.0);
  CHECK(t.resolution_s() == 1.0);
  CHECK(t.rate_at(62.5) == doctest::Approx(156.25));
  CHECK(t.max_rate() == doctest::Approx(325.0));
}

TEST_CASE("trace construction rejects bad grids") {
  CHECK_THROWS_AS(LoadTrace({0.0, 1.0, 1.0}, {1, 1, 1}), ValidationError);
  CHECK_THROWS_AS(LoadTrace({0.0, 1.0, 3.0}, {1, 1, 1}), ValidationError);
  CHECK_THROWS_AS(LoadTrace({0.0, 1.0}, {1.0, -2.0}), ValidationError);
  CHECK_THROWS_AS(LoadTrace({0.0, 1.0}, {1.0, std::numeric_limits<double>::infinity()}),
                  ValidationError);
  CHECK_THROWS_AS(LoadTrace({0.0}, {1.0, 2.0}), ValidationError);
}

TEST_CASE("csv parsing skips a header, accepts CRLF, names bad lines") {
  LoadTrace t = parse_trace_text("ts,rps\r\n0,60\r\n1,120\r\n\r\n2,180\r\n", RateUnit::PerMinute);
  REQUIRE(t.size() == 3);
  // per-minute rates are stored as per-second
  CHECK(t.rates()[0] == doctest::Approx(1.0));
  CHECK(t.rates()[2] == doctest::Approx(3.0));

  try {
    parse_trace_text("0,60\n1,banana\n", RateUnit::PerSecond);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("scaling multiplies rates and changes the fingerprint") {
  LoadTrace t({0.0, 1.0, 2.0}, {10.0, 20.0, 30.0});
  LoadTrace s = scale_trace(t, 1.5);
  CHECK(s.rates()[1] == doctest::Approx(30.0));
  CHECK(t.fingerprint() != s.fingerprint());
  CHECK(t.fingerprint() == LoadTrace({0.0, 1.0, 2.0}, {10.0, 20.0, 30.0}).fingerprint());
  CHECK_THROWS_AS(scale_trace(t, 0.0), std::invalid_argument);
}

TEST_CASE("window extraction re-bases grid-aligned slices exactly") {
  LoadTrace t({0.0, 1.0, 2.0, 3.0, 4.0}, {10, 20, 30, 40, 50});
  LoadTrace w = extract_window(t, 1.0, 2.0);
  REQUIRE(w.size() == 3);
  CHECK(w.start_s() == 0.0);
  CHECK(w.end_s() == 2.0);
  CHECK(w.rates()[0] == 20.0);
  CHECK(w.rates()[2] == 40.0);
}

TEST_CASE("interpolation is linear and bounded to the span") {
  LoadTrace t({0.0, 1.0}, {100.0, 200.0});
  CHECK(t.rate_at(0.25) == doctest::Approx(125.0));
  CHECK_THROWS_AS(t.rate_at(-0.1), std::invalid_argument);
  CHECK_THROWS_AS(t.rate_at(1.1), std::invalid_argument);
}

TEST_CASE("deterministic arrivals are spaced 1/rate apart") {
  LoadTrace t({0.0, 100.0}, {10.0, 10.0});
  ArrivalProcess ap(t, true);
  RngStream rng(1, "unused");
  double a = ap.next_after(0.0, rng);
  CHECK(a == doctest::Approx(0.1));
  CHECK(ap.next_after(a, rng) == doctest::Approx(0.2));
  CHECK(std::isinf(ap.next_after(99.95, rng)));
}

TEST_CASE("poisson arrivals hit the trace rate on average") {
  LoadTrace t({0.0, 1000.0}, {50.0, 50.0});
  ArrivalProcess ap(t, false);
  RngStream rng(42, "arr");
  uint64_t n = 0;
  for (double at = ap.next_after(0.0, rng); std::isfinite(at); at = ap.next_after(at, rng)) ++n;
  // 50 rps over 1000 s; 3 sigma of a Poisson(50000) is ~671.
  CHECK(n > 49000);
  CHECK(n < 51000);
}

TEST_CASE("all-zero traces cannot drive random arrivals") {
  LoadTrace z({0.0, 10.0}, {0.0, 0.0});
  CHECK_THROWS_AS(ArrivalProcess(z, false), ValidationError);
  ArrivalProcess ok(z, true);
  RngStream rng(1, "x");
  CHECK(std::isinf(ok.next_after(0.0, rng)));
}
