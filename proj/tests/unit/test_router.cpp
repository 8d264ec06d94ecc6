#include <cmath>

#include "doctest.h"
#include "flaresim/router.hpp"

using namespace flaresim;

TEST_CASE("weighted split matches the configured fraction") {
  Router r(1);
  r.set_weights(0, {0.7, 0.3});
  RngStream rng(42, "routing");
  const int n = 10000;
  for (int i = 0; i < n; ++i) r.route(0, false, rng);
  double frac = static_cast<double>(r.serverless_counts()[0]) / n;
  CHECK(std::abs(frac - 0.3) < 0.02);
  CHECK(r.total_counts()[0] == n);
  CHECK(r.vm_counts()[0] + r.serverless_counts()[0] == n);
}

TEST_CASE("sticky requests stay serverless whatever the weights say") {
  Router r(1);
  r.set_weights(0, {1.0, 0.0});
  RngStream rng(1, "routing");
  for (int i = 0; i < 100; ++i) CHECK(r.route(0, true, rng) == Tier::Serverless);
  CHECK(r.serverless_counts()[0] == 100);
}

TEST_CASE("every non-sticky decision costs one draw, even at weight 1.0") {
  // Two identical streams: one drives the router, the other skips the same
  // number of uniforms. Equal positions afterwards prove the parity that
  // keeps shifted and unshifted runs draw-for-draw aligned.
  Router r(1);
  r.set_weights(0, {1.0, 0.0});
  RngStream a(9, "routing"), b(9, "routing");
  for (int i = 0; i < 500; ++i) CHECK(r.route(0, false, a) == Tier::VM);
  for (int i = 0; i < 500; ++i) b.uniform();
  for (int i = 0; i < 8; ++i) CHECK(a.raw() == b.raw());

  // Sticky hops bypass the stream entirely.
  RngStream c(9, "routing"), d(9, "routing");
  for (int i = 0; i < 500; ++i) r.route(0, true, c);
  for (int i = 0; i < 8; ++i) CHECK(c.raw() == d.raw());
}
