#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "flaresim/metrics.hpp"
#include <stdexcept>

using namespace flaresim;

static constexpr double kInf = std::numeric_limits<double>::infinity();

// Expected ranks hand-derived: rank = ceil(p * n), 1-based.
TEST_CASE("nearest rank percentile") {
  std::vector<double> v{3.0, 5.0, 7.0, 9.0, 12.0, 16.0, 19.0, 28.0, 31.0, 44.0};
  CHECK(nearest_rank(v, 0.01) == 3.0);
  CHECK(nearest_rank(v, 0.10) == 3.0);
  CHECK(nearest_rank(v, 0.50) == 12.0);
  CHECK(nearest_rank(v, 0.90) == 31.0);
  CHECK(nearest_rank(v, 0.95) == 44.0);
  CHECK(nearest_rank(v, 1.00) == 44.0);
  CHECK(nearest_rank({8.5}, 0.5) == 8.5);
  CHECK_THROWS_AS(nearest_rank({}, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(nearest_rank(v, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(nearest_rank(v, 1.5), std::invalid_argument);
}

TEST_CASE("percentile p at an exact rank boundary stays stable") {
  // 20 values, p50 -> rank 10 exactly; the epsilon guard must not push it to 11.
  std::vector<double> v;
  for (int i = 1; i <= 20; ++i) v.push_back(i);
  CHECK(nearest_rank(v, 0.5) == 10.0);
  CHECK(nearest_rank(v, 0.95) == 19.0);
}

static LatencyRecord rec(double finalize_s, double e2e_ms, bool timed_out = false) {
  LatencyRecord r;
  r.finalize_s = finalize_s;
  r.e2e_ms = e2e_ms;
  r.timed_out = timed_out;
  return r;
}

TEST_CASE("series windows are (k*w, (k+1)*w] keyed by finalize time") {
  std::vector<LatencyRecord> rs{rec(0.5, 10), rec(1.0, 20), rec(1.0001, 30), rec(2.0, 40)};
  auto s = percentile_series(rs, 1.0, 1.0, 3.0);
  REQUIRE(s.size() == 3);
  CHECK(s[0].window_end_s == 1.0);
  CHECK(s[0].count == 2);   // 0.5 and the boundary point 1.0
  CHECK(s[0].value_ms == 20.0);
  CHECK(s[1].count == 2);
  CHECK(s[1].value_ms == 40.0);
  CHECK(s[2].count == 0);
}

TEST_CASE("drain tail folds into the last window, empty series spans the run") {
  std::vector<LatencyRecord> rs{rec(7.5, 10)};
  auto s = percentile_series(rs, 0.95, 1.0, 3.0);
  REQUIRE(s.size() == 3);
  CHECK(s[2].count == 1);

  auto empty = percentile_series({}, 0.95, 1.0, 2.5);
  REQUIRE(empty.size() == 3);
  CHECK(empty[0].count == 0);
}

TEST_CASE("timeouts drag the tail to infinity") {
  std::vector<LatencyRecord> rs;
  for (int i = 0; i < 19; ++i) rs.push_back(rec(0.5, 10));
  rs.push_back(rec(0.5, kInf, true));
  auto s = percentile_series(rs, 0.95, 1.0, 1.0);
  CHECK(s[0].value_ms == 10.0);  // rank 19 of 20
  auto s99 = percentile_series(rs, 0.99, 1.0, 1.0);
  CHECK(std::isinf(s99[0].value_ms));
}

TEST_CASE("slo stats merge adjacent violating windows and track the peak") {
  std::vector<SeriesPoint> series{
      {1.0, 100.0, 5}, {2.0, 450.0, 5}, {3.0, 500.0, 5},
      {4.0, 100.0, 5}, {5.0, 0.0, 0},   {6.0, 401.0, 5},
  };
  SloStats st = slo_stats(series, 400.0, 1.0);
  REQUIRE(st.intervals.size() == 2);
  CHECK(st.intervals[0].start_s == 1.0);
  CHECK(st.intervals[0].end_s == 3.0);
  CHECK(st.intervals[1].start_s == 5.0);
  CHECK(st.intervals[1].end_s == 6.0);
  CHECK(st.total_violation_s == doctest::Approx(3.0));
  CHECK(st.peak_ms == 500.0);
}

TEST_CASE("empty windows neither violate nor count toward the peak") {
  std::vector<SeriesPoint> series{{1.0, 0.0, 0}, {2.0, 0.0, 0}};
  SloStats st = slo_stats(series, 400.0, 1.0);
  CHECK(st.intervals.empty());
  CHECK(st.total_violation_s == 0.0);
  CHECK(st.peak_ms == 0.0);
}
