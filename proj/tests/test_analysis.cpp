#include <doctest.h>

#include "mtsb/analysis.hpp"
#include "mtsb/singular.hpp"

#include <cmath>
#include <stdexcept>

using namespace mtsb;

TEST_CASE("return map at G = 8 converges to a stable fixed point") {
  CellParams p;
  p.G = 8.0;
  const PoincareRecord rec = poincare_map(p);
  CHECK(!rec.insufficient);
  CHECK(rec.crossings.size() == 10);
  CHECK(rec.fixed_point[0] == doctest::Approx(0.068930003).epsilon(1e-6));
  CHECK(rec.fixed_point[1] == doctest::Approx(0.466140970).epsilon(1e-6));
  CHECK(rec.max_dist < 1e-6);
  CHECK(rec.contracting);
  CHECK(rec.stable);
  CHECK(period(rec) == doctest::Approx(7.7794).epsilon(1e-3));
  CHECK(rec.period_minutes == period(rec));
  // Section points actually lie on the section and after the transient.
  for (const auto& ev : rec.crossings) {
    CHECK(std::abs(ev.state[0] - rec.section_v) < 1e-6);
    CHECK(ev.t >= kTransientMs);
    CHECK(ev.direction == +1);
  }
  // The recorded (x, y) pairs mirror the crossing states.
  REQUIRE(rec.points.size() == rec.crossings.size());
  CHECK(rec.points.back()[0] ==
        doctest::Approx(rec.crossings.back().state[2]).epsilon(1e-12));
}

TEST_CASE("return map at G = 7: slower rhythm, same stability") {
  CellParams p;
  p.G = 7.0;
  const PoincareRecord rec = poincare_map(p);
  CHECK(rec.crossings.size() == 8);
  CHECK(rec.fixed_point[0] == doctest::Approx(0.067398291).epsilon(1e-6));
  CHECK(rec.fixed_point[1] == doctest::Approx(0.466380335).epsilon(1e-6));
  CHECK(rec.stable);
  CHECK(period(rec) == doctest::Approx(9.7455).epsilon(1e-3));
}

TEST_CASE("short windows are flagged, not fatal") {
  CellParams p;
  p.G = 8.0;
  const PoincareRecord rec = poincare_map(p, -59.0, 10.0 * 60000.0);
  CHECK(rec.insufficient);
  CHECK(rec.crossings.size() < 7);
  CHECK_THROWS_AS(period(PoincareRecord{}), std::invalid_argument);
}

TEST_CASE("fixed-point estimator variants agree on a converged orbit") {
  CellParams p;
  p.G = 8.0;
  const PoincareRecord mean = poincare_map(p);
  const PoincareRecord last = poincare_map(
      p, -59.0, 80.0 * 60000.0, nullptr, nullptr,
      FixedPointEstimator::last);
  CHECK(mean.fixed_point[0] ==
        doctest::Approx(last.fixed_point[0]).epsilon(1e-7));
  CHECK(mean.fixed_point[1] ==
        doctest::Approx(last.fixed_point[1]).epsilon(1e-7));
}

TEST_CASE("scaled distance to the stationary point") {
  CellParams p;
  p.G = 8.0;
  const PspPoint psp = find_psp(p);
  LingerScales sc;
  CHECK(psp_distance(psp.location, psp.location, sc) == 0.0);
  CellState s = psp.location;
  s.v += sc.sigma_v; // exactly one scale unit along v
  CHECK(psp_distance(s, psp.location, sc) == doctest::Approx(1.0));
  s.x += 2.0 * sc.sigma_x; // max-norm: the larger component wins
  CHECK(psp_distance(s, psp.location, sc) == doctest::Approx(2.0));
  // The recovery gate is excluded from the distance.
  s = psp.location;
  s.u += 100.0;
  CHECK(psp_distance(s, psp.location, sc) == 0.0);
}

TEST_CASE("time spent near the stationary point grows with the radius") {
  CellParams p;
  // The orbit's closest scaled approach at G=8 sits between 0.6 and 0.8,
  // so 0.8 is the smallest radius the trajectory actually visits.
  const double t_small = linger_time_for_G(p, 0.8, -59.0, 50.0 * 60000.0);
  const double t_mid = linger_time_for_G(p, 1.0, -59.0, 50.0 * 60000.0);
  const double t_large = linger_time_for_G(p, 1.5, -59.0, 50.0 * 60000.0);
  CHECK(t_small > 0.0);
  CHECK(t_small < t_mid);
  CHECK(t_mid < t_large);
  CHECK_THROWS_AS(linger_time_for_G(p, 0.1, -59.0, 50.0 * 60000.0),
                  std::runtime_error);
}

TEST_CASE("coupling heuristic is exactly inverse-proportional") {
  for (double t : {1000.0, 5038.3, 35000.0, 123456.0}) {
    const double k = coupling_from_linger(t);
    CHECK(k * t == doctest::Approx(0.005 * 35000.0).epsilon(1e-15));
  }
  CHECK(coupling_from_linger(35000.0) == 0.005);
  CHECK(coupling_from_linger(17500.0, 0.01, 35000.0) == 0.02);
  CHECK_THROWS_AS(coupling_from_linger(0.0), std::invalid_argument);
  CHECK_THROWS_AS(coupling_from_linger(-1.0), std::invalid_argument);
}
