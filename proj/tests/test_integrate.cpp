#include <doctest.h>

#include "mtsb/integrate.hpp"
#include "mtsb/model.hpp"

#include <cmath>
#include <vector>

using namespace mtsb;

namespace {

const Rhs kHarmonic = [](double, const double* y, double* dy) {
  dy[0] = y[1];
  dy[1] = -y[0];
};

// Forces a (nearly) uniform step size h: tolerances so loose that every step
// is accepted, with the ceiling doing the step-size control.
IntegratorConfig fixed_step(double h) {
  IntegratorConfig cfg;
  cfg.rtol = 10.0;
  cfg.atol = 10.0;
  cfg.h_init = h;
  cfg.h_max = h;
  return cfg;
}

double endpoint_error(double h) {
  const double t1 = 10.0;
  const Trajectory tr =
      integrate(kHarmonic, {1.0, 0.0}, 0.0, t1, fixed_step(h));
  const double* last = tr.state(tr.size() - 1);
  return std::abs(last[0] - std::cos(t1));
}

} // namespace

TEST_CASE("empirical convergence order is at least four") {
  // Halving the step should shrink the global error by about 2^5 for a
  // fifth-order method; require at least the fourth-order factor.
  const double e1 = endpoint_error(0.1);
  const double e2 = endpoint_error(0.05);
  const double e3 = endpoint_error(0.025);
  CHECK(e1 / e2 > 16.0);
  CHECK(e2 / e3 > 16.0);
}

TEST_CASE("adaptive error control tracks the requested tolerance") {
  IntegratorConfig loose;
  loose.rtol = 1e-6;
  loose.atol = 1e-8;
  loose.h_max = 10.0;
  IntegratorConfig tight;
  tight.rtol = 1e-12;
  tight.atol = 1e-14;
  tight.h_max = 10.0;
  const double t1 = 20.0;
  const Trajectory a = integrate(kHarmonic, {1.0, 0.0}, 0.0, t1, loose);
  const Trajectory b = integrate(kHarmonic, {1.0, 0.0}, 0.0, t1, tight);
  const double ea = std::abs(a.state(a.size() - 1)[0] - std::cos(t1));
  const double eb = std::abs(b.state(b.size() - 1)[0] - std::cos(t1));
  CHECK(ea < 1e-4);
  CHECK(eb < 1e-9);
  CHECK(eb < ea);
  CHECK(b.size() > a.size());
}

TEST_CASE("dense output interpolates between nodes") {
  IntegratorConfig cfg;
  cfg.rtol = 1e-10;
  cfg.atol = 1e-12;
  cfg.h_max = 0.5;
  const Trajectory tr = integrate(kHarmonic, {1.0, 0.0}, 0.0, 10.0, cfg);
  for (double t = 0.05; t < 10.0; t += 0.173)
    CHECK(tr.eval(t, 0) == doctest::Approx(std::cos(t)).epsilon(1e-6));
  double out[2];
  tr.eval_state(3.7, out);
  CHECK(out[0] == doctest::Approx(std::cos(3.7)).epsilon(1e-6));
  CHECK(out[1] == doctest::Approx(-std::sin(3.7)).epsilon(1e-6));
}

TEST_CASE("sampled integration records the requested spacing") {
  IntegratorConfig cfg;
  cfg.h_max = 0.05;
  const Trajectory tr =
      integrate_sampled(kHarmonic, {1.0, 0.0}, 0.0, 5.0, cfg, 0.5);
  REQUIRE(tr.size() >= 11);
  CHECK(tr.times.front() == 0.0);
  CHECK(tr.times.back() == 5.0);
  // Every gap respects the spacing except the last: the final state is
  // always recorded even if it lands within record_dt of the previous
  // sample.
  for (std::size_t i = 1; i + 1 < tr.size(); ++i)
    CHECK(tr.times[i] - tr.times[i - 1] >= 0.5 - 1e-9);
  CHECK(tr.times[tr.size() - 1] > tr.times[tr.size() - 2]);
  // record_dt <= 0 stores every accepted step, which at this ceiling is
  // strictly denser.
  const Trajectory all =
      integrate_sampled(kHarmonic, {1.0, 0.0}, 0.0, 5.0, cfg, 0.0);
  CHECK(all.size() > tr.size());
}

TEST_CASE("crossing detection refines and classifies event times") {
  IntegratorConfig cfg;
  cfg.rtol = 1e-10;
  cfg.atol = 1e-12;
  cfg.h_max = 0.25;
  const Trajectory tr = integrate(kHarmonic, {1.0, 0.0}, 0.0, 10.0, cfg);
  const auto down = detect_crossings(tr, 0, 0.0, -1, 1e-9);
  const auto up = detect_crossings(tr, 0, 0.0, +1, 1e-9);
  const auto both = detect_crossings(tr, 0, 0.0, 0, 1e-9);
  const double pi = std::acos(-1.0);
  REQUIRE(down.size() == 2);
  REQUIRE(up.size() == 1);
  CHECK(both.size() == 3);
  CHECK(down[0].t == doctest::Approx(pi / 2).epsilon(1e-7));
  CHECK(down[0].direction == -1);
  CHECK(up[0].t == doctest::Approx(3 * pi / 2).epsilon(1e-7));
  CHECK(down[1].t == doctest::Approx(5 * pi / 2).epsilon(1e-7));
  // The interpolated state at the event sits on the section.
  CHECK(std::abs(up[0].state[0]) < 1e-8);

  SUBCASE("re-scanning the same trajectory is idempotent") {
    const auto again = detect_crossings(tr, 0, 0.0, 0, 1e-9);
    REQUIRE(again.size() == both.size());
    for (std::size_t i = 0; i < both.size(); ++i) {
      CHECK(again[i].t == both[i].t);
      CHECK(again[i].direction == both[i].direction);
    }
  }
}

TEST_CASE("a crossing landing exactly on a node is reported once") {
  const Rhs unit = [](double, const double*, double* dy) { dy[0] = 1.0; };
  const Trajectory tr =
      integrate(unit, {-5.0}, 0.0, 10.0, fixed_step(1.0));
  const auto events = detect_crossings(tr, 0, 0.0, +1, 1e-9);
  REQUIRE(events.size() == 1);
  CHECK(events[0].t == doctest::Approx(5.0).epsilon(1e-9));
}

TEST_CASE("streaming detector matches the post-hoc scan") {
  IntegratorConfig cfg;
  cfg.rtol = 1e-10;
  cfg.atol = 1e-12;
  cfg.h_max = 0.3;
  CrossingDetector det(0, 0.0, 0, 1e-9);
  const Trajectory tr = integrate_sampled(
      kHarmonic, {1.0, 0.0}, 0.0, 10.0, cfg, 0.0, [&](const StepView& s) {
        det.observe(s);
        return true;
      });
  const auto scan = detect_crossings(tr, 0, 0.0, 0, 1e-9);
  REQUIRE(det.events().size() == scan.size());
  for (std::size_t i = 0; i < scan.size(); ++i)
    CHECK(det.events()[i].t == doctest::Approx(scan[i].t).epsilon(1e-10));
}

TEST_CASE("observer can stop the run early") {
  IntegratorConfig cfg;
  cfg.h_max = 0.1;
  std::size_t steps = 0;
  const std::vector<double> out = integrate_observed(
      kHarmonic, {1.0, 0.0}, 0.0, 100.0, cfg, [&](const StepView& s) {
        ++steps;
        return s.t1 < 1.0;
      });
  CHECK(steps < 30);
  REQUIRE(out.size() == 2);
  CHECK(out[0] == doctest::Approx(std::cos(1.0)).epsilon(0.05));
}

TEST_CASE("cell model integration is well behaved over a minute") {
  CellParams p;
  p.G = 8.0;
  const Rhs rhs = [&p](double, const double* y, double* dy) {
    CellState s{y[0], y[1], y[2], y[3], y[4]};
    const CellState d = rhs_single(s, p);
    dy[0] = d.v;
    dy[1] = d.u;
    dy[2] = d.x;
    dy[3] = d.y;
    dy[4] = d.z;
  };
  IntegratorConfig cfg;
  const std::vector<double> y0 = {-65.0, 0.0, 0.1, 0.5, 80.0};
  const Trajectory tr = integrate_sampled(rhs, y0, 0.0, 60000.0, cfg, 50.0);
  CHECK(tr.times.back() == 60000.0);
  for (std::size_t i = 0; i < tr.size(); ++i) {
    const double* s = tr.state(i);
    CHECK(std::isfinite(s[0]));
    CHECK(s[0] > -90.0);
    CHECK(s[0] < 20.0);
    CHECK(s[2] > 0.0);
  }
}
