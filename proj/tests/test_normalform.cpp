#include <doctest.h>

#include "mtsb/normalform.hpp"
#include "mtsb/singular.hpp"

#include <cmath>
#include <random>
#include <string>

using namespace mtsb;

namespace {

struct Fixture {
  CellParams p;
  PspPoint psp;
  PartialBundle b;
  NormalFormCoeffs c;
  Fixture() {
    p.G = 8.0;
    psp = find_psp(p);
    b = compute_partials(psp, p);
    c = coeffs(b);
  }
};

} // namespace

TEST_CASE("partial derivatives at the stationary point (G = 8)") {
  const Fixture fx;
  const PartialBundle& b = fx.b;
  CHECK(b.h_v == doctest::Approx(7.9395160077978e-6).epsilon(1e-8));
  CHECK(b.h_u == doctest::Approx(-8.2665980313485).epsilon(1e-10));
  CHECK(b.h_x == doctest::Approx(-4.497423564436984e-3).epsilon(1e-10));
  CHECK(b.h_y == doctest::Approx(-1.3771870340086).epsilon(1e-10));
  CHECK(b.h_vv == doctest::Approx(2.741715971295237e-3).epsilon(1e-10));
  CHECK(b.h_vx == doctest::Approx(-3.0795166644283e-4).epsilon(1e-10));
  CHECK(b.h_vy == doctest::Approx(-0.0943).epsilon(1e-12));
  CHECK(b.h_xx == doctest::Approx(-0.18893903132377).epsilon(1e-10));
  CHECK(b.h_vvv == doctest::Approx(1.3013216247105e-4).epsilon(1e-10));
  CHECK(b.h_xxx == doctest::Approx(-5.8600657358667).epsilon(1e-10));
  CHECK(b.f_v == doctest::Approx(0.028245561998933).epsilon(1e-10));
  CHECK(b.f_x == doctest::Approx(-16.0).epsilon(1e-12));
  CHECK(b.f_z == doctest::Approx(0.013).epsilon(1e-12));
  CHECK(b.f_vv == doctest::Approx(1.7963444395197e-3).epsilon(1e-10));
  CHECK(b.f_vvv == doctest::Approx(9.4801728248727e-5).epsilon(1e-10));
  CHECK(b.g1_0 == doctest::Approx(1.7914195154838e-4).epsilon(1e-9));
  CHECK(b.g1_x == doctest::Approx(2.4890107723921).epsilon(1e-10));
  CHECK(b.g1_y == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(b.g1_xx == doctest::Approx(1.6502143379025).epsilon(1e-9));
  CHECK(b.g1_xxx == doctest::Approx(-122.80940026583).epsilon(1e-9));
  CHECK(b.g2_0 == doctest::Approx(-67.515434288345).epsilon(1e-10));
  CHECK(b.g2_x == doctest::Approx(5977.6).epsilon(1e-12));
  CHECK(b.g2_z == doctest::Approx(-7.463).epsilon(1e-12));
}

TEST_CASE("finite-difference partials cross-validate the analytic ones") {
  const Fixture fx;
  const PartialBundle fd = compute_partials_fd(fx.psp, fx.p);
  const auto close = [](double a, double e, double tol) {
    CHECK(a == doctest::Approx(e).epsilon(tol));
  };
  close(fd.h_x, fx.b.h_x, 1e-6);
  close(fd.h_y, fx.b.h_y, 1e-6);
  close(fd.h_vv, fx.b.h_vv, 1e-6);
  close(fd.h_vx, fx.b.h_vx, 1e-5);
  close(fd.h_xx, fx.b.h_xx, 1e-5);
  close(fd.h_vvv, fx.b.h_vvv, 1e-3);
  close(fd.h_xxx, fx.b.h_xxx, 1e-3);
  close(fd.f_v, fx.b.f_v, 1e-6);
  close(fd.f_x, fx.b.f_x, 1e-6);
  close(fd.f_vv, fx.b.f_vv, 1e-5);
  close(fd.f_vvv, fx.b.f_vvv, 1e-3);
  close(fd.g1_x, fx.b.g1_x, 1e-6);
  close(fd.g1_xx, fx.b.g1_xx, 1e-5);
  close(fd.g2_x, fx.b.g2_x, 1e-6);
}

TEST_CASE("coefficient table at G = 8") {
  const Fixture fx;
  const NormalFormCoeffs& c = fx.c;
  CHECK(c.H_XX == doctest::Approx(-3.40699613e6).epsilon(1e-7));
  CHECK(c.H_VX == doctest::Approx(-49.9489428765).epsilon(1e-9));
  CHECK(c.H_VY == doctest::Approx(49.9489428765).epsilon(1e-9));
  CHECK(c.H_VVV == doctest::Approx(11.5411334763).epsilon(1e-9));
  CHECK(c.H_XXX == doctest::Approx(-5.71314086e12).epsilon(1e-7));
  CHECK(c.F_V == doctest::Approx(1.27032256124765e-4).epsilon(1e-10));
  CHECK(c.F_X == doctest::Approx(-16.0).epsilon(1e-12));
  CHECK(c.F_Z == doctest::Approx(-5.411313251704e-6).epsilon(1e-9));
  CHECK(c.F_VV == doctest::Approx(2.94666621e-3).epsilon(1e-7));
  CHECK(c.F_VVV == doctest::Approx(3.78132375e-2).epsilon(1e-7));
  CHECK(c.G_10 == doctest::Approx(-3.38207078231473e-7).epsilon(1e-10));
  CHECK(c.G_1X == doctest::Approx(-762.177125222).epsilon(1e-9));
  CHECK(c.G_1Y == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(c.G_1XX == doctest::Approx(-4.09810647e7).epsilon(1e-7));
  CHECK(c.G_1XXX == doctest::Approx(1.64891010541e14).epsilon(1e-8));
  CHECK(c.G_2X == doctest::Approx(-1.43604327e7).epsilon(1e-7));
  CHECK(c.G_2Z == doctest::Approx(-7.463).epsilon(1e-12));
}

TEST_CASE("shorthand identities hold exactly") {
  const Fixture fx;
  const NormalFormCoeffs& c = fx.c;
  CHECK(c.b1 == c.F_V);
  CHECK(c.b2 == c.F_Z);
  CHECK(c.b3 == c.F_X);
  CHECK(c.b4 == -c.G_1X);
  CHECK(c.b5 == c.G_1Y);
  CHECK(c.lambda == -c.G_10);
  // The two mixed quadratic coefficients are opposite because the recovery
  // and slow conductances enter the voltage equation through the same
  // (v - a6) factor.
  CHECK(c.H_VX == doctest::Approx(-c.H_VY).epsilon(1e-3));
}

TEST_CASE("coefficient table accessors cover every name") {
  const Fixture fx;
  const auto& names = coeff_names();
  CHECK(names.size() == 23);
  CHECK(names.front() == "H_XX");
  for (const std::string& name : names)
    CHECK(std::isfinite(coeff_value(fx.c, name)));
  CHECK(coeff_value(fx.c, "lambda") == fx.c.lambda);
  CHECK_THROWS(coeff_value(fx.c, "nope"));
}

TEST_CASE("chart scaling factors at the reference perturbation") {
  const Fixture fx;
  const ChartScaling s = chart_scaling(fx.p.eps, fx.b);
  CHECK(s.r3 == doctest::Approx(std::sqrt(fx.p.eps)).epsilon(1e-15));
  CHECK(s.fac_v == doctest::Approx(14.131778).epsilon(1e-6));
  CHECK(s.fac_x == doctest::Approx(60.872664).epsilon(1e-6));
  CHECK(s.fac_y == doctest::Approx(-7.460565e-5).epsilon(1e-6));
  CHECK(s.fac_z == doctest::Approx(-2.533854e-2).epsilon(1e-6));
  CHECK(s.fac_t == doctest::Approx(51.61913).epsilon(1e-6));
}

TEST_CASE("chart transforms are mutually inverse") {
  const Fixture fx;
  const ChartScaling s = chart_scaling(fx.p.eps, fx.b);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  for (int i = 0; i < 50; ++i) {
    const std::array<double, 4> k3 = {d(rng), d(rng), d(rng), d(rng)};
    const auto back = to_chart(s, from_chart(s, k3));
    for (int j = 0; j < 4; ++j)
      CHECK(back[j] == doctest::Approx(k3[j]).epsilon(1e-12));
  }
}

TEST_CASE("closed-form separatrix satisfies the chart equations at r3 = 0") {
  const Fixture fx;
  const double delta3 = fx.p.delta / std::sqrt(fx.p.eps);
  const double lambda3 = fx.c.lambda / fx.p.eps;
  CHECK(delta3 == doctest::Approx(0.4594102963695).epsilon(1e-10));
  CHECK(lambda3 == doctest::Approx(9.011646102624e-4).epsilon(1e-10));

  const double b1 = fx.c.b1, b4 = fx.c.b4;
  for (int i = 0; i <= 1000; ++i) {
    const double t3 = -5.0 + 3005.0 * i / 1000.0;
    const ChartK3State g =
        special_solution(fx.c, delta3, lambda3, 0.0, t3);
    const auto rhs = k3_rhs(g, fx.c);
    // Analytic time derivatives of the closed form.
    const double dv3 = b1 / 2.0;
    const double dx3 = b1 * b1 / 2.0 * t3;
    const double dy3 = delta3 * (b1 * b4 / 2.0 - lambda3 -
                                 b1 * b1 * b4 / 4.0 * t3 * t3);
    const double dz3 = delta3;
    CHECK(std::abs(rhs[0] - dv3) <= 1e-12 * std::max(1.0, std::abs(dv3)));
    CHECK(std::abs(rhs[1] - dx3) <= 1e-12 * std::max(1.0, std::abs(dx3)));
    CHECK(std::abs(rhs[2] - dy3) <= 1e-12 * std::max(1.0, std::abs(dy3)));
    CHECK(std::abs(rhs[3] - dz3) <= 1e-12 * std::max(1.0, std::abs(dz3)));
  }
}

TEST_CASE("orbits near the separatrix: more oscillations at smaller r3") {
  const Fixture fx;
  const double delta3 = fx.p.delta / std::sqrt(fx.p.eps);
  const double lambda3 = fx.c.lambda / fx.p.eps;
  const double r3_ref = std::sqrt(fx.p.eps);
  const BlowupComparison cmp =
      compare_blowup(fx.c, delta3, lambda3, {r3_ref * 1e-3, r3_ref},
                     -5.0, 3000.0, fx.c.b1 / 4.0);
  REQUIRE(cmp.runs.size() == 2);
  CHECK(cmp.runs[0].completed);
  CHECK(cmp.runs[1].completed);
  CHECK(cmp.runs[0].oscillations >= 2);
  CHECK(cmp.runs[0].oscillations > cmp.runs[1].oscillations);
  CHECK(cmp.runs[1].turned);
  // Both orbits eventually escape the chart window.
  CHECK(std::isfinite(cmp.runs[0].escape_t3));
  CHECK(std::isfinite(cmp.runs[1].escape_t3));
  CHECK(cmp.runs[0].escape_t3 > cmp.runs[1].escape_t3);
}
