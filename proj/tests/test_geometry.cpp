#include <doctest.h>

#include "mtsb/geometry.hpp"
#include "mtsb/model.hpp"

#include <cmath>
#include <vector>

using namespace mtsb;

TEST_CASE("constructed points lie on the fast critical manifold") {
  CellParams p;
  p.G = 8.0;
  for (double v = -72.0; v <= -40.0; v += 1.7) {
    for (double x : {0.05, 0.094, 0.15, 0.25}) {
      CellState s;
      s.v = v;
      s.u = gate_Y(v, p);
      s.x = x;
      s.y = solve_y_on_C(v, x, p);
      s.z = 80.0;
      const auto r = residual_C(s, p);
      CHECK(std::abs(r[0]) < 1e-12);
      CHECK(std::abs(r[1]) < 1e-15);
    }
  }
  CHECK(solve_y_on_C(-60.4, 0.094, p) ==
        doctest::Approx(0.46667239680723443).epsilon(1e-13));
}

TEST_CASE("the refined manifold adds the calcium balance") {
  CellParams p;
  p.G = 8.0;
  const CellState s = lift_C1(-64.0, 80.0, p);
  CHECK(s.x == doctest::Approx(0.084964465744338343).epsilon(1e-12));
  CHECK(s.y == doctest::Approx(0.48285975652636206).epsilon(1e-12));
  const auto rc = residual_C(s, p);
  CHECK(std::abs(rc[0]) < 1e-12);
  CHECK(std::abs(rc[1]) < 1e-15);
  CHECK(std::abs(residual_C1(s, p)) < 1e-12);
  CHECK(solve_x_on_C1(-64.0, 80.0, p) == s.x);
}

TEST_CASE("fold residual matches a finite-difference determinant") {
  CellParams p;
  p.G = 8.0;
  for (double v = -66.0; v <= -50.0; v += 2.3) {
    const CellState s = lift_C1(v, 84.0, p);
    const FastJacobian j = fast_jacobian(s, p);

    // Independent determinant from centered differences of (h1, h2) in
    // (v, u), on the same scale as the analytic expression.
    const double hv = 1e-5, hu = 1e-8;
    CellState sp = s, sm = s;
    sp.v += hv;
    sm.v -= hv;
    const double d_h1_v = (h1(sp, p) - h1(sm, p)) / (2 * hv);
    const double d_h2_v = (h2(sp, p) - h2(sm, p)) / (2 * hv);
    sp = s;
    sm = s;
    sp.u += hu;
    sm.u -= hu;
    const double d_h1_u = (h1(sp, p) - h1(sm, p)) / (2 * hu);
    const double d_h2_u = (h2(sp, p) - h2(sm, p)) / (2 * hu);
    const double det_fd = d_h1_v * d_h2_u - d_h1_u * d_h2_v;

    const double scale = fold_residual_scale(s, p);
    CHECK(scale > 0.0);
    CHECK(std::abs(fold_residual(s, p) - det_fd) / scale < 1e-6);
    CHECK(j.h1_v * j.h2_u - j.h1_u * j.h2_v == fold_residual(s, p));
  }
}

TEST_CASE("manifold sampling fills the requested grid") {
  CellParams p;
  p.G = 8.0;
  SUBCASE("fast-equilibrium sheet over (v, x)") {
    const ManifoldSample m =
        sample_manifold(p, ManifoldKind::C, -70.0, -40.0, 0.05, 0.2, 16, 11,
                        84.0);
    CHECK(m.axis1 == "v");
    CHECK(m.axis2 == "x");
    CHECK(m.n1() == 16);
    CHECK(m.n2() == 11);
    REQUIRE(m.nodes.size() == 16 * 11);
    std::size_t ok = 0;
    for (const ManifoldNode& n : m.nodes) {
      if (!n.ok) continue;
      ++ok;
      CHECK(n.state.z == 84.0);
      CHECK(std::abs(n.residual) < 1e-10);
      const auto r = residual_C(n.state, p);
      CHECK(std::abs(r[0]) < 1e-10);
    }
    CHECK(ok == m.nodes.size());
    // Row-major layout: node (i1, i2) at index i2*n1 + i1.
    CHECK(m.at(3, 2).axis1 == doctest::Approx(m.grid1[3]));
    CHECK(m.at(3, 2).axis2 == doctest::Approx(m.grid2[2]));
  }
  SUBCASE("refined sheet over (v, z)") {
    const ManifoldSample m =
        sample_manifold(p, ManifoldKind::C1, -70.0, -45.0, 70.0, 95.0, 13, 9);
    CHECK(m.axis1 == "v");
    CHECK(m.axis2 == "z");
    REQUIRE(m.nodes.size() == 13 * 9);
    for (const ManifoldNode& n : m.nodes) {
      if (!n.ok) continue;
      CHECK(std::abs(residual_C1(n.state, p)) < 1e-10);
    }
  }
}

TEST_CASE("the fold polyline separates attracting and repelling sheets") {
  CellParams p;
  p.G = 8.0;
  const ManifoldSample m =
      sample_manifold(p, ManifoldKind::C1, -70.0, -40.0, 70.0, 100.0, 61, 31);
  const std::vector<CellState> fold = fold_polyline(m, p);
  REQUIRE(!fold.empty());
  for (const CellState& s : fold) {
    // On the refined manifold and on the fold: both defining residuals
    // vanish after the polyline refinement.
    CHECK(std::abs(residual_C1(s, p)) < 1e-9);
    CHECK(std::abs(fold_residual(s, p)) / fold_residual_scale(s, p) < 1e-9);
  }
}
