#include "mtsb/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace mtsb {

std::array<double, 2> residual_C(const CellState& s, const CellParams& p) {
  return {h1(s, p), h2(s, p)};
}

double residual_C1(const CellState& s, const CellParams& p) {
  return s.x - (p.d3 * s.z - p.d1 * gate_X(s.v, p) * (s.v - p.a2)) / p.d2;
}

double solve_y_on_C(double v, double x, const CellParams& p) {
  if (v == p.a6)
    throw std::domain_error("solve_y_on_C undefined at v = a6");
  const double u = gate_Y(v, p);
  return (-p.a1 * gate_X(v, p) * (v - p.a2) / (v - p.a6) - p.a3 * u -
          p.a4 * gate_U(x, p)) /
         p.a5;
}

double solve_x_on_C1(double v, double z, const CellParams& p) {
  return (p.d3 * z - p.d1 * gate_X(v, p) * (v - p.a2)) / p.d2;
}

CellState lift_C1(double v, double z, const CellParams& p) {
  const double x = solve_x_on_C1(v, z, p);
  CellState s;
  s.v = v;
  s.u = gate_Y(v, p);
  s.x = x;
  s.y = solve_y_on_C(v, x, p);
  s.z = z;
  return s;
}

FastJacobian fast_jacobian(const CellState& s, const CellParams& p) {
  FastJacobian j;
  j.h1_v = -(p.a1 * (gate_X_d(s.v, p, 1) * (s.v - p.a2) + gate_X(s.v, p)) +
             (p.a3 * s.u + p.a4 * gate_U(s.x, p) + p.a5 * s.y));
  j.h1_u = -p.a3 * (s.v - p.a6);
  j.h2_v = p.a7 * gate_Y_d(s.v, p, 1);
  j.h2_u = -p.a7;
  return j;
}

double fold_residual(const CellState& s, const CellParams& p) {
  const FastJacobian j = fast_jacobian(s, p);
  return j.h1_v * j.h2_u - j.h1_u * j.h2_v;
}

double fold_residual_scale(const CellState& s, const CellParams& p) {
  const FastJacobian j = fast_jacobian(s, p);
  return std::max(std::fabs(j.h1_v), std::fabs(j.h1_u)) *
         std::max(std::fabs(j.h2_v), std::fabs(j.h2_u));
}

namespace {

ManifoldNode make_node_C(double v, double x, double z_slice,
                         const CellParams& p) {
  ManifoldNode n;
  n.axis1 = v;
  n.axis2 = x;
  if (v == p.a6 || x <= 0.0) return n; // flagged: explicit solve undefined
  CellState s;
  s.v = v;
  s.u = gate_Y(v, p);
  s.x = x;
  s.y = solve_y_on_C(v, x, p);
  s.z = z_slice;
  const auto r = residual_C(s, p);
  n.state = s;
  n.residual = std::max(std::fabs(r[0]), std::fabs(r[1]));
  n.ok = std::isfinite(n.residual);
  return n;
}

ManifoldNode make_node_C1(double v, double z, const CellParams& p) {
  ManifoldNode n;
  n.axis1 = v;
  n.axis2 = z;
  if (v == p.a6) return n;
  const double x = solve_x_on_C1(v, z, p);
  if (x <= 0.0) return n; // flagged: gate_U undefined
  const CellState s = lift_C1(v, z, p);
  const auto r = residual_C(s, p);
  n.state = s;
  n.residual = std::max({std::fabs(r[0]), std::fabs(r[1]),
                         std::fabs(residual_C1(s, p))});
  n.ok = std::isfinite(n.residual);
  return n;
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i)
    g[i] = (n == 1) ? lo : lo + (hi - lo) * static_cast<double>(i) /
                               static_cast<double>(n - 1);
  return g;
}

} // namespace

ManifoldSample sample_manifold(const CellParams& p, ManifoldKind kind,
                               double a1_min, double a1_max, double a2_min,
                               double a2_max, std::size_t n1, std::size_t n2,
                               double z_slice) {
  ManifoldSample m;
  m.kind = kind;
  m.axis1 = "v";
  m.axis2 = (kind == ManifoldKind::C) ? "x" : "z";
  m.z_slice = z_slice;
  if (a1_min > a1_max || a2_min > a2_max || n1 == 0 || n2 == 0)
    return m; // empty range -> empty sample
  if (n1 < 2 || n2 < 2)
    throw std::invalid_argument("manifold resolution must be >= 2 per axis");
  if (!std::isfinite(a1_min) || !std::isfinite(a1_max) ||
      !std::isfinite(a2_min) || !std::isfinite(a2_max))
    throw std::invalid_argument("manifold ranges must be finite");
  m.grid1 = linspace(a1_min, a1_max, n1);
  m.grid2 = linspace(a2_min, a2_max, n2);
  m.nodes.reserve(n1 * n2);
  for (double g2v : m.grid2)
    for (double g1v : m.grid1)
      m.nodes.push_back(kind == ManifoldKind::C
                            ? make_node_C(g1v, g2v, z_slice, p)
                            : make_node_C1(g1v, g2v, p));
  return m;
}

std::vector<CellState> fold_polyline(const ManifoldSample& sample,
                                     const CellParams& p) {
  std::vector<CellState> curve;
  const std::size_t n1 = sample.n1();
  auto lift = [&](double a1v, double a2v) {
    return sample.kind == ManifoldKind::C
               ? make_node_C(a1v, a2v, sample.z_slice, p)
               : make_node_C1(a1v, a2v, p);
  };
  for (std::size_t i2 = 0; i2 < sample.n2(); ++i2) {
    const double a2v = sample.grid2[i2];
    for (std::size_t i1 = 0; i1 + 1 < n1; ++i1) {
      const ManifoldNode& a = sample.at(i1, i2);
      const ManifoldNode& b = sample.at(i1 + 1, i2);
      if (!a.ok || !b.ok) continue;
      const double fa = fold_residual(a.state, p);
      const double fb = fold_residual(b.state, p);
      if (fa == 0.0) {
        curve.push_back(a.state);
        continue;
      }
      if (fa * fb >= 0.0) continue;
      double lo = sample.grid1[i1], hi = sample.grid1[i1 + 1];
      double flo = fa;
      for (int it = 0; it < 80 && (hi - lo) > 1e-12 * std::fabs(hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        const ManifoldNode nm = lift(mid, a2v);
        if (!nm.ok) break;
        const double fm = fold_residual(nm.state, p);
        if ((fm < 0.0) == (flo < 0.0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      const ManifoldNode nr = lift(0.5 * (lo + hi), a2v);
      if (nr.ok) curve.push_back(nr.state);
    }
  }
  return curve;
}

} // namespace mtsb
