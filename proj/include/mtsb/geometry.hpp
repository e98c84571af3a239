#pragma once

// Critical-manifold geometry of the fast subsystem: the equilibrium surface
// C = {h1 = h2 = 0}, its refinement C1 = C intersect {f = 0}, the fold locus
// where the fast Jacobian degenerates, and mesh sampling for plots.

#include "mtsb/model.hpp"

#include <array>
#include <string>
#include <vector>

namespace mtsb {

/// Residuals of C membership: (h1, h2) at s. Both vanish iff s lies on C.
std::array<double, 2> residual_C(const CellState& s, const CellParams& p);

/// Residual of the f = 0 refinement: x - (d3*z - d1*gate_X(v)*(v - a2))/d2.
/// Zero (together with residual_C) iff s lies on C1.
double residual_C1(const CellState& s, const CellParams& p);

/// Solves h1 = 0 for y given (v, x), with u slaved to gate_Y(v).
/// Requires v != a6 and x > 0.
double solve_y_on_C(double v, double x, const CellParams& p);

/// Solves f = 0 for x given (v, z).
double solve_x_on_C1(double v, double z, const CellParams& p);

/// Lifts chart coordinates (v, z) to the full state on C1:
/// x from f = 0, u = gate_Y(v), y from h1 = 0.
CellState lift_C1(double v, double z, const CellParams& p);

/// Analytic first partials of (h1, h2) with respect to (v, u) at s.
struct FastJacobian {
  double h1_v, h1_u, h2_v, h2_u;
};
FastJacobian fast_jacobian(const CellState& s, const CellParams& p);

/// Determinant of D_{(v,u)}(h1, h2) from analytic partials. Zero exactly on
/// the fold locus L; changes sign across it. Callers should ensure s lies on
/// C (the value is still well defined off C, but only meaningful near it).
double fold_residual(const CellState& s, const CellParams& p);

/// Characteristic magnitude for fold_residual comparisons: the product of the
/// infinity-norms of the two Jacobian rows (Hadamard-style determinant bound).
double fold_residual_scale(const CellState& s, const CellParams& p);

enum class ManifoldKind {
  C,  ///< h1 = h2 = 0; meshed over (v, x), z fixed to a slice value
  C1, ///< adds f = 0; meshed over (v, z)
};

/// One mesh node: chart coordinates, the lifted state, the membership
/// residual (max-abs over the defining equations), and a validity flag
/// (false where the explicit solves are undefined, e.g. x <= 0 or v = a6).
struct ManifoldNode {
  double axis1 = 0.0, axis2 = 0.0;
  CellState state;
  double residual = 0.0;
  bool ok = false;
};

struct ManifoldSample {
  ManifoldKind kind = ManifoldKind::C;
  std::string axis1, axis2;     ///< chart axis names ("v","x" or "v","z")
  double z_slice = 0.0;         ///< fixed z used for kind C nodes
  std::vector<double> grid1, grid2;
  std::vector<ManifoldNode> nodes; ///< row-major: index = i2 * n1 + i1
  std::size_t n1() const { return grid1.size(); }
  std::size_t n2() const { return grid2.size(); }
  const ManifoldNode& at(std::size_t i1, std::size_t i2) const {
    return nodes[i2 * grid1.size() + i1];
  }
};

/// Samples the manifold over a chart rectangle with resolution n1 x n2
/// (n >= 2 per axis unless the range is empty, which yields an empty sample).
/// For kind C the free coordinate z is set to z_slice (it does not enter the
/// membership equations). Undefined nodes are flagged, not fatal.
ManifoldSample sample_manifold(const CellParams& p, ManifoldKind kind,
                               double a1_min, double a1_max, double a2_min,
                               double a2_max, std::size_t n1, std::size_t n2,
                               double z_slice = 0.0);

/// Extracts the fold curve L as a polyline: scans each mesh row for sign
/// changes of fold_residual along axis1 and refines each crossing by
/// bisection on the lifted one-parameter family. Points are ordered by axis2.
std::vector<CellState> fold_polyline(const ManifoldSample& sample,
                                     const CellParams& p);

} // namespace mtsb
