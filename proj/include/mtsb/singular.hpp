#pragma once

// Desingularized slow flow on C1, pseudo-singular points (PSPs), their
// classification by the two flow-relevant eigenvalues, and the supporting
// non-degeneracy report.

#include "mtsb/geometry.hpp"
#include "mtsb/model.hpp"

#include <array>
#include <complex>
#include <string>
#include <vector>

namespace mtsb {

enum class PspClass { saddle, node, focus, degenerate };

/// Printable name ("saddle", "node", "focus", "degenerate").
const char* to_string(PspClass c);

/// One non-degeneracy condition: its value, a characteristic scale, and the
/// verdict at the appropriate threshold.
struct AssumptionEntry {
  std::string name;
  double value = 0.0;
  double scale = 0.0;
  bool ok = false;
};

/// Non-degeneracy report at a PSP: the fast-subsystem determinant must vanish
/// (|det| <= 1e-6 * scale), while h_vv, g2, h_x, f_v must be nonzero
/// (|value| > 1e-10 * scale).
struct AssumptionReport {
  AssumptionEntry det2;  ///< det D_{(v,u)}(h1,h2), expected ~ 0
  AssumptionEntry h_vv;  ///< second v-derivative of the u-eliminated h1
  AssumptionEntry g2_0;  ///< g2 at the point
  AssumptionEntry h_x;   ///< x-derivative of h1
  AssumptionEntry f_v;   ///< v-derivative of f
  bool all_ok = false;
};

struct PspPoint {
  CellState location;
  double G = 0.0;
  std::array<std::complex<double>, 2> eigenvalues{};
  PspClass classification = PspClass::degenerate;
  AssumptionReport assumption;
  std::string note; ///< canard-existence remark implied by the classification
};

/// The desingularized slow field on C1 in ambient coordinates: the five
/// bracketed components of the normalized slow system (time rescaled by the
/// negated 3x3 fast-intermediate determinant). Components 4 and 5 equal
/// -det * g1 and -det * g2. Built from analytic partials. Requires s.x > 0.
std::array<double, 5> normalized_slow_rhs(const CellState& s,
                                          const CellParams& p);

/// The four defining conditions of a PSP: the first three components of the
/// desingularized field and the determinant det D_{(v,u,x)}(h1,h2,f).
/// All four vanish iff s is a PSP.
std::array<double, 4> psp_conditions(const CellState& s, const CellParams& p);

/// Term-magnitude scales for the four conditions (for scaled residual norms).
std::array<double, 4> psp_condition_scales(const CellState& s,
                                           const CellParams& p);

/// Jacobian of the (v,z)-reduced desingularized flow at a point on C1:
/// both remaining coordinates are eliminated by the C1 parametrization
/// (x from f=0, u from h2=0, y from h1=0); entries by Richardson-extrapolated
/// central differences. Row-major [d1/dv, d1/dz, d5/dv, d5/dz].
std::array<double, 4> psp_reduced_jacobian(const CellState& loc,
                                           const CellParams& p);

/// Eigenvalues + classification of the (v,z)-reduced linearization:
/// saddle for a real pair of opposite signs, node for a real pair of equal
/// signs, focus for a complex pair; degenerate when the smaller eigenvalue
/// magnitude falls below 1e-12 times the Jacobian norm.
struct Classification {
  std::array<std::complex<double>, 2> eigenvalues{};
  PspClass cls = PspClass::degenerate;
  std::string note;
};
Classification classify_psp(const CellState& loc, const CellParams& p);

/// Non-degeneracy checks at a location on C1 (see AssumptionReport).
AssumptionReport check_assumption(const CellState& loc, const CellParams& p);

/// Damped Newton solve for a PSP in the (v,z) chart of C1: imposes the
/// determinant condition and the vanishing of the v-component of the
/// desingularized flow; the remaining two conditions are verified a
/// posteriori. guess_x defaults to a glucose-tracking heuristic near the
/// midpoint of the slow gate. Throws std::runtime_error with the last
/// residual after 100 iterations without convergence (scaled norm 1e-8).
PspPoint find_psp(const CellParams& p, double guess_v = -60.0,
                  double guess_x = -1.0);

/// One row of the G-sweep table; ok=false marks a gap (per-G solve failure).
struct EigenSweepRow {
  double G = 0.0;
  bool ok = false;
  CellState location;
  std::array<std::complex<double>, 2> eigenvalues{};
  PspClass classification = PspClass::degenerate;
  std::string error; ///< failure reason when ok == false
};

/// PSP continuation over G in [g_from, g_to] with step > 0; each solve is
/// warm-started from the previous success. Failures are recorded as gaps.
std::vector<EigenSweepRow> eigen_sweep(const CellParams& p, double g_from,
                                       double g_to, double step);

} // namespace mtsb
