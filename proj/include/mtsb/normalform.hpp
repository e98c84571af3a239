#pragma once

// Local normal form at the pseudo-singular point: partial-derivative bundle
// of the u-eliminated shifted system, the coefficient table, the central
// blow-up chart vector field, its closed-form special solution, and the
// perturbed-vs-special comparison runs.

#include "mtsb/integrate.hpp"
#include "mtsb/model.hpp"
#include "mtsb/singular.hpp"

#include <array>
#include <string>
#include <vector>

namespace mtsb {

/// Partial derivatives at the shifted PSP (origin) of the u-eliminated
/// right-hand sides: h (voltage), f (calcium), g1, g2 (slow pair). h_u is the
/// u-partial of the unreduced voltage equation, kept for the fold determinant.
struct PartialBundle {
  double h_v = 0, h_u = 0, h_x = 0, h_y = 0;
  double h_vv = 0, h_vx = 0, h_vy = 0, h_xx = 0;
  double h_vvv = 0, h_xxx = 0;
  double f_v = 0, f_x = 0, f_z = 0, f_vv = 0, f_vvv = 0;
  double g1_0 = 0, g1_x = 0, g1_y = 0, g1_xx = 0, g1_xxx = 0;
  double g2_0 = 0, g2_x = 0, g2_z = 0;
};

/// The coefficient table of the normal form plus the derived shorthands.
/// Identities b1=F_V, b2=F_Z, b3=F_X, b4=-G_1X, b5=G_1Y, lambda=-G_10 hold by
/// construction.
struct NormalFormCoeffs {
  double H_XX = 0, H_VX = 0, H_VY = 0, H_VVV = 0, H_XXX = 0;
  double F_V = 0, F_X = 0, F_Z = 0, F_VV = 0, F_VVV = 0;
  double G_10 = 0, G_1X = 0, G_1Y = 0, G_1XX = 0, G_1XXX = 0;
  double G_2X = 0, G_2Z = 0;
  double b1 = 0, b2 = 0, b3 = 0, b4 = 0, b5 = 0, lambda = 0;
};

/// Table row order and accessors for export ("H_XX" ... "G_2Z", then
/// "b1".."b5", "lambda").
const std::vector<std::string>& coeff_names();
double coeff_value(const NormalFormCoeffs& c, const std::string& name);

/// State in the central blow-up chart; r3, delta3, lambda3 are constants of
/// the motion.
struct ChartK3State {
  double v3 = 0, x3 = 0, y3 = 0, z3 = 0;
  double r3 = 0, delta3 = 0, lambda3 = 0;
};

/// Analytic partials at the shifted PSP, with a mandatory internal
/// finite-difference cross-check (Richardson-extrapolated central stencils;
/// order-scaled steps). Throws std::runtime_error naming the first entry
/// whose cross-check disagrees beyond 1e-4 relative (1e-2 for third order).
PartialBundle compute_partials(const PspPoint& psp, const CellParams& p);

/// Pure finite-difference bundle (same stencils), exposed for tests.
PartialBundle compute_partials_fd(const PspPoint& psp, const CellParams& p);

/// Coefficients from the bundle. Guards the divisions required by the
/// non-degeneracy assumption (h_vv, h_x, g2_0 nonzero) and throws
/// std::domain_error naming the violated entry.
NormalFormCoeffs coeffs(const PartialBundle& b);

/// Right-hand side of the chart-K3 system truncated at its printed monomials
/// (remainder terms dropped): returns (dv3, dx3, dy3, dz3).
std::array<double, 4> k3_rhs(const ChartK3State& s, const NormalFormCoeffs& c);

/// Closed-form special solution on the invariant set r3 = 0:
/// (b1/2*t3, b1^2/4*t3^2 - b1/2, delta3*((b1*b4/2 - lambda3)*t3
///  - b1^2*b4/12*t3^3), delta3*t3 + z30).
ChartK3State special_solution(const NormalFormCoeffs& c, double delta3,
                              double lambda3, double z30, double t3);

/// One comparison run: a perturbed trajectory at fixed r3, its oscillation
/// and escape diagnostics, plus the special solution sampled on the same
/// time grid.
struct BlowupRun {
  double r3 = 0.0;
  bool completed = false;      ///< false if the integration failed mid-span
  std::string error;           ///< failure reason when !completed
  std::vector<double> t3;      ///< sample times
  std::vector<ChartK3State> perturbed;
  std::vector<ChartK3State> special;
  double escape_t3 = 0.0;      ///< first |v3| > escape threshold; NaN if none
  int oscillations = 0;        ///< local maxima of v3 strictly before escape
  bool turned = false; ///< any v3 direction reversal before escape (a turn)
};

struct BlowupComparison {
  NormalFormCoeffs coeffs;
  double delta3 = 0, lambda3 = 0, z30 = 0;
  double t3_from = 0, t3_to = 0;
  std::vector<BlowupRun> runs;
};

/// Integrates the chart system for each r3 from gamma(t3_from) + an offset
/// applied to x3 (transverse to the separatrix parabola). Escape threshold
/// |v3| > 50. Failed integrations yield partial, flagged runs.
BlowupComparison compare_blowup(const NormalFormCoeffs& c, double delta3,
                                double lambda3,
                                const std::vector<double>& r3_values,
                                double t3_from, double t3_to,
                                double ic_offset = 0.0, double z30 = 0.0,
                                double sample_dt3 = 0.5);

/// Back-transformation factors from chart-K3 coordinates to the shifted
/// original variables at r3 = sqrt(eps): v = fac_v*v3, x = fac_x*x3,
/// y = fac_y*y3, z = fac_z*z3, t = fac_t*t3 (weights (1,2,4,2) composed with
/// the normal-form rescalings).
struct ChartScaling {
  double r3 = 0;
  double fac_v = 0, fac_x = 0, fac_y = 0, fac_z = 0, fac_t = 0;
};
ChartScaling chart_scaling(double eps, const PartialBundle& b);

/// Applies / inverts the scaling (round-trip identity up to rounding).
std::array<double, 4> from_chart(const ChartScaling& s,
                                 const std::array<double, 4>& k3_state);
std::array<double, 4> to_chart(const ChartScaling& s,
                               const std::array<double, 4>& shifted_state);

} // namespace mtsb
