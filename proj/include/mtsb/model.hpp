#pragma once

// Single-cell pancreatic beta-cell model with three time scales:
// fast electrical subsystem (v, u), intermediate calcium (x), and slow
// metabolic/channel variables (y, z). Units: v in mV, t in ms, x in uM;
// u, y are dimensionless gating/activation fractions, z is dimensionless.

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace mtsb {

/// Parameters of the single cell. Defaults are the reference set used
/// throughout; glucose G is the main bifurcation knob.
struct CellParams {
  // Electrical subsystem.
  double a1 = 0.226;    ///< conductance-like factor on the fast gate (1/ms/mV)
  double a2 = 25.0;     ///< reversal potential of the fast current (mV)
  double a3 = 0.566038; ///< scaling of the recovery conductance (1/ms)
  double a4 = 0.00189;  ///< scaling of the calcium-activated conductance (1/ms)
  double a5 = 0.0943;   ///< scaling of the slow-variable conductance (1/ms)
  double a6 = -75.0;    ///< reversal potential of the outward currents (mV)
  double a7 = 0.0625;   ///< recovery rate (1/ms)

  // Gate midpoints / slopes (mV).
  double v1 = -20.0; ///< midpoint of the fast activation gate
  double v2 = -16.0; ///< midpoint of the recovery gate
  double s1 = 12.0;  ///< slope of the fast activation gate
  double s2 = 5.0;   ///< slope of the recovery gate
  double s3 = 0.1;   ///< slope of the slow activation gate (in x)

  // Calcium subsystem.
  double d1 = 0.144; ///< calcium influx factor
  double d2 = 16.0;  ///< calcium removal rate
  double d3 = 0.013; ///< coupling of z into the calcium balance

  // Slowest subsystem.
  double k1 = 5977.6; ///< production rate in the z-equation
  double k2 = 7.463;  ///< degradation rate in the z-equation

  // Glucose dependence of the slow gate.
  double p_r = 1.75; ///< offset in the glucose-to-midpoint map
  double k_r = 58.0; ///< slope in the glucose-to-midpoint map
  double K_d = 0.3;  ///< half-saturation of the calcium-activated gate (uM)

  // Time-scale separation.
  double eps = 3.753e-4;  ///< ratio intermediate/fast
  double delta = 0.0089;  ///< ratio slow/intermediate

  double G = 8.0; ///< glucose level (mM)

  /// Midpoint of the slow activation gate in x, set by glucose.
  double x_mid() const { return (G - p_r) / k_r; }

  /// Throws std::invalid_argument if a parameter is out of its admissible
  /// range (positive rates/slopes, eps/delta in (0,1), G > 0).
  void validate() const;
};

/// State of one cell.
struct CellState {
  double v = 0.0; ///< membrane potential (mV)
  double u = 0.0; ///< recovery variable
  double x = 0.0; ///< calcium concentration (uM)
  double y = 0.0; ///< slow activation
  double z = 0.0; ///< slowest metabolic variable

  std::array<double, 5> to_array() const { return {v, u, x, y, z}; }
  static CellState from_array(const std::array<double, 5>& a) {
    return {a[0], a[1], a[2], a[3], a[4]};
  }
};

// --- Activation gates and their derivatives --------------------------------
// Logistic gates are sigma((w - mid)/slope); the calcium-activated gate is a
// Hill function of order 5. Derivative orders 0..3 are closed-form.

double gate_X(double v, const CellParams& p);   ///< fast activation, in v
double gate_Y(double v, const CellParams& p);   ///< recovery activation, in v
double gate_Z(double x, const CellParams& p);   ///< slow activation, in x
double gate_U(double x, const CellParams& p);   ///< Hill gate, in x (x > 0)

/// n-th derivative (n = 0..3) of the gates with respect to their argument.
double gate_X_d(double v, const CellParams& p, int n);
double gate_Y_d(double v, const CellParams& p, int n);
double gate_Z_d(double x, const CellParams& p, int n);
double gate_U_d(double x, const CellParams& p, int n);

// --- Right-hand-side building blocks ----------------------------------------
// The model is
//   v' = h1(v,u,x,y),   u' = h2(v,u),
//   x' = eps * f(v,x,z),
//   y' = eps*delta * g1(x,y),   z' = eps*delta * g2(x,z),
// with time in ms.

double h1(const CellState& s, const CellParams& p);
double h2(const CellState& s, const CellParams& p);
double f(const CellState& s, const CellParams& p);
double g1(const CellState& s, const CellParams& p);
double g2(const CellState& s, const CellParams& p);

/// Full single-cell right-hand side (time-scale factors included).
CellState rhs_single(const CellState& s, const CellParams& p);

/// Right-hand side of the 4D reduction used for local analysis: the recovery
/// variable is slaved to its v-nullcline (u = gate_Y(v)), leaving (v, x, y, z).
std::array<double, 4> rhs_reduced4(const std::array<double, 4>& s,
                                   const CellParams& p);

// --- Coupled identical-structure network ------------------------------------

/// Parameters of an electrically coupled network: per-cell parameter sets plus
/// the coupling strength k (1/ms). The coupling current on cell i is
/// (k / N) * sum_j (v_j - v_i), acting on the v-equation only.
struct NetworkParams {
  std::vector<CellParams> cells;
  double k = 0.0;
  std::size_t size() const { return cells.size(); }
  void validate() const; ///< throws on empty network, negative k, bad cells
};

/// Network right-hand side: states and derivatives are flat arrays of
/// 5 * N doubles in cell-major order (v,u,x,y,z per cell).
void rhs_network(const double* state, double* deriv, const NetworkParams& np);

/// Draws per-cell heterogeneous parameters around a base set: a5 uniform in
/// +/-a5_spread, k_r uniform in +/-kr_spread (relative), deterministic in seed.
NetworkParams make_heterogeneous(const CellParams& base, std::size_t n,
                                 std::uint64_t seed, double k,
                                 double a5_spread = 0.10,
                                 double kr_spread = 0.05);

// --- Parameter file I/O -------------------------------------------------------

/// Parses a "key = value" parameter file ('#' starts a comment; blank lines
/// ignored). Unknown keys and malformed lines throw std::invalid_argument
/// naming the offending key/line. Returns defaults overridden by the file.
CellParams load_params(const std::string& path);

/// Applies one key/value pair to a parameter set; throws std::invalid_argument
/// on unknown keys. Valid keys are the field names (a1..a7, v1, v2, s1..s3,
/// d1..d3, k1, k2, p_r, k_r, K_d, eps, delta, G).
void set_param(CellParams& p, const std::string& key, double value);

/// Reads a named parameter back; throws std::invalid_argument on unknown keys.
double get_param(const CellParams& p, const std::string& key);

/// All valid parameter keys in declaration order.
const std::vector<std::string>& param_keys();

} // namespace mtsb
