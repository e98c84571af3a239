#include "mtsb/singular.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace mtsb {

namespace {

/// Analytic partials of (h1, h2, f) with respect to (v, u, x) plus the
/// y/z couplings, all at s.
struct SlowPartials {
  double h1_v, h1_u, h1_x, h1_y;
  double h2_v, h2_u;
  double f_v, f_x, f_z;
  double det2, det3;
  double g1v, g2v;
};

SlowPartials slow_partials(const CellState& s, const CellParams& p) {
  SlowPartials q;
  const FastJacobian j = fast_jacobian(s, p);
  q.h1_v = j.h1_v;
  q.h1_u = j.h1_u;
  q.h2_v = j.h2_v;
  q.h2_u = j.h2_u;
  q.h1_x = -p.a4 * gate_U_d(s.x, p, 1) * (s.v - p.a6);
  q.h1_y = -p.a5 * (s.v - p.a6);
  q.f_v = -p.d1 * (gate_X_d(s.v, p, 1) * (s.v - p.a2) + gate_X(s.v, p));
  q.f_x = -p.d2;
  q.f_z = p.d3;
  q.det2 = q.h1_v * q.h2_u - q.h1_u * q.h2_v;
  q.det3 = q.f_x * q.det2 - q.h1_x * q.h2_u * q.f_v;
  q.g1v = g1(s, p);
  q.g2v = g2(s, p);
  return q;
}

/// Richardson-extrapolated central difference of a scalar function.
template <typename F>
double central_richardson(const F& fn, double x0, double h) {
  const double d1 = (fn(x0 + h) - fn(x0 - h)) / (2.0 * h);
  const double d2 = (fn(x0 + h / 2.0) - fn(x0 - h / 2.0)) / h;
  return (4.0 * d2 - d1) / 3.0;
}

std::string canard_note(PspClass c) {
  switch (c) {
    case PspClass::saddle:
      return "singular canard exists (folded saddle)";
    case PspClass::node:
      return "singular canards exist under the no-resonance condition "
             "(resonance not checked)";
    case PspClass::focus:
      return "no singular canard through a folded focus";
    case PspClass::degenerate:
      return "classification degenerate; no canard statement";
  }
  return {};
}

} // namespace

const char* to_string(PspClass c) {
  switch (c) {
    case PspClass::saddle: return "saddle";
    case PspClass::node: return "node";
    case PspClass::focus: return "focus";
    case PspClass::degenerate: return "degenerate";
  }
  return "degenerate";
}

std::array<double, 5> normalized_slow_rhs(const CellState& s,
                                          const CellParams& p) {
  if (!(s.x > 0.0))
    throw std::domain_error("normalized slow field requires x > 0");
  const SlowPartials q = slow_partials(s, p);
  const double a = q.h1_y * q.g1v; // forcing of the voltage equation
  const double b = q.f_z * q.g2v;  // forcing of the calcium equation
  return {
      a * q.h2_u * q.f_x - b * q.h1_x * q.h2_u,
      -a * q.h2_v * q.f_x + b * q.h1_x * q.h2_v,
      -a * q.h2_u * q.f_v + b * q.det2,
      -q.det3 * q.g1v,
      -q.det3 * q.g2v,
  };
}

std::array<double, 4> psp_conditions(const CellState& s, const CellParams& p) {
  const auto r = normalized_slow_rhs(s, p);
  const SlowPartials q = slow_partials(s, p);
  return {r[0], r[1], r[2], q.det3};
}

std::array<double, 4> psp_condition_scales(const CellState& s,
                                           const CellParams& p) {
  const SlowPartials q = slow_partials(s, p);
  const double a = std::fabs(q.h1_y * q.g1v);
  const double b = std::fabs(q.f_z * q.g2v);
  const double det2_scale =
      std::fabs(q.h1_v * q.h2_u) + std::fabs(q.h1_u * q.h2_v);
  const double tiny = std::numeric_limits<double>::min();
  return {
      std::max(a * std::fabs(q.h2_u * q.f_x) +
                   b * std::fabs(q.h1_x * q.h2_u),
               tiny),
      std::max(a * std::fabs(q.h2_v * q.f_x) +
                   b * std::fabs(q.h1_x * q.h2_v),
               tiny),
      std::max(a * std::fabs(q.h2_u * q.f_v) + b * det2_scale, tiny),
      std::max(std::fabs(q.f_x) * det2_scale +
                   std::fabs(q.h1_x * q.h2_u * q.f_v),
               tiny),
  };
}

std::array<double, 4> psp_reduced_jacobian(const CellState& loc,
                                           const CellParams& p) {
  auto field = [&](double v, double z, int comp) {
    const CellState s = lift_C1(v, z, p);
    const auto r = normalized_slow_rhs(s, p);
    return comp == 0 ? r[0] : r[4];
  };
  const double hv = 1e-5 * std::max(1.0, std::fabs(loc.v));
  const double hz = 1e-5 * std::max(1.0, std::fabs(loc.z));
  std::array<double, 4> jac{};
  for (int comp = 0; comp < 2; ++comp) {
    jac[2 * comp + 0] = central_richardson(
        [&](double v) { return field(v, loc.z, comp); }, loc.v, hv);
    jac[2 * comp + 1] = central_richardson(
        [&](double z) { return field(loc.v, z, comp); }, loc.z, hz);
  }
  return jac;
}

Classification classify_psp(const CellState& loc, const CellParams& p) {
  const auto j = psp_reduced_jacobian(loc, p);
  const double tr = j[0] + j[3];
  const double det = j[0] * j[3] - j[1] * j[2];
  const double disc = tr * tr - 4.0 * det;
  Classification out;
  if (disc >= 0.0) {
    const double root = std::sqrt(disc);
    out.eigenvalues = {std::complex<double>((tr + root) / 2.0, 0.0),
                       std::complex<double>((tr - root) / 2.0, 0.0)};
  } else {
    const double im = std::sqrt(-disc) / 2.0;
    out.eigenvalues = {std::complex<double>(tr / 2.0, im),
                       std::complex<double>(tr / 2.0, -im)};
  }
  const double scale = std::max({std::fabs(j[0]) + std::fabs(j[1]),
                                 std::fabs(j[2]) + std::fabs(j[3]),
                                 std::numeric_limits<double>::min()});
  const double m0 = std::abs(out.eigenvalues[0]);
  const double m1 = std::abs(out.eigenvalues[1]);
  if (std::min(m0, m1) < 1e-12 * scale) {
    out.cls = PspClass::degenerate;
  } else if (disc < 0.0) {
    out.cls = PspClass::focus;
  } else {
    const double l0 = out.eigenvalues[0].real();
    const double l1 = out.eigenvalues[1].real();
    out.cls = (l0 * l1 < 0.0) ? PspClass::saddle : PspClass::node;
  }
  out.note = canard_note(out.cls);
  return out;
}

AssumptionReport check_assumption(const CellState& loc, const CellParams& p) {
  AssumptionReport rep;
  const SlowPartials q = slow_partials(loc, p);

  rep.det2.name = "det D_(v,u)(h1,h2)";
  rep.det2.value = fold_residual(loc, p);
  rep.det2.scale = fold_residual_scale(loc, p);
  rep.det2.ok = std::fabs(rep.det2.value) <= 1e-6 * rep.det2.scale;

  // Second v-derivative of the u-eliminated voltage equation.
  const double h1_vv =
      -p.a1 * (gate_X_d(loc.v, p, 2) * (loc.v - p.a2) +
               2.0 * gate_X_d(loc.v, p, 1));
  const double yp1 = gate_Y_d(loc.v, p, 1);
  const double yp2 = gate_Y_d(loc.v, p, 2);
  rep.h_vv.name = "h_vv";
  rep.h_vv.value = h1_vv - 2.0 * p.a3 * yp1 + q.h1_u * yp2;
  rep.h_vv.scale = std::fabs(p.a1 * gate_X_d(loc.v, p, 2) * (loc.v - p.a2)) +
                   std::fabs(2.0 * p.a1 * gate_X_d(loc.v, p, 1)) +
                   std::fabs(2.0 * p.a3 * yp1) + std::fabs(q.h1_u * yp2);
  rep.h_vv.ok = std::fabs(rep.h_vv.value) > 1e-10 * rep.h_vv.scale;

  rep.g2_0.name = "g2";
  rep.g2_0.value = q.g2v;
  rep.g2_0.scale = std::fabs(p.k1 * loc.x) + std::fabs(p.k2 * loc.z);
  rep.g2_0.ok = std::fabs(rep.g2_0.value) > 1e-10 * rep.g2_0.scale;

  rep.h_x.name = "h_x";
  rep.h_x.value = q.h1_x;
  rep.h_x.scale = std::fabs(q.h1_x);
  rep.h_x.ok = std::fabs(rep.h_x.value) > 1e-10 * rep.h_x.scale;

  rep.f_v.name = "f_v";
  rep.f_v.value = q.f_v;
  rep.f_v.scale =
      std::fabs(p.d1 * gate_X_d(loc.v, p, 1) * (loc.v - p.a2)) +
      std::fabs(p.d1 * gate_X(loc.v, p));
  rep.f_v.ok = std::fabs(rep.f_v.value) > 1e-10 * rep.f_v.scale;

  rep.all_ok =
      rep.det2.ok && rep.h_vv.ok && rep.g2_0.ok && rep.h_x.ok && rep.f_v.ok;
  return rep;
}

namespace {

/// z on C1 determined by (v, x) through f = 0.
double z_from_vx(double v, double x, const CellParams& p) {
  return (p.d1 * gate_X(v, p) * (v - p.a2) + p.d2 * x) / p.d3;
}

/// Raw residual of the two Newton conditions (fold determinant and the
/// v-component of the desingularized flow) plus the local term-magnitude
/// scales; invalid outside the chart domain. Scaling is applied with scales
/// FROZEN at the current iterate: the pointwise scale is a term-magnitude
/// sum, so the pointwise-scaled residual saturates at +-1 wherever the terms
/// share a sign and would give the Newton step a vanishing gradient.
struct NewtonEval {
  double raw4 = 0, raw1 = 0;   // unscaled (det3, v-component)
  double scale4 = 1, scale1 = 1;
  bool valid = false;

  double f1(const NewtonEval& ref) const { return raw4 / ref.scale4; }
  double f2(const NewtonEval& ref) const { return raw1 / ref.scale1; }
  double norm(const NewtonEval& ref) const {
    return std::fabs(f1(ref)) + std::fabs(f2(ref));
  }
};

NewtonEval eval_conditions(double v, double z, const CellParams& p) {
  NewtonEval e;
  if (v == p.a6) return e;
  const double x = solve_x_on_C1(v, z, p);
  if (!(x > 0.0) || !std::isfinite(x)) return e;
  const CellState s = lift_C1(v, z, p);
  const auto c = psp_conditions(s, p);
  const auto sc = psp_condition_scales(s, p);
  e.raw4 = c[3];
  e.raw1 = c[0];
  e.scale4 = sc[3];
  e.scale1 = sc[0];
  e.valid = std::isfinite(e.raw4) && std::isfinite(e.raw1) &&
            std::isfinite(e.scale4) && std::isfinite(e.scale1);
  return e;
}

} // namespace

PspPoint find_psp(const CellParams& p, double guess_v, double guess_x) {
  p.validate();
  if (guess_x <= 0.0)
    guess_x = std::max(0.01, p.x_mid() - 0.013); // glucose-tracking warm start
  double v = guess_v;
  double z = z_from_vx(guess_v, guess_x, p);

  NewtonEval cur = eval_conditions(v, z, p);
  if (!cur.valid)
    throw std::runtime_error("pseudo-singular solve: invalid initial guess");

  const int max_iter = 100;
  bool converged = false;
  for (int it = 0; it < max_iter; ++it) {
    if (std::max(std::fabs(cur.f1(cur)), std::fabs(cur.f2(cur))) <= 1e-10) {
      converged = true;
      break;
    }
    // Jacobian of the conditions by central differences, row-scaled with the
    // current iterate's (frozen) scales.
    const double hv = 1e-6 * std::max(1.0, std::fabs(v));
    const double hz = 1e-6 * std::max(1.0, std::fabs(z));
    const NewtonEval vp = eval_conditions(v + hv, z, p);
    const NewtonEval vm = eval_conditions(v - hv, z, p);
    const NewtonEval zp = eval_conditions(v, z + hz, p);
    const NewtonEval zm = eval_conditions(v, z - hz, p);
    if (!vp.valid || !vm.valid || !zp.valid || !zm.valid)
      throw std::runtime_error(
          "pseudo-singular solve: left chart domain during differencing");
    const double j11 = (vp.f1(cur) - vm.f1(cur)) / (2.0 * hv);
    const double j12 = (zp.f1(cur) - zm.f1(cur)) / (2.0 * hz);
    const double j21 = (vp.f2(cur) - vm.f2(cur)) / (2.0 * hv);
    const double j22 = (zp.f2(cur) - zm.f2(cur)) / (2.0 * hz);
    const double det = j11 * j22 - j12 * j21;
    if (det == 0.0 || !std::isfinite(det))
      throw std::runtime_error("pseudo-singular solve: singular Jacobian");
    const double f1 = cur.f1(cur), f2 = cur.f2(cur);
    const double dv = -(j22 * f1 - j12 * f2) / det;
    const double dz = -(-j21 * f1 + j11 * f2) / det;

    // Damped update: halve until the residual (in the frozen scaling)
    // decreases.
    double lam = 1.0;
    NewtonEval next;
    bool improved = false;
    for (int halve = 0; halve < 30; ++halve) {
      next = eval_conditions(v + lam * dv, z + lam * dz, p);
      if (next.valid && next.norm(cur) < cur.norm(cur)) {
        improved = true;
        break;
      }
      lam *= 0.5;
    }
    if (!improved) {
      // No decrease along the Newton direction; accept only if already
      // essentially converged, otherwise fail below via the residual check.
      break;
    }
    v += lam * dv;
    z += lam * dz;
    cur = next;
  }
  if (!converged &&
      std::max(std::fabs(cur.f1(cur)), std::fabs(cur.f2(cur))) > 1e-8) {
    std::ostringstream msg;
    msg << "pseudo-singular solve did not converge within " << max_iter
        << " iterations; last scaled residual (det, v-flow) = ("
        << cur.f1(cur) << ", " << cur.f2(cur) << ") at v = " << v
        << ", z = " << z;
    throw std::runtime_error(msg.str());
  }

  PspPoint psp;
  psp.location = lift_C1(v, z, p);
  psp.G = p.G;

  // The remaining two defining conditions follow from the rank structure at
  // a genuine solution; verify them a posteriori.
  const auto c = psp_conditions(psp.location, p);
  const auto sc = psp_condition_scales(psp.location, p);
  if (std::fabs(c[1]) > 1e-6 * sc[1] || std::fabs(c[2]) > 1e-6 * sc[2]) {
    std::ostringstream msg;
    msg << "pseudo-singular solve converged to a spurious point: residual "
           "conditions 2,3 = ("
        << c[1] / sc[1] << ", " << c[2] / sc[2] << ") scaled";
    throw std::runtime_error(msg.str());
  }

  const Classification cls = classify_psp(psp.location, p);
  psp.eigenvalues = cls.eigenvalues;
  psp.classification = cls.cls;
  psp.note = cls.note;
  psp.assumption = check_assumption(psp.location, p);
  return psp;
}

std::vector<EigenSweepRow> eigen_sweep(const CellParams& p, double g_from,
                                       double g_to, double step) {
  if (!(step > 0.0))
    throw std::invalid_argument("eigen_sweep requires step > 0");
  std::vector<EigenSweepRow> rows;
  const auto count =
      static_cast<std::size_t>(std::floor((g_to - g_from) / step + 1e-9)) + 1;
  double guess_v = -60.0;
  double guess_x = -1.0; // auto on first solve
  for (std::size_t i = 0; i < count; ++i) {
    CellParams q = p;
    q.G = g_from + static_cast<double>(i) * step;
    EigenSweepRow row;
    row.G = q.G;
    try {
      const PspPoint psp = find_psp(q, guess_v, guess_x);
      row.ok = true;
      row.location = psp.location;
      row.eigenvalues = psp.eigenvalues;
      row.classification = psp.classification;
      guess_v = psp.location.v; // warm start for the next G
      guess_x = psp.location.x;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

} // namespace mtsb
