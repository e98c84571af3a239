#include "mtsb/normalform.hpp"

#include "mtsb/geometry.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace mtsb {

namespace {

// ---- Finite-difference stencils (Richardson-extrapolated) -----------------
// Step sizes scale with both the derivative order and the magnitude of the
// unshifted base coordinate: higher-order stencils need larger steps to stay
// above rounding noise in double precision.

double step1(double base) { return std::max(1e-6, 1e-6 * std::fabs(base)); }
double step2(double base) { return std::max(1e-4, 1e-4 * std::fabs(base)); }
double step3(double base) { return std::max(1e-3, 1e-3 * std::fabs(base)); }

template <typename F>
double fd1(const F& f, double h) {
  auto d = [&](double hh) { return (f(hh) - f(-hh)) / (2.0 * hh); };
  return (4.0 * d(h / 2.0) - d(h)) / 3.0;
}

template <typename F>
double fd2(const F& f, double h) {
  const double f0 = f(0.0);
  auto d = [&](double hh) { return (f(hh) - 2.0 * f0 + f(-hh)) / (hh * hh); };
  return (4.0 * d(h / 2.0) - d(h)) / 3.0;
}

template <typename F2>
double fd2_mixed(const F2& f, double h, double k) {
  auto d = [&](double hh, double kk) {
    return (f(hh, kk) - f(hh, -kk) - f(-hh, kk) + f(-hh, -kk)) /
           (4.0 * hh * kk);
  };
  return (4.0 * d(h / 2.0, k / 2.0) - d(h, k)) / 3.0;
}

template <typename F>
double fd3(const F& f, double h) {
  auto d = [&](double hh) {
    return (f(2.0 * hh) - 2.0 * f(hh) + 2.0 * f(-hh) - f(-2.0 * hh)) /
           (2.0 * hh * hh * hh);
  };
  return (4.0 * d(h / 2.0) - d(h)) / 3.0;
}

double rel_diff(double a, double b) {
  const double m = std::max({std::fabs(a), std::fabs(b), 1e-300});
  return std::fabs(a - b) / m;
}

} // namespace

PartialBundle compute_partials_fd(const PspPoint& psp, const CellParams& p) {
  const CellState o = psp.location;
  auto hat_h = [&](double dv, double dx, double dy) {
    const CellState s{o.v + dv, gate_Y(o.v + dv, p), o.x + dx, o.y + dy, o.z};
    return h1(s, p);
  };
  auto h1_of_u = [&](double du) {
    const CellState s{o.v, o.u + du, o.x, o.y, o.z};
    return h1(s, p);
  };
  auto hat_f = [&](double dv, double dx, double dz) {
    const CellState s{o.v + dv, o.u, o.x + dx, o.y, o.z + dz};
    return f(s, p);
  };
  auto hat_g1 = [&](double dx, double dy) {
    const CellState s{o.v, o.u, o.x + dx, o.y + dy, o.z};
    return g1(s, p);
  };
  auto hat_g2 = [&](double dx, double dz) {
    const CellState s{o.v, o.u, o.x + dx, o.y, o.z + dz};
    return g2(s, p);
  };

  const double h1v = step1(o.v), h2v = step2(o.v), h3v = step3(o.v);
  const double h1x = step1(o.x), h2x = step2(o.x), h3x = step3(o.x);
  const double h1y = step1(o.y), h2y = step2(o.y);
  const double h1z = step1(o.z);

  PartialBundle b;
  b.h_v = fd1([&](double t) { return hat_h(t, 0, 0); }, h1v);
  b.h_u = fd1(h1_of_u, step1(o.u));
  b.h_x = fd1([&](double t) { return hat_h(0, t, 0); }, h1x);
  b.h_y = fd1([&](double t) { return hat_h(0, 0, t); }, h1y);
  b.h_vv = fd2([&](double t) { return hat_h(t, 0, 0); }, h2v);
  b.h_vx = fd2_mixed([&](double a, double c) { return hat_h(a, c, 0); }, h2v,
                     h2x);
  b.h_vy = fd2_mixed([&](double a, double c) { return hat_h(a, 0, c); }, h2v,
                     h2y);
  b.h_xx = fd2([&](double t) { return hat_h(0, t, 0); }, h2x);
  b.h_vvv = fd3([&](double t) { return hat_h(t, 0, 0); }, h3v);
  b.h_xxx = fd3([&](double t) { return hat_h(0, t, 0); }, h3x);
  b.f_v = fd1([&](double t) { return hat_f(t, 0, 0); }, h1v);
  b.f_x = fd1([&](double t) { return hat_f(0, t, 0); }, h1x);
  b.f_z = fd1([&](double t) { return hat_f(0, 0, t); }, h1z);
  b.f_vv = fd2([&](double t) { return hat_f(t, 0, 0); }, h2v);
  b.f_vvv = fd3([&](double t) { return hat_f(t, 0, 0); }, h3v);
  b.g1_0 = hat_g1(0, 0);
  b.g1_x = fd1([&](double t) { return hat_g1(t, 0); }, h1x);
  b.g1_y = fd1([&](double t) { return hat_g1(0, t); }, h1y);
  b.g1_xx = fd2([&](double t) { return hat_g1(t, 0); }, h2x);
  b.g1_xxx = fd3([&](double t) { return hat_g1(t, 0); }, h3x);
  b.g2_0 = hat_g2(0, 0);
  b.g2_x = fd1([&](double t) { return hat_g2(t, 0); }, h1x);
  b.g2_z = fd1([&](double t) { return hat_g2(0, t); }, h1z);
  return b;
}

PartialBundle compute_partials(const PspPoint& psp, const CellParams& p) {
  const CellState o = psp.location;
  if (!(o.x > 0.0))
    throw std::domain_error("partials require x > 0 at the base point");

  PartialBundle b;
  const double X0 = gate_X(o.v, p);
  const double X1 = gate_X_d(o.v, p, 1);
  const double X2 = gate_X_d(o.v, p, 2);
  const double X3 = gate_X_d(o.v, p, 3);
  const double Y1 = gate_Y_d(o.v, p, 1);
  const double Y2 = gate_Y_d(o.v, p, 2);
  const double Y3 = gate_Y_d(o.v, p, 3);
  const double U1 = gate_U_d(o.x, p, 1);
  const double U2 = gate_U_d(o.x, p, 2);
  const double U3 = gate_U_d(o.x, p, 3);
  const double dv6 = o.v - p.a6;

  // Unreduced voltage partials; the u-slaved (chain-rule) corrections follow.
  const double h1_v =
      -(p.a1 * (X1 * (o.v - p.a2) + X0) +
        (p.a3 * o.u + p.a4 * gate_U(o.x, p) + p.a5 * o.y));
  const double h1_u = -p.a3 * dv6;
  const double h1_vv = -p.a1 * (X2 * (o.v - p.a2) + 2.0 * X1);
  const double h1_vvv = -p.a1 * (X3 * (o.v - p.a2) + 3.0 * X2);

  b.h_v = h1_v + h1_u * Y1;
  b.h_u = h1_u;
  b.h_x = -p.a4 * U1 * dv6;
  b.h_y = -p.a5 * dv6;
  b.h_vv = h1_vv - 2.0 * p.a3 * Y1 + h1_u * Y2;
  b.h_vx = -p.a4 * U1;
  b.h_vy = -p.a5;
  b.h_xx = -p.a4 * U2 * dv6;
  b.h_vvv = h1_vvv - 3.0 * p.a3 * Y2 + h1_u * Y3;
  b.h_xxx = -p.a4 * U3 * dv6;

  b.f_v = -p.d1 * (X1 * (o.v - p.a2) + X0);
  b.f_x = -p.d2;
  b.f_z = p.d3;
  b.f_vv = -p.d1 * (X2 * (o.v - p.a2) + 2.0 * X1);
  b.f_vvv = -p.d1 * (X3 * (o.v - p.a2) + 3.0 * X2);

  b.g1_0 = gate_Z(o.x, p) - o.y;
  b.g1_x = gate_Z_d(o.x, p, 1);
  b.g1_y = -1.0;
  b.g1_xx = gate_Z_d(o.x, p, 2);
  b.g1_xxx = gate_Z_d(o.x, p, 3);

  b.g2_0 = p.k1 * o.x - p.k2 * o.z;
  b.g2_x = p.k1;
  b.g2_z = -p.k2;

  // Mandatory cross-check against finite differences.
  const PartialBundle fd = compute_partials_fd(psp, p);
  struct Check {
    const char* name;
    double analytic, numeric, tol;
  };
  const Check checks[] = {
      {"h_v", b.h_v, fd.h_v, 1e-4},       {"h_u", b.h_u, fd.h_u, 1e-4},
      {"h_x", b.h_x, fd.h_x, 1e-4},       {"h_y", b.h_y, fd.h_y, 1e-4},
      {"h_vv", b.h_vv, fd.h_vv, 1e-4},    {"h_vx", b.h_vx, fd.h_vx, 1e-4},
      {"h_vy", b.h_vy, fd.h_vy, 1e-4},    {"h_xx", b.h_xx, fd.h_xx, 1e-4},
      {"h_vvv", b.h_vvv, fd.h_vvv, 1e-2}, {"h_xxx", b.h_xxx, fd.h_xxx, 1e-2},
      {"f_v", b.f_v, fd.f_v, 1e-4},       {"f_x", b.f_x, fd.f_x, 1e-4},
      {"f_z", b.f_z, fd.f_z, 1e-4},       {"f_vv", b.f_vv, fd.f_vv, 1e-4},
      {"f_vvv", b.f_vvv, fd.f_vvv, 1e-2}, {"g1_x", b.g1_x, fd.g1_x, 1e-4},
      {"g1_y", b.g1_y, fd.g1_y, 1e-4},    {"g1_xx", b.g1_xx, fd.g1_xx, 1e-4},
      {"g1_xxx", b.g1_xxx, fd.g1_xxx, 1e-2},
      {"g2_x", b.g2_x, fd.g2_x, 1e-4},    {"g2_z", b.g2_z, fd.g2_z, 1e-4},
  };
  for (const auto& c : checks) {
    if (rel_diff(c.analytic, c.numeric) > c.tol) {
      std::ostringstream msg;
      msg << "partial-derivative cross-check failed for " << c.name
          << ": analytic " << c.analytic << " vs finite-difference "
          << c.numeric;
      throw std::runtime_error(msg.str());
    }
  }
  return b;
}

NormalFormCoeffs coeffs(const PartialBundle& b) {
  auto guard = [](double value, const char* name) {
    if (value == 0.0 || !std::isfinite(value))
      throw std::domain_error(
          std::string("normal-form coefficients undefined: ") + name +
          " vanishes (non-degeneracy violated)");
  };
  guard(b.h_vv, "h_vv");
  guard(b.h_x, "h_x");
  guard(b.g2_0, "g2(0)");

  NormalFormCoeffs c;
  c.H_XX = b.h_xx / (b.h_vv * b.h_x * b.h_x);
  c.H_VX = -2.0 * b.h_vx / (b.h_vv * b.h_x);
  c.H_VY = 2.0 * b.h_vy / (b.h_vv * b.h_y);
  c.H_VVV = 2.0 * b.h_vvv / (3.0 * b.h_vv * b.h_vv);
  c.H_XXX =
      -2.0 * b.h_xxx / (3.0 * b.h_vv * b.h_vv * b.h_x * b.h_x * b.h_x);
  c.F_V = -b.h_x * b.f_v;
  c.F_X = b.f_x;
  // Back-transformed z-coupling of the calcium equation; the scale factor
  // (h_vv*h_x/2) multiplies, it does not divide (dimensional consistency
  // with F_VV and the bounded chart dynamics both require this form).
  c.F_Z = -(b.h_vv * b.h_x / 2.0) * b.f_z * b.g2_0;
  c.F_VV = -b.h_x * b.f_vv / b.h_vv;
  c.F_VVV = -2.0 * b.h_x * b.f_vvv / (3.0 * b.h_vv * b.h_vv);
  c.G_10 = b.h_vv * b.h_y * b.g1_0 / 2.0;
  c.G_1X = -b.h_y * b.g1_x / b.h_x;
  c.G_1Y = b.g1_y;
  c.G_1XX = b.h_y * b.g1_xx / (b.h_vv * b.h_x * b.h_x);
  c.G_1XXX =
      -2.0 * b.h_y * b.g1_xxx / (3.0 * b.h_vv * b.h_vv * b.h_x * b.h_x * b.h_x);
  c.G_2X = -2.0 * b.g2_x / (b.h_vv * b.h_x * b.g2_0);
  c.G_2Z = b.g2_z;

  c.b1 = c.F_V;
  c.b2 = c.F_Z;
  c.b3 = c.F_X;
  c.b4 = -c.G_1X;
  c.b5 = c.G_1Y;
  c.lambda = -c.G_10;

  for (double v : {c.H_XX, c.H_VX, c.H_VY, c.H_VVV, c.H_XXX, c.F_V, c.F_X,
                   c.F_Z, c.F_VV, c.F_VVV, c.G_10, c.G_1X, c.G_1Y, c.G_1XX,
                   c.G_1XXX, c.G_2X, c.G_2Z})
    if (!std::isfinite(v))
      throw std::domain_error("normal-form coefficient overflow");
  return c;
}

const std::vector<std::string>& coeff_names() {
  static const std::vector<std::string> names = {
      "H_XX", "H_VX",  "H_VY",  "H_VVV", "H_XXX", "F_V",  "F_X",  "F_Z",
      "F_VV", "F_VVV", "G_10",  "G_1X",  "G_1Y",  "G_1XX", "G_1XXX",
      "G_2X", "G_2Z",  "b1",    "b2",    "b3",    "b4",    "b5",   "lambda"};
  return names;
}

double coeff_value(const NormalFormCoeffs& c, const std::string& name) {
  if (name == "H_XX") return c.H_XX;
  if (name == "H_VX") return c.H_VX;
  if (name == "H_VY") return c.H_VY;
  if (name == "H_VVV") return c.H_VVV;
  if (name == "H_XXX") return c.H_XXX;
  if (name == "F_V") return c.F_V;
  if (name == "F_X") return c.F_X;
  if (name == "F_Z") return c.F_Z;
  if (name == "F_VV") return c.F_VV;
  if (name == "F_VVV") return c.F_VVV;
  if (name == "G_10") return c.G_10;
  if (name == "G_1X") return c.G_1X;
  if (name == "G_1Y") return c.G_1Y;
  if (name == "G_1XX") return c.G_1XX;
  if (name == "G_1XXX") return c.G_1XXX;
  if (name == "G_2X") return c.G_2X;
  if (name == "G_2Z") return c.G_2Z;
  if (name == "b1") return c.b1;
  if (name == "b2") return c.b2;
  if (name == "b3") return c.b3;
  if (name == "b4") return c.b4;
  if (name == "b5") return c.b5;
  if (name == "lambda") return c.lambda;
  throw std::invalid_argument("unknown coefficient name: " + name);
}

std::array<double, 4> k3_rhs(const ChartK3State& s, const NormalFormCoeffs& c) {
  const double r = s.r3;
  const double v3 = s.v3, x3 = s.x3, y3 = s.y3, z3 = s.z3;
  const double dv3 =
      -x3 + v3 * v3 +
      r * (r * y3 + r * c.H_XX * x3 * x3 + c.H_VX * v3 * x3 +
           r * r * c.H_VY * v3 * y3 + c.H_VVV * v3 * v3 * v3 +
           r * r * r * c.H_XXX * x3 * x3 * x3);
  const double dx3 =
      c.b1 * v3 + r * (c.b2 * z3 + c.b3 * x3 + c.F_VV * v3 * v3 +
                       r * c.F_VVV * v3 * v3 * v3);
  const double dy3 =
      s.delta3 * (-s.lambda3 - c.b4 * x3 +
                  r * r * (-c.b5 * y3 + c.G_1XX * x3 * x3 +
                           r * r * c.G_1XXX * x3 * x3 * x3));
  const double dz3 = s.delta3 * (1.0 + r * r * (c.G_2X * x3 + c.G_2Z * z3));
  return {dv3, dx3, dy3, dz3};
}

ChartK3State special_solution(const NormalFormCoeffs& c, double delta3,
                              double lambda3, double z30, double t3) {
  ChartK3State s;
  s.r3 = 0.0;
  s.delta3 = delta3;
  s.lambda3 = lambda3;
  s.v3 = c.b1 / 2.0 * t3;
  s.x3 = c.b1 * c.b1 / 4.0 * t3 * t3 - c.b1 / 2.0;
  s.y3 = delta3 * ((c.b1 * c.b4 / 2.0 - lambda3) * t3 -
                   c.b1 * c.b1 * c.b4 / 12.0 * t3 * t3 * t3);
  s.z3 = delta3 * t3 + z30;
  return s;
}

BlowupComparison compare_blowup(const NormalFormCoeffs& c, double delta3,
                                double lambda3,
                                const std::vector<double>& r3_values,
                                double t3_from, double t3_to, double ic_offset,
                                double z30, double sample_dt3) {
  constexpr double kEscape = 50.0;
  BlowupComparison cmp;
  cmp.coeffs = c;
  cmp.delta3 = delta3;
  cmp.lambda3 = lambda3;
  cmp.z30 = z30;
  cmp.t3_from = t3_from;
  cmp.t3_to = t3_to;

  for (double r3 : r3_values) {
    BlowupRun run;
    run.r3 = r3;
    run.escape_t3 = std::numeric_limits<double>::quiet_NaN();

    const ChartK3State ic = special_solution(c, delta3, lambda3, z30, t3_from);
    std::vector<double> y0 = {ic.v3, ic.x3 + ic_offset, ic.y3, ic.z3};
    ChartK3State work = ic;
    work.r3 = r3;
    Rhs rhs = [&c, work](double, const double* y, double* dy) mutable {
      work.v3 = y[0];
      work.x3 = y[1];
      work.y3 = y[2];
      work.z3 = y[3];
      const auto d = k3_rhs(work, c);
      dy[0] = d[0];
      dy[1] = d[1];
      dy[2] = d[2];
      dy[3] = d[3];
    };

    IntegratorConfig cfg;
    cfg.rtol = 1e-10;
    cfg.atol = 1e-16;
    cfg.h_max = 1.0;

    double last_recorded = -std::numeric_limits<double>::infinity();
    bool escaped = false;
    int minima = 0;
    auto record = [&](double t, const double* y) {
      run.t3.push_back(t);
      ChartK3State ps;
      ps.v3 = y[0];
      ps.x3 = y[1];
      ps.y3 = y[2];
      ps.z3 = y[3];
      ps.r3 = r3;
      ps.delta3 = delta3;
      ps.lambda3 = lambda3;
      run.perturbed.push_back(ps);
      run.special.push_back(special_solution(c, delta3, lambda3, z30, t));
      last_recorded = t;
    };

    Observer obs = [&](const StepView& s) {
      if (run.t3.empty()) record(s.t0, s.y0);
      // Direction reversals of v3 before escape: maxima count as
      // oscillations; a reversal of either sense is a turning event.
      if (!escaped && s.f0[0] > 0.0 && s.f1[0] <= 0.0) ++run.oscillations;
      if (!escaped && s.f0[0] < 0.0 && s.f1[0] >= 0.0) ++minima;
      const bool out = std::fabs(s.y1[0]) >= kEscape;
      if (out && !escaped) {
        escaped = true;
        // Localize the escape time on the step by bisection on |v3|.
        double lo = s.t0, hi = s.t1;
        for (int it = 0; it < 100 && hi - lo > 1e-9; ++it) {
          const double mid = 0.5 * (lo + hi);
          (std::fabs(s.eval(mid, 0)) >= kEscape ? hi : lo) = mid;
        }
        run.escape_t3 = hi;
      }
      if (s.t1 - last_recorded >= sample_dt3 || out || s.t1 >= t3_to)
        record(s.t1, s.y1);
      return !out;
    };

    try {
      integrate_observed(rhs, y0, t3_from, t3_to, cfg, obs);
      run.completed = true;
    } catch (const std::exception& e) {
      run.completed = false;
      run.error = e.what();
    }
    run.turned = run.oscillations + minima >= 1;
    cmp.runs.push_back(std::move(run));
  }
  return cmp;
}

ChartScaling chart_scaling(double eps, const PartialBundle& b) {
  if (!(eps > 0.0))
    throw std::domain_error("chart scaling requires eps > 0");
  ChartScaling s;
  s.r3 = std::sqrt(eps);
  const double r = s.r3;
  s.fac_v = 2.0 * r / b.h_vv;
  s.fac_x = -2.0 * r * r / (b.h_vv * b.h_x);
  s.fac_y = 2.0 * r * r * r * r / (b.h_vv * b.h_y);
  s.fac_z = b.g2_0 * r * r;
  s.fac_t = 1.0 / r;
  return s;
}

std::array<double, 4> from_chart(const ChartScaling& s,
                                 const std::array<double, 4>& k3_state) {
  return {s.fac_v * k3_state[0], s.fac_x * k3_state[1], s.fac_y * k3_state[2],
          s.fac_z * k3_state[3]};
}

std::array<double, 4> to_chart(const ChartScaling& s,
                               const std::array<double, 4>& shifted_state) {
  return {shifted_state[0] / s.fac_v, shifted_state[1] / s.fac_x,
          shifted_state[2] / s.fac_y, shifted_state[3] / s.fac_z};
}

} // namespace mtsb
