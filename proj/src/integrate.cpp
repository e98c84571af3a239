#include "mtsb/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace mtsb {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 0.2, c3 = 0.3, c4 = 0.8, c5 = 8.0 / 9.0;
constexpr double a21 = 0.2;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0,
                 a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0,
                 a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                 a65 = -5103.0 / 18656.0;
constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0,
                 a74 = 125.0 / 192.0, a75 = -2187.0 / 6784.0,
                 a76 = 11.0 / 84.0;
// Difference between the 5th- and embedded 4th-order weights.
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0,
                 e4 = 71.0 / 1920.0, e5 = -17253.0 / 339200.0,
                 e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;

// Step-size controller constants (Lund-stabilized I-controller).
constexpr double kSafe = 0.9;
constexpr double kBeta = 0.04;
constexpr double kExpo1 = 0.2 - kBeta * 0.75;
constexpr double kFacMin = 0.2;  // max shrink factor per step: h *= 0.2
constexpr double kFacMax = 10.0; // max growth factor per step: h *= 10

double hermite(double t, double t0, double t1, double y0, double f0, double y1,
               double f1) {
  const double dt = t1 - t0;
  if (dt <= 0.0) return y1;
  const double th = std::clamp((t - t0) / dt, 0.0, 1.0);
  const double th2 = th * th;
  const double th3 = th2 * th;
  const double h00 = 2.0 * th3 - 3.0 * th2 + 1.0;
  const double h10 = th3 - 2.0 * th2 + th;
  const double h01 = -2.0 * th3 + 3.0 * th2;
  const double h11 = th3 - th2;
  return h00 * y0 + h10 * dt * f0 + h01 * y1 + h11 * dt * f1;
}

/// Classic automatic initial-step heuristic for explicit RK of order 5.
double initial_step(const Rhs& rhs, double t0, const std::vector<double>& y0,
                    const std::vector<double>& f0, double t1,
                    const IntegratorConfig& cfg) {
  const std::size_t n = y0.size();
  double dnf = 0.0, dny = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double sk = cfg.atol + cfg.rtol * std::fabs(y0[i]);
    dnf += (f0[i] / sk) * (f0[i] / sk);
    dny += (y0[i] / sk) * (y0[i] / sk);
  }
  double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6
                                            : std::sqrt(dny / dnf) * 0.01;
  h = std::min({h, cfg.h_max, t1 - t0});
  // One explicit Euler probe to estimate the second derivative scale.
  std::vector<double> y1(n), f1(n);
  for (std::size_t i = 0; i < n; ++i) y1[i] = y0[i] + h * f0[i];
  rhs(t0 + h, y1.data(), f1.data());
  double der2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double sk = cfg.atol + cfg.rtol * std::fabs(y0[i]);
    der2 += ((f1[i] - f0[i]) / sk) * ((f1[i] - f0[i]) / sk);
  }
  der2 = std::sqrt(der2) / h;
  const double der12 = std::max(der2, std::sqrt(dnf));
  double h1 = (der12 <= 1e-15) ? std::max(1e-6, h * 1e-3)
                               : std::pow(0.01 / der12, 0.2);
  return std::min({100.0 * h, h1, cfg.h_max, t1 - t0});
}

/// Core stepper: advances y from t0 to t1, invoking cb after every accepted
/// step. Returns early if cb returns false. y and f hold the final state and
/// derivative on return.
void integrate_core(const Rhs& rhs, std::vector<double>& y,
                    std::vector<double>& fy, double t0, double t1,
                    const IntegratorConfig& cfg,
                    const std::function<bool(const StepView&)>& cb) {
  if (!(t1 >= t0))
    throw std::invalid_argument("integration requires t1 >= t0");
  if (!(cfg.rtol > 0.0) || !(cfg.atol > 0.0))
    throw std::invalid_argument("tolerances must be positive");
  if (!(cfg.h_max > 0.0))
    throw std::invalid_argument("h_max must be positive");

  const std::size_t n = y.size();
  fy.resize(n);
  rhs(t0, y.data(), fy.data());
  if (t1 == t0) return;

  std::vector<double> k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n),
      ynew(n);
  double t = t0;
  double h = (cfg.h_init > 0.0)
                 ? std::min({cfg.h_init, cfg.h_max, t1 - t0})
                 : initial_step(rhs, t0, y, fy, t1, cfg);
  double facold = 1e-4;
  long long accepted = 0, total = 0;

  while (t < t1) {
    if (total++ > 10 * cfg.max_steps || accepted > cfg.max_steps)
      throw std::runtime_error("step budget exhausted at t = " +
                               std::to_string(t));
    if (h < 16.0 * std::numeric_limits<double>::epsilon() * std::fabs(t) +
                std::numeric_limits<double>::min())
      throw std::runtime_error("step size underflow at t = " +
                               std::to_string(t));
    bool last = false;
    if (t + h >= t1) {
      h = t1 - t;
      last = true;
    }

    for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * a21 * fy[i];
    rhs(t + c2 * h, ytmp.data(), k2.data());
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + h * (a31 * fy[i] + a32 * k2[i]);
    rhs(t + c3 * h, ytmp.data(), k3.data());
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + h * (a41 * fy[i] + a42 * k2[i] + a43 * k3[i]);
    rhs(t + c4 * h, ytmp.data(), k4.data());
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] =
          y[i] + h * (a51 * fy[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    rhs(t + c5 * h, ytmp.data(), k5.data());
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + h * (a61 * fy[i] + a62 * k2[i] + a63 * k3[i] +
                            a64 * k4[i] + a65 * k5[i]);
    rhs(t + h, ytmp.data(), k6.data());
    for (std::size_t i = 0; i < n; ++i)
      ynew[i] = y[i] + h * (a71 * fy[i] + a73 * k3[i] + a74 * k4[i] +
                            a75 * k5[i] + a76 * k6[i]);
    rhs(t + h, ynew.data(), k7.data()); // FSAL: becomes f at the new node

    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double sk =
          cfg.atol + cfg.rtol * std::max(std::fabs(y[i]), std::fabs(ynew[i]));
      const double e = h * (e1 * fy[i] + e3 * k3[i] + e4 * k4[i] +
                            e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      err += (e / sk) * (e / sk);
    }
    err = std::sqrt(err / static_cast<double>(n));

    const double fac11 = std::pow(err, kExpo1);
    if (err <= 1.0) {
      // Accepted.
      facold = std::max(err, 1e-4);
      StepView view{t, t + h, y.data(), fy.data(), ynew.data(), k7.data(), n};
      const bool keep_going = !cb || cb(view);
      t += h;
      y.swap(ynew);
      fy.swap(k7);
      ++accepted;
      if (!keep_going) return;
      if (last || t >= t1) return;
      double fac = fac11 / std::pow(facold, kBeta);
      fac = std::max(1.0 / kFacMax, std::min(1.0 / kFacMin, fac / kSafe));
      h = std::min(h / fac, cfg.h_max);
    } else {
      // Rejected: shrink and retry.
      h /= std::min(1.0 / kFacMin, fac11 / kSafe);
    }
  }
}

int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

/// Refines a bracketed crossing of the step interpolant to within tol and
/// appends the event. s0 must be strictly on the opposite side of the level.
void refine_crossing(const StepView& s, std::size_t c, double level,
                     int direction, double tol,
                     std::vector<CrossingEvent>& out) {
  double lo = s.t0, hi = s.t1;
  for (int it = 0; it < 200 && (hi - lo) > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double g = s.eval(mid, c) - level;
    if (sign_of(g) == -direction && g != 0.0)
      lo = mid;
    else
      hi = mid;
  }
  CrossingEvent ev;
  ev.t = hi;
  ev.direction = direction;
  ev.state.resize(s.dim);
  for (std::size_t i = 0; i < s.dim; ++i) ev.state[i] = s.eval(hi, i);
  out.push_back(std::move(ev));
}

void scan_step_for_crossings(const StepView& s, std::size_t c, double level,
                             int direction, double tol,
                             std::vector<CrossingEvent>& out) {
  const double s0 = s.y0[c] - level;
  const double s1 = s.y1[c] - level;
  if ((direction >= 0) && s0 < 0.0 && s1 >= 0.0)
    refine_crossing(s, c, level, +1, tol, out);
  if ((direction <= 0) && s0 > 0.0 && s1 <= 0.0)
    refine_crossing(s, c, level, -1, tol, out);
}

} // namespace

double StepView::eval(double t, std::size_t c) const {
  return hermite(t, t0, t1, y0[c], f0[c], y1[c], f1[c]);
}

double Trajectory::eval(double t, std::size_t c) const {
  if (times.empty()) throw std::runtime_error("empty trajectory");
  if (times.size() == 1 || t <= times.front()) return state(0)[c];
  if (t >= times.back()) return state(size() - 1)[c];
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const std::size_t i = static_cast<std::size_t>(it - times.begin()) - 1;
  return hermite(t, times[i], times[i + 1], state(i)[c], deriv(i)[c],
                 state(i + 1)[c], deriv(i + 1)[c]);
}

void Trajectory::eval_state(double t, double* out) const {
  for (std::size_t c = 0; c < dim; ++c) out[c] = eval(t, c);
}

Trajectory integrate(const Rhs& rhs, const std::vector<double>& y0, double t0,
                     double t1, const IntegratorConfig& cfg) {
  return integrate_sampled(rhs, y0, t0, t1, cfg, 0.0, {});
}

Trajectory integrate_sampled(const Rhs& rhs, const std::vector<double>& y0,
                             double t0, double t1, const IntegratorConfig& cfg,
                             double record_dt, const Observer& observer) {
  Trajectory traj;
  traj.dim = y0.size();
  std::vector<double> y = y0, fy;
  auto record = [&](double t, const double* yv, const double* fv) {
    traj.times.push_back(t);
    traj.states.insert(traj.states.end(), yv, yv + traj.dim);
    traj.derivs.insert(traj.derivs.end(), fv, fv + traj.dim);
  };
  bool first = true;
  integrate_core(
      rhs, y, fy, t0, t1, cfg, [&](const StepView& s) {
        if (first) {
          record(s.t0, s.y0, s.f0);
          first = false;
        }
        const bool keep_going = !observer || observer(s);
        if (record_dt <= 0.0 || s.t1 - traj.times.back() >= record_dt ||
            s.t1 >= t1 || !keep_going)
          record(s.t1, s.y1, s.f1);
        return keep_going;
      });
  if (first) record(t0, y.data(), fy.data()); // zero-length integration
  return traj;
}

std::vector<double> integrate_observed(const Rhs& rhs,
                                       const std::vector<double>& y0,
                                       double t0, double t1,
                                       const IntegratorConfig& cfg,
                                       const Observer& observer) {
  std::vector<double> y = y0, fy;
  integrate_core(rhs, y, fy, t0, t1, cfg, observer);
  return y;
}

std::vector<CrossingEvent> detect_crossings(const Trajectory& traj,
                                            std::size_t c, double level,
                                            int direction, double event_tol) {
  std::vector<CrossingEvent> events;
  for (std::size_t i = 0; i + 1 < traj.size(); ++i) {
    StepView s{traj.times[i], traj.times[i + 1], traj.state(i),
               traj.deriv(i),  traj.state(i + 1),  traj.deriv(i + 1),
               traj.dim};
    scan_step_for_crossings(s, c, level, direction, event_tol, events);
  }
  return events;
}

void CrossingDetector::observe(const StepView& s) {
  scan_step_for_crossings(s, c_, level_, dir_, tol_, events_);
}

} // namespace mtsb
