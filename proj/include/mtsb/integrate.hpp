#pragma once

// Adaptive explicit Runge-Kutta integration (Dormand-Prince 5(4)) with
// dense output, streaming observation, and refined event detection.

#include <cstddef>
#include <functional>
#include <vector>

namespace mtsb {

/// Right-hand side callback: fills dydt[0..dim) from t and y[0..dim).
using Rhs = std::function<void(double t, const double* y, double* dydt)>;

struct IntegratorConfig {
  double rtol = 1e-8;        ///< relative tolerance
  double atol = 1e-10;       ///< absolute tolerance
  double h_init = 0.0;       ///< initial step (ms); 0 selects automatically
  double h_max = 1.0;        ///< step-size ceiling (ms)
  long long max_steps = 200'000'000; ///< accepted-step budget before error
  double event_tol = 1e-6;   ///< event-time refinement tolerance (ms)
};

/// One accepted step, exposed to observers. Values inside the step are
/// obtained by cubic Hermite interpolation on (y0, f0, y1, f1).
struct StepView {
  double t0 = 0.0, t1 = 0.0;
  const double* y0 = nullptr;
  const double* f0 = nullptr;
  const double* y1 = nullptr;
  const double* f1 = nullptr;
  std::size_t dim = 0;

  /// Interpolates component c at time t in [t0, t1].
  double eval(double t, std::size_t c) const;
};

/// Called after every accepted step; return false to stop the integration
/// early (the final state is then the step's right endpoint).
using Observer = std::function<bool(const StepView&)>;

/// A stored solution: node times plus states and derivatives at the nodes.
/// Evaluation between nodes uses the same cubic Hermite rule as StepView,
/// so stored and streamed results agree exactly.
struct Trajectory {
  std::size_t dim = 0;
  std::vector<double> times;   ///< node times, strictly increasing
  std::vector<double> states;  ///< times.size() * dim, node states
  std::vector<double> derivs;  ///< times.size() * dim, rhs at nodes

  std::size_t size() const { return times.size(); }
  const double* state(std::size_t i) const { return states.data() + i * dim; }
  const double* deriv(std::size_t i) const { return derivs.data() + i * dim; }

  /// Interpolates component c at time t (clamped to the node range).
  double eval(double t, std::size_t c) const;
  /// Interpolates the full state at time t into out[0..dim).
  void eval_state(double t, double* out) const;
};

/// Integrates y' = rhs(t, y) from (t0, y0) to t1, storing every accepted
/// step as a trajectory node. Throws std::runtime_error if the step size
/// underflows or the step budget is exhausted.
Trajectory integrate(const Rhs& rhs, const std::vector<double>& y0, double t0,
                     double t1, const IntegratorConfig& cfg);

/// Integrates as above but stores only nodes at (approximately) record_dt
/// spacing: each accepted step is offered to the observer, and a node is
/// recorded whenever at least record_dt has elapsed since the last recorded
/// node (endpoints always recorded). record_dt <= 0 stores every step.
Trajectory integrate_sampled(const Rhs& rhs, const std::vector<double>& y0,
                             double t0, double t1, const IntegratorConfig& cfg,
                             double record_dt, const Observer& observer = {});

/// Integrates without storing; observers see every accepted step. Returns the
/// final state (at t1, or at the right end of the step where the observer
/// stopped the run).
std::vector<double> integrate_observed(const Rhs& rhs,
                                       const std::vector<double>& y0,
                                       double t0, double t1,
                                       const IntegratorConfig& cfg,
                                       const Observer& observer);

/// A detected level crossing of one state component.
struct CrossingEvent {
  double t = 0.0;              ///< refined event time
  std::vector<double> state;   ///< interpolated state at the event
  int direction = 0;           ///< +1 upward, -1 downward
};

/// Scans a trajectory for crossings of component c through `level`.
/// direction: +1 keeps upward crossings (value passes from below to >= level),
/// -1 downward, 0 both. Event times are refined by bisection on the dense
/// interpolant to within event_tol; events are reported strictly after the
/// first node. A crossing is detected per sign change between adjacent nodes.
std::vector<CrossingEvent> detect_crossings(const Trajectory& traj,
                                            std::size_t c, double level,
                                            int direction, double event_tol);

/// Streaming counterpart of detect_crossings: feed accepted steps, collect
/// events. Used where whole trajectories would be too large to store.
class CrossingDetector {
 public:
  CrossingDetector(std::size_t component, double level, int direction,
                   double event_tol)
      : c_(component), level_(level), dir_(direction), tol_(event_tol) {}

  /// Inspects one accepted step; appends any crossing to events().
  void observe(const StepView& s);
  const std::vector<CrossingEvent>& events() const { return events_; }
  std::vector<CrossingEvent>& events() { return events_; }

 private:
  std::size_t c_;
  double level_;
  int dir_;
  double tol_;
  std::vector<CrossingEvent> events_;
};

} // namespace mtsb
