#include "mtsb/network.hpp"

#include "mtsb/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace mtsb {

double k_from_conductance(double g_c_ps, double c_v_ff) {
  if (g_c_ps < 0.0)
    throw std::invalid_argument("k_from_conductance: g_c must be >= 0");
  if (!(c_v_ff > 0.0))
    throw std::invalid_argument("k_from_conductance: c_v must be positive");
  return g_c_ps / c_v_ff;
}

namespace {

Rhs make_network_rhs(const NetworkParams& np) {
  return [np](double, const double* y, double* dy) {
    rhs_network(y, dy, np);
  };
}

std::vector<double> flat_ics(const NetworkParams& np,
                             const std::vector<CellState>& ics) {
  if (ics.size() != np.size())
    throw std::invalid_argument(
        "network initial conditions: one state per cell required");
  std::vector<double> y0(5 * np.size());
  for (std::size_t i = 0; i < ics.size(); ++i) {
    const auto a = ics[i].to_array();
    std::copy(a.begin(), a.end(), y0.begin() + 5 * i);
  }
  return y0;
}

double mean_tail_interval_min(const std::vector<double>& times) {
  const std::size_t n = times.size();
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t m = std::min<std::size_t>(6, n);
  return (times[n - 1] - times[n - m]) / double(m - 1) / 60000.0;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace

std::vector<Trajectory> simulate_network(const NetworkParams& np,
                                         const std::vector<CellState>& ics,
                                         double t0, double t1,
                                         const IntegratorConfig& cfg,
                                         double record_dt) {
  np.validate();
  const std::vector<double> y0 = flat_ics(np, ics);
  const Rhs rhs = make_network_rhs(np);

  double reached = t0;
  Observer track = [&](const StepView& s) {
    reached = s.t1;
    return true;
  };
  Trajectory all;
  try {
    all = integrate_sampled(rhs, y0, t0, t1, cfg, record_dt, track);
  } catch (const std::exception& e) {
    std::ostringstream msg;
    msg << "network integration failed (reached t = " << reached
        << " ms): " << e.what();
    throw std::runtime_error(msg.str());
  }

  std::vector<Trajectory> cells(np.size());
  const std::size_t nodes = all.size();
  for (std::size_t c = 0; c < np.size(); ++c) {
    Trajectory& tr = cells[c];
    tr.dim = 5;
    tr.times = all.times;
    tr.states.resize(nodes * 5);
    tr.derivs.resize(nodes * 5);
    for (std::size_t i = 0; i < nodes; ++i)
      for (std::size_t j = 0; j < 5; ++j) {
        tr.states[i * 5 + j] = all.states[i * all.dim + 5 * c + j];
        tr.derivs[i * 5 + j] = all.derivs[i * all.dim + 5 * c + j];
      }
  }
  return cells;
}

std::vector<double> burst_onsets(const Trajectory& traj, double section_v) {
  if (traj.dim != 5)
    throw std::invalid_argument("burst_onsets: single-cell trajectory required");
  std::vector<double> out;
  for (const CrossingEvent& e :
       detect_crossings(traj, 0, section_v, +1, 1e-6))
    out.push_back(e.t);
  return out;
}

double sync_metric(const std::vector<std::vector<double>>& onsets,
                   double window_ms) {
  const std::size_t n_cells = onsets.size();
  if (n_cells == 0)
    throw std::invalid_argument("sync_metric: no cells");
  for (std::size_t c = 0; c < n_cells; ++c)
    if (onsets[c].size() < 3) {
      std::ostringstream msg;
      msg << "sync_metric: cell " << c << " has only " << onsets[c].size()
          << " onsets (need at least 3)";
      throw std::invalid_argument(msg.str());
    }
  if (!(window_ms > 0.0))
    throw std::invalid_argument("sync_metric: window must be positive");

  // The time range every cell's record covers; incomplete groups outside it
  // are truncation artifacts of the analysis window, not matching failures.
  double covered_from = -std::numeric_limits<double>::infinity();
  double covered_to = std::numeric_limits<double>::infinity();
  for (const auto& cell : onsets) {
    covered_from = std::max(covered_from, cell.front());
    covered_to = std::min(covered_to, cell.back());
  }

  std::vector<std::size_t> next(n_cells, 0); // first unused onset per cell
  double spread = 0.0;
  bool any_complete = false;
  while (true) {
    // Anchor: the earliest unused onset across all cells.
    std::size_t anchor_cell = n_cells;
    double anchor = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < n_cells; ++c)
      if (next[c] < onsets[c].size() && onsets[c][next[c]] < anchor) {
        anchor = onsets[c][next[c]];
        anchor_cell = c;
      }
    if (anchor_cell == n_cells) break;

    // Greedy group: each cell contributes its first unused onset if that
    // onset lies within the window of the anchor.
    double lo = anchor, hi = anchor;
    std::size_t members = 0;
    for (std::size_t c = 0; c < n_cells; ++c) {
      if (next[c] >= onsets[c].size()) continue;
      const double t = onsets[c][next[c]];
      if (std::fabs(t - anchor) <= window_ms) {
        lo = std::min(lo, t);
        hi = std::max(hi, t);
        ++next[c];
        ++members;
      }
    }
    if (members == n_cells) {
      any_complete = true;
      spread = std::max(spread, hi - lo);
    } else {
      const bool interior =
          anchor >= covered_from - window_ms && anchor <= covered_to + window_ms;
      if (interior) return kSpreadUnmatched;
    }
  }
  return any_complete ? spread : kSpreadUnmatched;
}

SyncReport network_sync_report(const CellParams& base, std::size_t n_cells,
                               std::uint64_t seed, double k, double t_span_ms,
                               double spread_tol_ms, double section_v,
                               const IntegratorConfig* cfg,
                               double transient_ms) {
  base.validate();
  const NetworkParams np = make_heterogeneous(base, n_cells, seed, k);
  const IntegratorConfig config = cfg ? *cfg : IntegratorConfig{};
  const Rhs rhs = make_network_rhs(np);

  const CellState start = default_initial_state(base);
  std::vector<double> y0;
  for (std::size_t i = 0; i < n_cells; ++i) {
    const auto a = start.to_array();
    y0.insert(y0.end(), a.begin(), a.end());
  }

  std::vector<CrossingDetector> detectors;
  detectors.reserve(n_cells);
  for (std::size_t c = 0; c < n_cells; ++c)
    detectors.emplace_back(5 * c, section_v, +1, config.event_tol);
  Observer obs = [&](const StepView& s) {
    if (s.t1 >= transient_ms)
      for (auto& d : detectors) d.observe(s);
    return true;
  };
  integrate_observed(rhs, y0, 0.0, transient_ms + t_span_ms, config, obs);

  SyncReport rep;
  rep.k = k;
  rep.g_c = k * kCellCapacitanceFf;
  rep.onsets.resize(n_cells);
  std::vector<double> intervals;
  for (std::size_t c = 0; c < n_cells; ++c) {
    for (const CrossingEvent& e : detectors[c].events())
      if (e.t >= transient_ms) rep.onsets[c].push_back(e.t);
    rep.periods_min.push_back(mean_tail_interval_min(rep.onsets[c]));
    for (std::size_t i = 0; i + 1 < rep.onsets[c].size(); ++i)
      intervals.push_back(rep.onsets[c][i + 1] - rep.onsets[c][i]);
  }

  const double median_interval = median(intervals);
  const double window = median_interval > 0.0
                            ? 0.5 * median_interval
                            : std::numeric_limits<double>::infinity();
  if (spread_tol_ms > 0.0) {
    rep.tolerance_ms = spread_tol_ms;
  } else {
    std::vector<double> periods_ms;
    for (double m : rep.periods_min)
      if (std::isfinite(m)) periods_ms.push_back(m * 60000.0);
    rep.tolerance_ms = 0.05 * median(periods_ms);
  }

  // A cell that never reaches three post-transient onsets (e.g. pinned at a
  // stable equilibrium at low G when its conductance draw is high and the
  // coupling is too weak to recruit it) cannot have synchronized onsets:
  // report the unmatched sentinel instead of erroring out of a k-sweep.
  const bool all_bursting =
      std::all_of(rep.onsets.begin(), rep.onsets.end(),
                  [](const std::vector<double>& o) { return o.size() >= 3; });
  rep.spread_ms = all_bursting ? sync_metric(rep.onsets, window)
                               : kSpreadUnmatched;
  rep.synchronized = rep.spread_ms <= rep.tolerance_ms;
  return rep;
}

MinSyncResult min_sync_coupling(const CellParams& base, std::size_t n_cells,
                                std::uint64_t seed, double k_lo, double k_hi,
                                double t_span_ms, double spread_tol_ms,
                                double section_v, const IntegratorConfig* cfg,
                                double transient_ms) {
  if (!(k_lo >= 0.0) || !(k_hi > k_lo))
    throw std::invalid_argument(
        "min_sync_coupling: need 0 <= k_lo < k_hi");
  auto probe = [&](double k) {
    return network_sync_report(base, n_cells, seed, k, t_span_ms,
                               spread_tol_ms, section_v, cfg, transient_ms);
  };

  const SyncReport rep_lo = probe(k_lo);
  if (rep_lo.synchronized) {
    // Degenerate bracket: already synchronized at the weakest coupling
    // (e.g. homogeneous cells from identical starts). The search cannot
    // resolve a threshold below k_lo, so k_lo itself is the answer.
    MinSyncResult res;
    res.k_min = k_lo;
    res.report = rep_lo;
    res.monotonic = true;
    res.monotonicity_note = "synchronized at k_lo; no threshold in bracket";
    return res;
  }
  SyncReport rep_hi = probe(k_hi);
  if (!rep_hi.synchronized) {
    std::ostringstream msg;
    msg << "min_sync_coupling: bracket invalid (unsynchronized at k_hi="
        << k_hi << ")";
    throw std::invalid_argument(msg.str());
  }

  double lo = k_lo, hi = k_hi;
  while ((hi - lo) / hi > 0.05) {
    const double mid = 0.5 * (lo + hi);
    const SyncReport rep_mid = probe(mid);
    if (rep_mid.synchronized) {
      hi = mid;
      rep_hi = rep_mid;
    } else {
      lo = mid;
    }
  }

  MinSyncResult res;
  res.k_min = hi;
  res.report = rep_hi;

  // Monotonicity is assumed by the bisection; re-check one bracket step to
  // either side of the returned value and report (not fail) on violations.
  const double step = hi - lo;
  std::ostringstream note;
  if (step > 0.0) {
    const SyncReport below = probe(std::max(k_lo, hi - step));
    const SyncReport above = probe(hi + step);
    if (below.synchronized) {
      res.monotonic = false;
      note << "synchronized below the returned k_min (k=" << hi - step
           << "); ";
    }
    if (!above.synchronized) {
      res.monotonic = false;
      note << "unsynchronized above the returned k_min (k=" << hi + step
           << "); ";
    }
  }
  res.monotonicity_note = note.str();
  return res;
}

} // namespace mtsb
