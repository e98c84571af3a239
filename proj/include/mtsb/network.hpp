#pragma once

// Coupled-network analysis: conductance-to-coupling conversion, network
// simulation, burst-onset extraction, the onset-spread synchronization
// metric, and the minimum-coupling search.

#include "mtsb/integrate.hpp"
#include "mtsb/model.hpp"

#include <limits>
#include <string>
#include <vector>

namespace mtsb {

/// Whole-cell capacitance used for the conductance conversion (fF).
constexpr double kCellCapacitanceFf = 5300.0;

/// k = g_c / c_v (g_c in pS, c_v in fF, k in 1/ms).
double k_from_conductance(double g_c_ps, double c_v_ff = kCellCapacitanceFf);

/// Synchronization analysis of one coupled run.
struct SyncReport {
  double k = 0.0;
  double g_c = 0.0;                            ///< k * c_v
  std::vector<std::vector<double>> onsets;     ///< per-cell onset times (ms)
  double spread_ms = 0.0;     ///< max over matched groups of (max - min)
  bool synchronized = false;  ///< spread <= tolerance
  double tolerance_ms = 0.0;  ///< resolved tolerance used for the flag
  /// Per-cell burst periods (minutes); NaN for a cell with fewer than two
  /// post-transient onsets (e.g. pinned at a stable rest state).
  std::vector<double> periods_min;
};

/// Integrates the coupled system (5N equations) and returns per-cell
/// trajectories sampled at record_dt (<= 0 stores every step). Initial
/// conditions: one state per cell. Throws on integration failure, naming the
/// time reached.
std::vector<Trajectory> simulate_network(const NetworkParams& np,
                                         const std::vector<CellState>& ics,
                                         double t0, double t1,
                                         const IntegratorConfig& cfg,
                                         double record_dt = 0.0);

/// Upward-crossing times of one cell's v through section_v (the trajectory
/// must be single-cell, dim 5).
std::vector<double> burst_onsets(const Trajectory& traj,
                                 double section_v = -59.0);

/// Sentinel spread for failed matching.
constexpr double kSpreadUnmatched = std::numeric_limits<double>::infinity();

/// Matches onsets across cells into groups by nearest-neighbor clustering
/// within the window and returns the maximal group spread (max - min onset).
/// Interior unmatched onsets (a group missing some cell away from the record
/// edges) yield the +infinity sentinel; edge-truncated groups are ignored.
/// Throws std::invalid_argument if any cell has fewer than 3 onsets.
double sync_metric(const std::vector<std::vector<double>>& onsets,
                   double window_ms);

/// Runs one coupled simulation at coupling k (heterogeneous cells from the
/// template base/seed), extracts post-transient onsets, and fills a
/// SyncReport. spread_tol_ms <= 0 resolves to 5% of the median burst period.
/// A cell with fewer than three post-transient onsets (not recruited into
/// bursting at this coupling) makes the run unsynchronized with the
/// +infinity spread sentinel rather than an error, so coupling sweeps can
/// cross the recruitment threshold.
/// Transient discarded before onset analysis in coupled runs (ms). Longer
/// than the single-cell transient: weakly coupled heterogeneous cells take
/// several burst cycles to settle into their locked phase pattern.
constexpr double kNetworkTransientMs = 60.0 * 60000.0;

SyncReport network_sync_report(const CellParams& base, std::size_t n_cells,
                               std::uint64_t seed, double k,
                               double t_span_ms = 50.0 * 60000.0,
                               double spread_tol_ms = 0.0,
                               double section_v = -59.0,
                               const IntegratorConfig* cfg = nullptr,
                               double transient_ms = kNetworkTransientMs);

/// Result of the bisection search for the smallest synchronizing coupling.
struct MinSyncResult {
  double k_min = 0.0;
  SyncReport report;             ///< report at k_min
  bool monotonic = true;         ///< false if the re-check found a violation
  std::string monotonicity_note; ///< details when !monotonic
};

/// Bisects k in [k_lo, k_hi] until the bracket's relative width is <= 5%,
/// returning the smallest tested synchronized k. A run already synchronized
/// at k_lo returns k_lo directly (no threshold to resolve); an
/// unsynchronized run at k_hi throws std::invalid_argument "bracket
/// invalid".
/// Monotonicity is assumed for the bisection and re-checked at k_min +/- one
/// bracket step; violations are reported, not fatal.
MinSyncResult min_sync_coupling(const CellParams& base, std::size_t n_cells,
                                std::uint64_t seed, double k_lo, double k_hi,
                                double t_span_ms = 50.0 * 60000.0,
                                double spread_tol_ms = 0.0,
                                double section_v = -59.0,
                                const IntegratorConfig* cfg = nullptr,
                                double transient_ms = kNetworkTransientMs);

} // namespace mtsb
