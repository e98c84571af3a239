/*
 * mtsb - slow-fast beta-cell dynamics toolkit, C interface.
 *
 * The shared library exposes the simulation and analysis core behind opaque
 * handles and integer status codes so it can be driven from C, scripting
 * FFIs, or the bundled command line tool.
 *
 * Conventions
 *   - Every fallible call returns mtsb_status; MTSB_OK (0) means success.
 *   - On failure, mtsb_last_error() returns a thread-local description that
 *     stays valid until the next failing call on the same thread.
 *   - Objects created by mtsb_*_create / mtsb_* factory calls are owned by
 *     the caller and released with the matching mtsb_*_destroy (all of which
 *     accept NULL).
 *   - Pointers returned by accessor functions borrow from their handle and
 *     are invalidated when the handle is destroyed.
 *   - Handles are immutable after creation (except mtsb_params, which has
 *     explicit setters), so distinct handles may be used from distinct
 *     threads concurrently; sharing one mutable handle across threads needs
 *     external synchronization.
 *   - Times are milliseconds, voltages millivolts, couplings 1/ms unless a
 *     parameter name says otherwise.
 */

#ifndef MTSB_H
#define MTSB_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(MTSB_BUILD_SHARED)
#    define MTSB_API __declspec(dllexport)
#  else
#    define MTSB_API __declspec(dllimport)
#  endif
#else
#  define MTSB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* ------------------------------------------------------------------ */
/* Status and diagnostics                                              */
/* ------------------------------------------------------------------ */

typedef enum mtsb_status {
  MTSB_OK = 0,
  MTSB_ERR_INVALID_ARGUMENT = 1, /* bad key, range, size, or null pointer */
  MTSB_ERR_NUMERIC = 2,          /* solver failure: no convergence, blow-up */
  MTSB_ERR_IO = 3,               /* file could not be read or parsed */
  MTSB_ERR_INTERNAL = 4          /* unexpected condition; please report */
} mtsb_status;

/* Thread-local message for the most recent failure on this thread; empty
 * string if none. */
MTSB_API const char* mtsb_last_error(void);

/* Library semantic version, e.g. "1.0.0". */
MTSB_API const char* mtsb_version(void);

/* ------------------------------------------------------------------ */
/* Model parameters                                                    */
/* ------------------------------------------------------------------ */

typedef struct mtsb_params mtsb_params;

/* Fresh parameter set with the published defaults (glucose G = 8). */
MTSB_API mtsb_params* mtsb_params_create(void);
MTSB_API mtsb_params* mtsb_params_clone(const mtsb_params* p);
MTSB_API void mtsb_params_destroy(mtsb_params* p);

/* Replaces values from a "key = value" file ('#' comments allowed).
 * Unknown keys or malformed lines fail with MTSB_ERR_IO and leave p
 * unchanged. */
MTSB_API mtsb_status mtsb_params_load_file(mtsb_params* p, const char* path);

/* Single-key access; valid keys are the model constant names (a1..a7, v1,
 * v2, s1, s2, s3, d1, d2, d3, k1, k2, p_r, k_r, K_d, eps, delta, G). */
MTSB_API mtsb_status mtsb_params_set(mtsb_params* p, const char* key,
                                     double value);
MTSB_API mtsb_status mtsb_params_get(const mtsb_params* p, const char* key,
                                     double* out_value);

/* Key enumeration (stable declaration order). mtsb_params_key returns NULL
 * when the index is out of range. */
MTSB_API size_t mtsb_params_key_count(void);
MTSB_API const char* mtsb_params_key(size_t index);

/* Per-cell values drawn by the deterministic heterogeneity scheme (a5
 * within +/-10%, k_r within +/-5%, seeded): fills out_values[0..n_cells)
 * with the value of `key` for each cell; keys not varied by the scheme
 * yield the base value. */
MTSB_API mtsb_status mtsb_heterogeneous_values(const mtsb_params* base,
                                               size_t n_cells, uint64_t seed,
                                               const char* key,
                                               double* out_values);

/* ------------------------------------------------------------------ */
/* Integrator options                                                  */
/* ------------------------------------------------------------------ */

/* Pass NULL anywhere an mtsb_solver_options* is accepted to get defaults.
 * Fields <= 0 also fall back to their defaults, so partial overrides are
 * easy: zero-initialize, set what you need. */
typedef struct mtsb_solver_options {
  double rtol;      /* relative tolerance, default 1e-8 */
  double atol;      /* absolute tolerance, default 1e-10 */
  double h_max;     /* max step (ms), default 1.0 */
  double event_tol; /* crossing-time bisection tolerance (ms), default 1e-6 */
} mtsb_solver_options;

/* ------------------------------------------------------------------ */
/* Trajectories                                                        */
/* ------------------------------------------------------------------ */

typedef struct mtsb_trajectory mtsb_trajectory;

MTSB_API void mtsb_trajectory_destroy(mtsb_trajectory* t);

/* Number of stored sample nodes / state dimension (5 per cell). */
MTSB_API size_t mtsb_trajectory_size(const mtsb_trajectory* t);
MTSB_API size_t mtsb_trajectory_dim(const mtsb_trajectory* t);

/* Borrowed arrays: times has size() entries, states size()*dim() entries in
 * node-major order (node i occupies states[i*dim .. i*dim+dim)). State
 * component order per cell: v, u, x, y, z. */
MTSB_API const double* mtsb_trajectory_times(const mtsb_trajectory* t);
MTSB_API const double* mtsb_trajectory_states(const mtsb_trajectory* t);

/* Level-crossing times of one state component, refined to the integrator's
 * dense output. direction +1 counts upward crossings, -1 downward, 0 both.
 * Crossings before t_min are skipped. Two-call pattern: pass out_times =
 * NULL (cap ignored) to query the count; otherwise at most cap times are
 * written and *out_count receives the number available. */
MTSB_API mtsb_status mtsb_trajectory_crossings(const mtsb_trajectory* t,
                                               size_t component, double level,
                                               int direction, double t_min,
                                               double* out_times, size_t cap,
                                               size_t* out_count);

/* Single-cell simulation over [t0, t1], sampled every record_dt ms
 * (record_dt <= 0 stores every accepted step). ic is the initial state
 * (v,u,x,y,z) or NULL for the standard rest-like start used by the analysis
 * routines. */
MTSB_API mtsb_status mtsb_simulate(const mtsb_params* p, double t0_ms,
                                   double t1_ms, double record_dt_ms,
                                   const mtsb_solver_options* opt,
                                   const double* ic5,
                                   mtsb_trajectory** out);

/* Coupled all-to-all network of n_cells heterogeneous cells (deterministic
 * draws from seed) with gap-junction strength k (1/ms). All cells start
 * from the same standard initial state. The result has dim = 5*n_cells,
 * cell c occupying components [5c, 5c+5). */
MTSB_API mtsb_status mtsb_simulate_network(const mtsb_params* base,
                                           size_t n_cells, uint64_t seed,
                                           double k, double t0_ms,
                                           double t1_ms, double record_dt_ms,
                                           const mtsb_solver_options* opt,
                                           mtsb_trajectory** out);

/* ------------------------------------------------------------------ */
/* Critical-manifold geometry                                          */
/* ------------------------------------------------------------------ */

typedef struct mtsb_manifold mtsb_manifold;

typedef enum mtsb_manifold_kind {
  MTSB_MANIFOLD_C = 0, /* fast-subsystem equilibria, meshed over (v, x) */
  MTSB_MANIFOLD_C1 = 1 /* adds the intermediate balance, meshed over (v, z) */
} mtsb_manifold_kind;

/* Samples the manifold over [a1_min, a1_max] x [a2_min, a2_max] with an
 * n1 x n2 mesh. For MTSB_MANIFOLD_C the free coordinate z is fixed to
 * z_slice. Nodes where the defining equations have no solution are flagged
 * invalid rather than failing the call. The fold polyline is extracted as
 * part of the sampling. */
MTSB_API mtsb_status mtsb_sample_manifold(const mtsb_params* p, int kind,
                                          double a1_min, double a1_max,
                                          double a2_min, double a2_max,
                                          size_t n1, size_t n2, double z_slice,
                                          mtsb_manifold** out);
MTSB_API void mtsb_manifold_destroy(mtsb_manifold* m);

/* Axis names of the sampling chart ("v","x" or "v","z"); which is 0 or 1. */
MTSB_API const char* mtsb_manifold_axis_name(const mtsb_manifold* m,
                                             int which);

/* Mesh nodes in row-major order (index = i2*n1 + i1). */
MTSB_API size_t mtsb_manifold_count(const mtsb_manifold* m);
MTSB_API mtsb_status mtsb_manifold_node(const mtsb_manifold* m, size_t index,
                                        double* axis1, double* axis2,
                                        double state5[5], double* residual,
                                        int* valid);

/* Points of the fold polyline (full states, ordered along the curve). */
MTSB_API size_t mtsb_manifold_fold_count(const mtsb_manifold* m);
MTSB_API mtsb_status mtsb_manifold_fold_point(const mtsb_manifold* m,
                                              size_t index, double state5[5]);

/* ------------------------------------------------------------------ */
/* Distinguished fold point and slow-flow linearization                */
/* ------------------------------------------------------------------ */

typedef enum mtsb_stationary_class {
  MTSB_CLASS_SADDLE = 0,
  MTSB_CLASS_NODE = 1,
  MTSB_CLASS_FOCUS = 2,
  MTSB_CLASS_DEGENERATE = 3
} mtsb_stationary_class;

/* Human-readable name for an mtsb_stationary_class value. */
MTSB_API const char* mtsb_class_name(int classification);

typedef struct mtsb_psp_result {
  double state[5];    /* v, u, x, y, z at the stationary fold point */
  double glucose;     /* G the search ran at */
  double eig_re[2];   /* eigenvalues of the reduced linearization */
  double eig_im[2];
  int classification; /* mtsb_stationary_class */
  int assumption_ok;  /* all non-degeneracy checks passed */
  /* Non-degeneracy report: fold determinant and the quantities that must
   * not vanish for the reduction to be valid. */
  double det2, h_vv, g2_0, h_x, f_v;
} mtsb_psp_result;

/* Locates the stationary point of the desingularized slow flow on the fold
 * curve by a damped Newton search started from (guess_v, guess_x); pass
 * guess_x <= 0 for an automatic glucose-aware start. Fails with
 * MTSB_ERR_NUMERIC when the search does not converge or lands on a
 * spurious root. */
MTSB_API mtsb_status mtsb_find_psp(const mtsb_params* p, double guess_v,
                                   double guess_x, mtsb_psp_result* out);

/* Continuation sweep of the stationary fold point over glucose values
 * g_from, g_from+g_step, ..., up to g_to (inclusive within rounding). */
typedef struct mtsb_eigen_sweep mtsb_eigen_sweep;

MTSB_API mtsb_status mtsb_eigen_sweep_run(const mtsb_params* p, double g_from,
                                          double g_to, double g_step,
                                          mtsb_eigen_sweep** out);
MTSB_API void mtsb_eigen_sweep_destroy(mtsb_eigen_sweep* s);
MTSB_API size_t mtsb_eigen_sweep_count(const mtsb_eigen_sweep* s);

/* One sweep row. *row_ok reports whether the search succeeded at that G;
 * on row failure `result` is zeroed and err_buf (if non-NULL, cap > 0)
 * receives the row's error text. The call itself fails only on bad
 * arguments. */
MTSB_API mtsb_status mtsb_eigen_sweep_row(const mtsb_eigen_sweep* s,
                                          size_t index, double* glucose,
                                          int* row_ok, mtsb_psp_result* result,
                                          char* err_buf, size_t err_cap);

/* ------------------------------------------------------------------ */
/* Normal form and blow-up chart                                       */
/* ------------------------------------------------------------------ */

/* Coefficient table of the folded-singularity normal form at the
 * distinguished fold point. Fixed size and order; names are stable. */
MTSB_API size_t mtsb_coeff_count(void);
MTSB_API const char* mtsb_coeff_name(size_t index);

/* Fills out_values[0..mtsb_coeff_count()) in table order. */
MTSB_API mtsb_status mtsb_normal_form(const mtsb_params* p,
                                      double* out_values);

/* Scale factors mapping central-chart coordinates back to the shifted
 * physical variables at r3 = sqrt(eps): v = fac_v*v3, x = fac_x*x3,
 * y = fac_y*y3, z = fac_z*z3, t = fac_t*t3. */
typedef struct mtsb_chart_scaling {
  double r3;
  double fac_v, fac_x, fac_y, fac_z, fac_t;
} mtsb_chart_scaling;

MTSB_API mtsb_status mtsb_chart_scaling_at(const mtsb_params* p,
                                           mtsb_chart_scaling* out);

/* Integrates the central-chart system near the closed-form separatrix
 * solution for each r3 in r3_values, starting from the separatrix at
 * t3_from plus ic_offset on the x3 component. Samples are stored every
 * sample_dt3 (<= 0 for the default), plus the escape point when |v3|
 * exceeds 50. */
typedef struct mtsb_blowup mtsb_blowup;

MTSB_API mtsb_status mtsb_blowup_run(const mtsb_params* p,
                                     const double* r3_values, size_t n_r3,
                                     double t3_from, double t3_to,
                                     double ic_offset, double z30,
                                     double sample_dt3, mtsb_blowup** out);
MTSB_API void mtsb_blowup_destroy(mtsb_blowup* b);
MTSB_API size_t mtsb_blowup_count(const mtsb_blowup* b);

/* Per-run classification: escape_t3 is NaN when the trajectory never left
 * |v3| <= 50; oscillations counts v3 maxima strictly before escape; turned
 * reports any v3 direction reversal before escape. completed is 0 when the
 * integration failed mid-span (partial samples are still available). */
MTSB_API mtsb_status mtsb_blowup_summary(const mtsb_blowup* b, size_t index,
                                         double* r3, int* completed,
                                         double* escape_t3,
                                         int* oscillations, int* turned);

/* Borrowed sample arrays for one run. branch 0 is the perturbed orbit,
 * branch 1 the closed-form separatrix evaluated at the same times. */
MTSB_API mtsb_status mtsb_blowup_samples(const mtsb_blowup* b, size_t index,
                                         int branch, const double** t3,
                                         const double** v3, const double** x3,
                                         const double** y3, const double** z3,
                                         size_t* count);

/* ------------------------------------------------------------------ */
/* Return-map analysis                                                 */
/* ------------------------------------------------------------------ */

typedef struct mtsb_poincare mtsb_poincare;

/* Simulates a settling transient plus t_span_ms (<= 0 for the 80-minute
 * default) and analyzes upward crossings of v = section_v in the
 * post-transient window. estimator 0 averages the last six section points
 * for the fixed point, 1 takes the last point. */
MTSB_API mtsb_status mtsb_poincare_map(const mtsb_params* p, double section_v,
                                       double t_span_ms,
                                       const mtsb_solver_options* opt,
                                       int estimator, mtsb_poincare** out);
MTSB_API void mtsb_poincare_destroy(mtsb_poincare* r);

/* Scalar summary. insufficient = 1 flags records with fewer than 7
 * crossings: fixed point and stability fields are then unset (zero).
 * Any out-pointer may be NULL. */
MTSB_API mtsb_status mtsb_poincare_stats(const mtsb_poincare* r, double* fp_x,
                                         double* fp_y, double* max_dist,
                                         int* contracting, int* stable,
                                         int* insufficient,
                                         double* period_min);

/* Section crossings: time (ms) and the (x, y) section point. */
MTSB_API size_t mtsb_poincare_crossing_count(const mtsb_poincare* r);
MTSB_API mtsb_status mtsb_poincare_crossing(const mtsb_poincare* r,
                                            size_t index, double* t_ms,
                                            double* x, double* y);

/* ------------------------------------------------------------------ */
/* Quiescent-phase duration and coupling heuristic                     */
/* ------------------------------------------------------------------ */

/* Minimum over complete cycles of the contiguous time (ms) the orbit spends
 * inside the scaled max-norm neighborhood of the stationary fold point.
 * scales4 gives the per-component scales (v, x, y, z; the recovery gate is
 * excluded) or NULL for the calibrated defaults; radius <= 0 defaults to 1.
 * t_span_ms <= 0 uses the 80-minute default analysis window. Fails with
 * MTSB_ERR_NUMERIC if the orbit never enters the neighborhood or no
 * complete cycle lies in the window. */
MTSB_API mtsb_status mtsb_linger_time(const mtsb_params* p, double radius,
                                      double section_v, double t_span_ms,
                                      const double* scales4,
                                      double* out_linger_ms);

/* Inverse-proportional coupling heuristic anchored at (k_ref, t_ref):
 * k = k_ref * t_ref / t_linger. Defaults (pass <= 0): k_ref = 0.005 1/ms,
 * t_ref = 35000 ms. */
MTSB_API mtsb_status mtsb_coupling_from_linger(double t_linger_ms,
                                               double k_ref, double t_ref_ms,
                                               double* out_k);

/* ------------------------------------------------------------------ */
/* Network synchronization                                             */
/* ------------------------------------------------------------------ */

/* Gap-junction conductance (pS) to coupling rate (1/ms) via the whole-cell
 * capacitance (fF); c_v_ff <= 0 uses the default 5300 fF. */
MTSB_API mtsb_status mtsb_k_from_conductance(double g_c_ps, double c_v_ff,
                                             double* out_k);

typedef struct mtsb_sync_report mtsb_sync_report;

/* One coupled run of n_cells heterogeneous cells at coupling k, followed by
 * burst-onset matching. Defaults for arguments <= 0: t_span_ms 50 min,
 * spread_tol_ms 5% of the median burst period, transient_ms 60 min.
 * A run where some cell never bursts is reported unsynchronized with an
 * infinite spread, not as an error. */
MTSB_API mtsb_status mtsb_network_sync(const mtsb_params* base,
                                       size_t n_cells, uint64_t seed, double k,
                                       double t_span_ms, double spread_tol_ms,
                                       double section_v, double transient_ms,
                                       const mtsb_solver_options* opt,
                                       mtsb_sync_report** out);
MTSB_API void mtsb_sync_report_destroy(mtsb_sync_report* r);

/* Scalar summary; any out-pointer may be NULL. spread_ms is +infinity when
 * onsets could not be matched across all cells. */
MTSB_API mtsb_status mtsb_sync_stats(const mtsb_sync_report* r, double* k,
                                     double* g_c, double* spread_ms,
                                     double* tolerance_ms,
                                     int* is_synchronized);

MTSB_API size_t mtsb_sync_cell_count(const mtsb_sync_report* r);

/* Per-cell mean burst period in minutes; NaN for a cell with fewer than two
 * post-transient onsets. */
MTSB_API mtsb_status mtsb_sync_cell_period(const mtsb_sync_report* r,
                                           size_t cell, double* period_min);

/* Per-cell post-transient burst-onset times (ms); two-call pattern as in
 * mtsb_trajectory_crossings. */
MTSB_API mtsb_status mtsb_sync_cell_onsets(const mtsb_sync_report* r,
                                           size_t cell, double* out_times,
                                           size_t cap, size_t* out_count);

/* Bisection for the smallest coupling whose run is synchronized, between
 * k_lo and k_hi, to 5% relative bracket width. A run already synchronized
 * at k_lo returns k_lo; an unsynchronized run at k_hi is an invalid
 * bracket (error). out_monotonic reports the re-check at one bracket step
 * around the result (1 = consistent with a monotone threshold).
 * out_report (optional) receives the report at the returned coupling.
 * Defaults as in mtsb_network_sync. */
MTSB_API mtsb_status mtsb_min_sync_coupling(
    const mtsb_params* base, size_t n_cells, uint64_t seed, double k_lo,
    double k_hi, double t_span_ms, double spread_tol_ms, double section_v,
    double transient_ms, const mtsb_solver_options* opt, double* out_k_min,
    int* out_monotonic, mtsb_sync_report** out_report);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* MTSB_H */
