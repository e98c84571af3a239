// C interface of the shared library: thin wrappers translating the C++ core
// (exceptions, std containers) into opaque handles and status codes.

#include "mtsb.h"

#include "mtsb/analysis.hpp"
#include "mtsb/geometry.hpp"
#include "mtsb/integrate.hpp"
#include "mtsb/model.hpp"
#include "mtsb/network.hpp"
#include "mtsb/normalform.hpp"
#include "mtsb/singular.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <exception>
#include <new>
#include <stdexcept>
#include <string>
#include <vector>

namespace {

thread_local std::string g_last_error;

mtsb_status fail(mtsb_status st, const char* msg) {
  g_last_error = msg;
  return st;
}

mtsb_status invalid(const char* msg) {
  return fail(MTSB_ERR_INVALID_ARGUMENT, msg);
}

// Runs a callable, translating exceptions into status codes. The callable
// returns a status itself so wrappers can signal argument errors directly.
template <typename F>
mtsb_status guarded(F&& f) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    return fail(MTSB_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::domain_error& e) {
    return fail(MTSB_ERR_NUMERIC, e.what());
  } catch (const std::runtime_error& e) {
    return fail(MTSB_ERR_NUMERIC, e.what());
  } catch (const std::bad_alloc&) {
    return fail(MTSB_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(MTSB_ERR_INTERNAL, e.what());
  }
}

mtsb::IntegratorConfig resolve_options(const mtsb_solver_options* opt) {
  mtsb::IntegratorConfig cfg;
  if (opt) {
    if (opt->rtol > 0.0) cfg.rtol = opt->rtol;
    if (opt->atol > 0.0) cfg.atol = opt->atol;
    if (opt->h_max > 0.0) cfg.h_max = opt->h_max;
    if (opt->event_tol > 0.0) cfg.event_tol = opt->event_tol;
  }
  return cfg;
}

void fill_psp_result(const mtsb::CellState& loc, double glucose,
                     const std::array<std::complex<double>, 2>& eig,
                     mtsb::PspClass cls, const mtsb::AssumptionReport& rep,
                     mtsb_psp_result* out) {
  out->state[0] = loc.v;
  out->state[1] = loc.u;
  out->state[2] = loc.x;
  out->state[3] = loc.y;
  out->state[4] = loc.z;
  out->glucose = glucose;
  for (int i = 0; i < 2; ++i) {
    out->eig_re[i] = eig[i].real();
    out->eig_im[i] = eig[i].imag();
  }
  out->classification = static_cast<int>(cls);
  out->assumption_ok = rep.all_ok ? 1 : 0;
  out->det2 = rep.det2.value;
  out->h_vv = rep.h_vv.value;
  out->g2_0 = rep.g2_0.value;
  out->h_x = rep.h_x.value;
  out->f_v = rep.f_v.value;
}

void copy_state(const mtsb::CellState& s, double out[5]) {
  out[0] = s.v;
  out[1] = s.u;
  out[2] = s.x;
  out[3] = s.y;
  out[4] = s.z;
}

// Two-call array export: NULL out just reports the count.
mtsb_status export_doubles(const std::vector<double>& src, double* out,
                           size_t cap, size_t* out_count) {
  if (!out_count) return invalid("null out_count");
  *out_count = src.size();
  if (out) {
    const size_t n = std::min(cap, src.size());
    std::copy_n(src.begin(), n, out);
  }
  return MTSB_OK;
}

} // namespace

// Opaque handle definitions -------------------------------------------------

struct mtsb_params {
  mtsb::CellParams p;
};

struct mtsb_trajectory {
  mtsb::Trajectory t;
};

struct mtsb_manifold {
  mtsb::ManifoldSample sample;
  std::vector<mtsb::CellState> fold;
};

struct mtsb_eigen_sweep {
  std::vector<mtsb::EigenSweepRow> rows;
  std::vector<mtsb_psp_result> results; // valid where rows[i].ok
};

struct mtsb_blowup {
  struct RunArrays {
    std::vector<double> t3;
    std::vector<double> pv, px, py, pz; // perturbed orbit
    std::vector<double> sv, sx, sy, sz; // separatrix at the same times
  };
  mtsb::BlowupComparison cmp;
  std::vector<RunArrays> arrays;
};

struct mtsb_poincare {
  mtsb::PoincareRecord rec;
};

struct mtsb_sync_report {
  mtsb::SyncReport rep;
};

// Diagnostics ---------------------------------------------------------------

const char* mtsb_last_error(void) { return g_last_error.c_str(); }

const char* mtsb_version(void) { return "1.0.0"; }

// Parameters ----------------------------------------------------------------

mtsb_params* mtsb_params_create(void) {
  return new (std::nothrow) mtsb_params{};
}

mtsb_params* mtsb_params_clone(const mtsb_params* p) {
  if (!p) return nullptr;
  return new (std::nothrow) mtsb_params{*p};
}

void mtsb_params_destroy(mtsb_params* p) { delete p; }

mtsb_status mtsb_params_load_file(mtsb_params* p, const char* path) {
  if (!p || !path) return invalid("null params or path");
  try {
    p->p = mtsb::load_params(path);
    return MTSB_OK;
  } catch (const std::exception& e) {
    return fail(MTSB_ERR_IO, e.what());
  }
}

mtsb_status mtsb_params_set(mtsb_params* p, const char* key, double value) {
  if (!p || !key) return invalid("null params or key");
  return guarded([&] {
    mtsb::set_param(p->p, key, value);
    return MTSB_OK;
  });
}

mtsb_status mtsb_params_get(const mtsb_params* p, const char* key,
                            double* out_value) {
  if (!p || !key || !out_value) return invalid("null params, key, or output");
  return guarded([&] {
    *out_value = mtsb::get_param(p->p, key);
    return MTSB_OK;
  });
}

size_t mtsb_params_key_count(void) { return mtsb::param_keys().size(); }

const char* mtsb_params_key(size_t index) {
  const auto& keys = mtsb::param_keys();
  return index < keys.size() ? keys[index].c_str() : nullptr;
}

mtsb_status mtsb_heterogeneous_values(const mtsb_params* base, size_t n_cells,
                                      uint64_t seed, const char* key,
                                      double* out_values) {
  if (!base || !key || !out_values) return invalid("null argument");
  return guarded([&] {
    const mtsb::NetworkParams np =
        mtsb::make_heterogeneous(base->p, n_cells, seed, 0.0);
    for (size_t i = 0; i < n_cells; ++i)
      out_values[i] = mtsb::get_param(np.cells[i], key);
    return MTSB_OK;
  });
}

// Trajectories --------------------------------------------------------------

void mtsb_trajectory_destroy(mtsb_trajectory* t) { delete t; }

size_t mtsb_trajectory_size(const mtsb_trajectory* t) {
  return t ? t->t.times.size() : 0;
}

size_t mtsb_trajectory_dim(const mtsb_trajectory* t) {
  return t ? t->t.dim : 0;
}

const double* mtsb_trajectory_times(const mtsb_trajectory* t) {
  return t ? t->t.times.data() : nullptr;
}

const double* mtsb_trajectory_states(const mtsb_trajectory* t) {
  return t ? t->t.states.data() : nullptr;
}

mtsb_status mtsb_trajectory_crossings(const mtsb_trajectory* t,
                                      size_t component, double level,
                                      int direction, double t_min,
                                      double* out_times, size_t cap,
                                      size_t* out_count) {
  if (!t || !out_count) return invalid("null trajectory or out_count");
  if (component >= t->t.dim) return invalid("component out of range");
  return guarded([&] {
    const auto events =
        mtsb::detect_crossings(t->t, component, level, direction, 1e-6);
    std::vector<double> times;
    for (const auto& e : events)
      if (e.t >= t_min) times.push_back(e.t);
    return export_doubles(times, out_times, cap, out_count);
  });
}

mtsb_status mtsb_simulate(const mtsb_params* p, double t0_ms, double t1_ms,
                          double record_dt_ms, const mtsb_solver_options* opt,
                          const double* ic5, mtsb_trajectory** out) {
  if (!p || !out) return invalid("null params or output");
  if (!(t1_ms > t0_ms)) return invalid("need t1 > t0");
  return guarded([&] {
    p->p.validate();
    const mtsb::CellParams params = p->p;
    mtsb::CellState start = mtsb::default_initial_state(params);
    if (ic5) start = {ic5[0], ic5[1], ic5[2], ic5[3], ic5[4]};
    const std::vector<double> y0 = {start.v, start.u, start.x, start.y,
                                    start.z};
    const mtsb::Rhs rhs = [params](double, const double* y, double* dy) {
      const mtsb::CellState s{y[0], y[1], y[2], y[3], y[4]};
      const mtsb::CellState d = mtsb::rhs_single(s, params);
      dy[0] = d.v;
      dy[1] = d.u;
      dy[2] = d.x;
      dy[3] = d.y;
      dy[4] = d.z;
    };
    auto* h = new mtsb_trajectory{mtsb::integrate_sampled(
        rhs, y0, t0_ms, t1_ms, resolve_options(opt), record_dt_ms)};
    *out = h;
    return MTSB_OK;
  });
}

mtsb_status mtsb_simulate_network(const mtsb_params* base, size_t n_cells,
                                  uint64_t seed, double k, double t0_ms,
                                  double t1_ms, double record_dt_ms,
                                  const mtsb_solver_options* opt,
                                  mtsb_trajectory** out) {
  if (!base || !out) return invalid("null params or output");
  if (!(t1_ms > t0_ms)) return invalid("need t1 > t0");
  return guarded([&] {
    const mtsb::NetworkParams np =
        mtsb::make_heterogeneous(base->p, n_cells, seed, k);
    np.validate();
    const mtsb::CellState start = mtsb::default_initial_state(base->p);
    std::vector<double> y0;
    y0.reserve(5 * n_cells);
    for (size_t i = 0; i < n_cells; ++i) {
      y0.push_back(start.v);
      y0.push_back(start.u);
      y0.push_back(start.x);
      y0.push_back(start.y);
      y0.push_back(start.z);
    }
    const mtsb::Rhs rhs = [np](double, const double* y, double* dy) {
      mtsb::rhs_network(y, dy, np);
    };
    double reached = t0_ms;
    const mtsb::Observer track = [&reached](const mtsb::StepView& s) {
      reached = s.t1;
      return true;
    };
    try {
      auto* h = new mtsb_trajectory{
          mtsb::integrate_sampled(rhs, y0, t0_ms, t1_ms, resolve_options(opt),
                                  record_dt_ms, track)};
      *out = h;
    } catch (const std::exception& e) {
      throw std::runtime_error("network integration failed (reached t = " +
                               std::to_string(reached) + " ms): " + e.what());
    }
    return MTSB_OK;
  });
}

// Manifold geometry ---------------------------------------------------------

mtsb_status mtsb_sample_manifold(const mtsb_params* p, int kind,
                                 double a1_min, double a1_max, double a2_min,
                                 double a2_max, size_t n1, size_t n2,
                                 double z_slice, mtsb_manifold** out) {
  if (!p || !out) return invalid("null params or output");
  if (kind != MTSB_MANIFOLD_C && kind != MTSB_MANIFOLD_C1)
    return invalid("kind must be 0 (fast equilibria) or 1 (refined)");
  return guarded([&] {
    auto* h = new mtsb_manifold{};
    h->sample = mtsb::sample_manifold(
        p->p,
        kind == MTSB_MANIFOLD_C ? mtsb::ManifoldKind::C
                                : mtsb::ManifoldKind::C1,
        a1_min, a1_max, a2_min, a2_max, n1, n2, z_slice);
    try {
      h->fold = mtsb::fold_polyline(h->sample, p->p);
    } catch (...) {
      delete h;
      throw;
    }
    *out = h;
    return MTSB_OK;
  });
}

void mtsb_manifold_destroy(mtsb_manifold* m) { delete m; }

const char* mtsb_manifold_axis_name(const mtsb_manifold* m, int which) {
  if (!m) return nullptr;
  if (which == 0) return m->sample.axis1.c_str();
  if (which == 1) return m->sample.axis2.c_str();
  return nullptr;
}

size_t mtsb_manifold_count(const mtsb_manifold* m) {
  return m ? m->sample.nodes.size() : 0;
}

mtsb_status mtsb_manifold_node(const mtsb_manifold* m, size_t index,
                               double* axis1, double* axis2, double state5[5],
                               double* residual, int* valid) {
  if (!m) return invalid("null manifold");
  if (index >= m->sample.nodes.size()) return invalid("node index out of range");
  const mtsb::ManifoldNode& n = m->sample.nodes[index];
  if (axis1) *axis1 = n.axis1;
  if (axis2) *axis2 = n.axis2;
  if (state5) copy_state(n.state, state5);
  if (residual) *residual = n.residual;
  if (valid) *valid = n.ok ? 1 : 0;
  return MTSB_OK;
}

size_t mtsb_manifold_fold_count(const mtsb_manifold* m) {
  return m ? m->fold.size() : 0;
}

mtsb_status mtsb_manifold_fold_point(const mtsb_manifold* m, size_t index,
                                     double state5[5]) {
  if (!m || !state5) return invalid("null manifold or output");
  if (index >= m->fold.size()) return invalid("fold index out of range");
  copy_state(m->fold[index], state5);
  return MTSB_OK;
}

// Stationary fold point -----------------------------------------------------

const char* mtsb_class_name(int classification) {
  switch (classification) {
    case MTSB_CLASS_SADDLE: return "saddle";
    case MTSB_CLASS_NODE: return "node";
    case MTSB_CLASS_FOCUS: return "focus";
    case MTSB_CLASS_DEGENERATE: return "degenerate";
    default: return "unknown";
  }
}

mtsb_status mtsb_find_psp(const mtsb_params* p, double guess_v, double guess_x,
                          mtsb_psp_result* out) {
  if (!p || !out) return invalid("null params or output");
  return guarded([&] {
    const mtsb::PspPoint q = mtsb::find_psp(p->p, guess_v, guess_x);
    fill_psp_result(q.location, q.G, q.eigenvalues, q.classification,
                    q.assumption, out);
    return MTSB_OK;
  });
}

mtsb_status mtsb_eigen_sweep_run(const mtsb_params* p, double g_from,
                                 double g_to, double g_step,
                                 mtsb_eigen_sweep** out) {
  if (!p || !out) return invalid("null params or output");
  return guarded([&] {
    auto* h = new mtsb_eigen_sweep{};
    try {
      h->rows = mtsb::eigen_sweep(p->p, g_from, g_to, g_step);
      h->results.resize(h->rows.size());
      for (size_t i = 0; i < h->rows.size(); ++i) {
        const mtsb::EigenSweepRow& row = h->rows[i];
        h->results[i] = mtsb_psp_result{};
        if (row.ok) {
          mtsb::CellParams at = p->p;
          at.G = row.G;
          fill_psp_result(row.location, row.G, row.eigenvalues,
                          row.classification,
                          mtsb::check_assumption(row.location, at),
                          &h->results[i]);
        }
      }
    } catch (...) {
      delete h;
      throw;
    }
    *out = h;
    return MTSB_OK;
  });
}

void mtsb_eigen_sweep_destroy(mtsb_eigen_sweep* s) { delete s; }

size_t mtsb_eigen_sweep_count(const mtsb_eigen_sweep* s) {
  return s ? s->rows.size() : 0;
}

mtsb_status mtsb_eigen_sweep_row(const mtsb_eigen_sweep* s, size_t index,
                                 double* glucose, int* row_ok,
                                 mtsb_psp_result* result, char* err_buf,
                                 size_t err_cap) {
  if (!s) return invalid("null sweep");
  if (index >= s->rows.size()) return invalid("sweep index out of range");
  const mtsb::EigenSweepRow& row = s->rows[index];
  if (glucose) *glucose = row.G;
  if (row_ok) *row_ok = row.ok ? 1 : 0;
  if (result) *result = s->results[index];
  if (err_buf && err_cap > 0) {
    const size_t n = std::min(err_cap - 1, row.error.size());
    std::memcpy(err_buf, row.error.data(), n);
    err_buf[n] = '\0';
  }
  return MTSB_OK;
}

// Normal form and blow-up ---------------------------------------------------

size_t mtsb_coeff_count(void) { return mtsb::coeff_names().size(); }

const char* mtsb_coeff_name(size_t index) {
  const auto& names = mtsb::coeff_names();
  return index < names.size() ? names[index].c_str() : nullptr;
}

namespace {

mtsb::NormalFormCoeffs coeffs_at(const mtsb::CellParams& p,
                                 mtsb::PspPoint* psp_out = nullptr,
                                 mtsb::PartialBundle* bundle_out = nullptr) {
  const mtsb::PspPoint q = mtsb::find_psp(p);
  const mtsb::PartialBundle b = mtsb::compute_partials(q, p);
  if (psp_out) *psp_out = q;
  if (bundle_out) *bundle_out = b;
  return mtsb::coeffs(b);
}

} // namespace

mtsb_status mtsb_normal_form(const mtsb_params* p, double* out_values) {
  if (!p || !out_values) return invalid("null params or output");
  return guarded([&] {
    const mtsb::NormalFormCoeffs c = coeffs_at(p->p);
    const auto& names = mtsb::coeff_names();
    for (size_t i = 0; i < names.size(); ++i)
      out_values[i] = mtsb::coeff_value(c, names[i]);
    return MTSB_OK;
  });
}

mtsb_status mtsb_chart_scaling_at(const mtsb_params* p,
                                  mtsb_chart_scaling* out) {
  if (!p || !out) return invalid("null params or output");
  return guarded([&] {
    mtsb::PartialBundle b;
    (void)coeffs_at(p->p, nullptr, &b);
    const mtsb::ChartScaling s = mtsb::chart_scaling(p->p.eps, b);
    out->r3 = s.r3;
    out->fac_v = s.fac_v;
    out->fac_x = s.fac_x;
    out->fac_y = s.fac_y;
    out->fac_z = s.fac_z;
    out->fac_t = s.fac_t;
    return MTSB_OK;
  });
}

mtsb_status mtsb_blowup_run(const mtsb_params* p, const double* r3_values,
                            size_t n_r3, double t3_from, double t3_to,
                            double ic_offset, double z30, double sample_dt3,
                            mtsb_blowup** out) {
  if (!p || !out) return invalid("null params or output");
  if (!r3_values || n_r3 == 0) return invalid("need at least one r3 value");
  if (!(t3_to > t3_from)) return invalid("need t3_to > t3_from");
  return guarded([&] {
    const mtsb::NormalFormCoeffs c = coeffs_at(p->p);
    const double r3_ref = std::sqrt(p->p.eps);
    const double delta3 = p->p.delta / r3_ref;
    const double lambda3 = c.lambda / p->p.eps;
    const std::vector<double> r3(r3_values, r3_values + n_r3);
    auto* h = new mtsb_blowup{};
    try {
      h->cmp = mtsb::compare_blowup(c, delta3, lambda3, r3, t3_from, t3_to,
                                    ic_offset, z30,
                                    sample_dt3 > 0.0 ? sample_dt3 : 0.5);
      h->arrays.resize(h->cmp.runs.size());
      for (size_t i = 0; i < h->cmp.runs.size(); ++i) {
        const mtsb::BlowupRun& run = h->cmp.runs[i];
        auto& a = h->arrays[i];
        a.t3 = run.t3;
        const size_t n = run.t3.size();
        a.pv.resize(n); a.px.resize(n); a.py.resize(n); a.pz.resize(n);
        a.sv.resize(n); a.sx.resize(n); a.sy.resize(n); a.sz.resize(n);
        for (size_t j = 0; j < n; ++j) {
          a.pv[j] = run.perturbed[j].v3;
          a.px[j] = run.perturbed[j].x3;
          a.py[j] = run.perturbed[j].y3;
          a.pz[j] = run.perturbed[j].z3;
          a.sv[j] = run.special[j].v3;
          a.sx[j] = run.special[j].x3;
          a.sy[j] = run.special[j].y3;
          a.sz[j] = run.special[j].z3;
        }
      }
    } catch (...) {
      delete h;
      throw;
    }
    *out = h;
    return MTSB_OK;
  });
}

void mtsb_blowup_destroy(mtsb_blowup* b) { delete b; }

size_t mtsb_blowup_count(const mtsb_blowup* b) {
  return b ? b->cmp.runs.size() : 0;
}

mtsb_status mtsb_blowup_summary(const mtsb_blowup* b, size_t index, double* r3,
                                int* completed, double* escape_t3,
                                int* oscillations, int* turned) {
  if (!b) return invalid("null blow-up handle");
  if (index >= b->cmp.runs.size()) return invalid("run index out of range");
  const mtsb::BlowupRun& run = b->cmp.runs[index];
  if (r3) *r3 = run.r3;
  if (completed) *completed = run.completed ? 1 : 0;
  if (escape_t3) *escape_t3 = run.escape_t3;
  if (oscillations) *oscillations = run.oscillations;
  if (turned) *turned = run.turned ? 1 : 0;
  return MTSB_OK;
}

mtsb_status mtsb_blowup_samples(const mtsb_blowup* b, size_t index, int branch,
                                const double** t3, const double** v3,
                                const double** x3, const double** y3,
                                const double** z3, size_t* count) {
  if (!b || !count) return invalid("null blow-up handle or count");
  if (index >= b->arrays.size()) return invalid("run index out of range");
  if (branch != 0 && branch != 1)
    return invalid("branch must be 0 (perturbed) or 1 (separatrix)");
  const auto& a = b->arrays[index];
  *count = a.t3.size();
  if (t3) *t3 = a.t3.data();
  if (branch == 0) {
    if (v3) *v3 = a.pv.data();
    if (x3) *x3 = a.px.data();
    if (y3) *y3 = a.py.data();
    if (z3) *z3 = a.pz.data();
  } else {
    if (v3) *v3 = a.sv.data();
    if (x3) *x3 = a.sx.data();
    if (y3) *y3 = a.sy.data();
    if (z3) *z3 = a.sz.data();
  }
  return MTSB_OK;
}

// Return-map analysis -------------------------------------------------------

mtsb_status mtsb_poincare_map(const mtsb_params* p, double section_v,
                              double t_span_ms, const mtsb_solver_options* opt,
                              int estimator, mtsb_poincare** out) {
  if (!p || !out) return invalid("null params or output");
  if (estimator != 0 && estimator != 1)
    return invalid("estimator must be 0 (mean) or 1 (last)");
  return guarded([&] {
    const mtsb::IntegratorConfig cfg = resolve_options(opt);
    auto* h = new mtsb_poincare{mtsb::poincare_map(
        p->p, section_v, t_span_ms > 0.0 ? t_span_ms : 80.0 * 60000.0,
        nullptr, &cfg,
        estimator == 0 ? mtsb::FixedPointEstimator::mean
                       : mtsb::FixedPointEstimator::last)};
    *out = h;
    return MTSB_OK;
  });
}

void mtsb_poincare_destroy(mtsb_poincare* r) { delete r; }

mtsb_status mtsb_poincare_stats(const mtsb_poincare* r, double* fp_x,
                                double* fp_y, double* max_dist,
                                int* contracting, int* stable,
                                int* insufficient, double* period_min) {
  if (!r) return invalid("null return-map handle");
  const mtsb::PoincareRecord& rec = r->rec;
  if (fp_x) *fp_x = rec.fixed_point[0];
  if (fp_y) *fp_y = rec.fixed_point[1];
  if (max_dist) *max_dist = rec.max_dist;
  if (contracting) *contracting = rec.contracting ? 1 : 0;
  if (stable) *stable = rec.stable ? 1 : 0;
  if (insufficient) *insufficient = rec.insufficient ? 1 : 0;
  if (period_min) *period_min = rec.period_minutes;
  return MTSB_OK;
}

size_t mtsb_poincare_crossing_count(const mtsb_poincare* r) {
  return r ? r->rec.crossings.size() : 0;
}

mtsb_status mtsb_poincare_crossing(const mtsb_poincare* r, size_t index,
                                   double* t_ms, double* x, double* y) {
  if (!r) return invalid("null return-map handle");
  if (index >= r->rec.crossings.size())
    return invalid("crossing index out of range");
  if (t_ms) *t_ms = r->rec.crossings[index].t;
  if (x) *x = r->rec.points[index][0];
  if (y) *y = r->rec.points[index][1];
  return MTSB_OK;
}

// Quiescent-phase duration --------------------------------------------------

mtsb_status mtsb_linger_time(const mtsb_params* p, double radius,
                             double section_v, double t_span_ms,
                             const double* scales4, double* out_linger_ms) {
  if (!p || !out_linger_ms) return invalid("null params or output");
  return guarded([&] {
    mtsb::LingerScales sc;
    if (scales4) {
      if (!(scales4[0] > 0) || !(scales4[1] > 0) || !(scales4[2] > 0) ||
          !(scales4[3] > 0))
        throw std::invalid_argument("neighborhood scales must be positive");
      sc = {scales4[0], scales4[1], scales4[2], scales4[3]};
    }
    *out_linger_ms = mtsb::linger_time_for_G(
        p->p, radius > 0.0 ? radius : 1.0, section_v,
        t_span_ms > 0.0 ? t_span_ms : 80.0 * 60000.0, sc);
    return MTSB_OK;
  });
}

mtsb_status mtsb_coupling_from_linger(double t_linger_ms, double k_ref,
                                      double t_ref_ms, double* out_k) {
  if (!out_k) return invalid("null output");
  return guarded([&] {
    *out_k = mtsb::coupling_from_linger(t_linger_ms,
                                        k_ref > 0.0 ? k_ref : 0.005,
                                        t_ref_ms > 0.0 ? t_ref_ms : 35000.0);
    return MTSB_OK;
  });
}

// Network synchronization ---------------------------------------------------

mtsb_status mtsb_k_from_conductance(double g_c_ps, double c_v_ff,
                                    double* out_k) {
  if (!out_k) return invalid("null output");
  return guarded([&] {
    *out_k = mtsb::k_from_conductance(
        g_c_ps, c_v_ff > 0.0 ? c_v_ff : mtsb::kCellCapacitanceFf);
    return MTSB_OK;
  });
}

mtsb_status mtsb_network_sync(const mtsb_params* base, size_t n_cells,
                              uint64_t seed, double k, double t_span_ms,
                              double spread_tol_ms, double section_v,
                              double transient_ms,
                              const mtsb_solver_options* opt,
                              mtsb_sync_report** out) {
  if (!base || !out) return invalid("null params or output");
  return guarded([&] {
    const mtsb::IntegratorConfig cfg = resolve_options(opt);
    auto* h = new mtsb_sync_report{mtsb::network_sync_report(
        base->p, n_cells, seed, k,
        t_span_ms > 0.0 ? t_span_ms : 50.0 * 60000.0, spread_tol_ms,
        section_v, &cfg,
        transient_ms > 0.0 ? transient_ms : mtsb::kNetworkTransientMs)};
    *out = h;
    return MTSB_OK;
  });
}

void mtsb_sync_report_destroy(mtsb_sync_report* r) { delete r; }

mtsb_status mtsb_sync_stats(const mtsb_sync_report* r, double* k, double* g_c,
                            double* spread_ms, double* tolerance_ms,
                            int* is_synchronized) {
  if (!r) return invalid("null sync report");
  if (k) *k = r->rep.k;
  if (g_c) *g_c = r->rep.g_c;
  if (spread_ms) *spread_ms = r->rep.spread_ms;
  if (tolerance_ms) *tolerance_ms = r->rep.tolerance_ms;
  if (is_synchronized) *is_synchronized = r->rep.synchronized ? 1 : 0;
  return MTSB_OK;
}

size_t mtsb_sync_cell_count(const mtsb_sync_report* r) {
  return r ? r->rep.onsets.size() : 0;
}

mtsb_status mtsb_sync_cell_period(const mtsb_sync_report* r, size_t cell,
                                  double* period_min) {
  if (!r || !period_min) return invalid("null sync report or output");
  if (cell >= r->rep.periods_min.size()) return invalid("cell out of range");
  *period_min = r->rep.periods_min[cell];
  return MTSB_OK;
}

mtsb_status mtsb_sync_cell_onsets(const mtsb_sync_report* r, size_t cell,
                                  double* out_times, size_t cap,
                                  size_t* out_count) {
  if (!r) return invalid("null sync report");
  if (cell >= r->rep.onsets.size()) return invalid("cell out of range");
  return export_doubles(r->rep.onsets[cell], out_times, cap, out_count);
}

mtsb_status mtsb_min_sync_coupling(const mtsb_params* base, size_t n_cells,
                                   uint64_t seed, double k_lo, double k_hi,
                                   double t_span_ms, double spread_tol_ms,
                                   double section_v, double transient_ms,
                                   const mtsb_solver_options* opt,
                                   double* out_k_min, int* out_monotonic,
                                   mtsb_sync_report** out_report) {
  if (!base || !out_k_min) return invalid("null params or output");
  return guarded([&] {
    const mtsb::IntegratorConfig cfg = resolve_options(opt);
    mtsb::MinSyncResult res = mtsb::min_sync_coupling(
        base->p, n_cells, seed, k_lo, k_hi,
        t_span_ms > 0.0 ? t_span_ms : 50.0 * 60000.0, spread_tol_ms,
        section_v, &cfg,
        transient_ms > 0.0 ? transient_ms : mtsb::kNetworkTransientMs);
    *out_k_min = res.k_min;
    if (out_monotonic) *out_monotonic = res.monotonic ? 1 : 0;
    if (out_report)
      *out_report = new mtsb_sync_report{std::move(res.report)};
    return MTSB_OK;
  });
}
