// Command-line front end. Every numeric result comes through the C API of
// the shared library (mtsb.h); this file only parses flags, schedules runs,
// and writes CSV/JSON tables plus a manifest per invocation.

#include "mtsb.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr const char* kSchemaVersion = "1";
constexpr int kExitOk = 0;
constexpr int kExitFatal = 1;
constexpr int kExitPartial = 2;

// ---------------------------------------------------------------------------
// C API plumbing
// ---------------------------------------------------------------------------

[[noreturn]] void fail(const std::string& what) {
  throw std::runtime_error(what);
}

void check(mtsb_status st, const char* what) {
  if (st != MTSB_OK)
    fail(std::string(what) + ": " + mtsb_last_error());
}

struct ParamsDeleter {
  void operator()(mtsb_params* p) const { mtsb_params_destroy(p); }
};
using ParamsPtr = std::unique_ptr<mtsb_params, ParamsDeleter>;

template <typename T, void (*Destroy)(T*)>
struct HandleDeleter {
  void operator()(T* h) const { Destroy(h); }
};
using TrajectoryPtr =
    std::unique_ptr<mtsb_trajectory,
                    HandleDeleter<mtsb_trajectory, mtsb_trajectory_destroy>>;
using ManifoldPtr =
    std::unique_ptr<mtsb_manifold,
                    HandleDeleter<mtsb_manifold, mtsb_manifold_destroy>>;
using SweepPtr =
    std::unique_ptr<mtsb_eigen_sweep,
                    HandleDeleter<mtsb_eigen_sweep, mtsb_eigen_sweep_destroy>>;
using BlowupPtr =
    std::unique_ptr<mtsb_blowup,
                    HandleDeleter<mtsb_blowup, mtsb_blowup_destroy>>;
using PoincarePtr =
    std::unique_ptr<mtsb_poincare,
                    HandleDeleter<mtsb_poincare, mtsb_poincare_destroy>>;
using SyncPtr =
    std::unique_ptr<mtsb_sync_report,
                    HandleDeleter<mtsb_sync_report, mtsb_sync_report_destroy>>;

// ---------------------------------------------------------------------------
// Output helpers
// ---------------------------------------------------------------------------

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

// A rectangular result table rendered as CSV or as a JSON array of objects.
class Table {
 public:
  explicit Table(std::vector<std::string> columns)
      : columns_(std::move(columns)) {}

  Table& row() {
    rows_.emplace_back();
    return *this;
  }
  Table& add(double v) {
    rows_.back().push_back(v);
    return *this;
  }
  Table& add(const std::string& v) {
    rows_.back().push_back(v);
    return *this;
  }
  Table& add(long long v) {
    rows_.back().push_back(v);
    return *this;
  }
  Table& add(bool v) {
    rows_.back().push_back(v);
    return *this;
  }

  std::string render_csv() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < columns_.size(); ++i)
      os << (i ? "," : "") << csv_escape(columns_[i]);
    os << "\n";
    for (const auto& r : rows_) {
      for (std::size_t i = 0; i < r.size(); ++i) {
        if (i) os << ",";
        os << cell_csv(r[i]);
      }
      os << "\n";
    }
    return os.str();
  }

  json render_json() const {
    json arr = json::array();
    for (const auto& r : rows_) {
      json obj = json::object();
      for (std::size_t i = 0; i < r.size(); ++i) obj[columns_[i]] = r[i];
      arr.push_back(obj);
    }
    return arr;
  }

 private:
  static std::string cell_csv(const json& v) {
    if (v.is_number_float()) return fmt_double(v.get<double>());
    if (v.is_boolean()) return v.get<bool>() ? "1" : "0";
    if (v.is_string()) return csv_escape(v.get<std::string>());
    return v.dump();
  }

  std::vector<std::string> columns_;
  std::vector<std::vector<json>> rows_;
};

void write_file_atomic_cli(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path().empty() ? "."
                                                    : path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) fail("cannot open " + tmp.string() + " for writing");
    os << content;
    if (!os.flush()) fail("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    fail("rename failed for " + path.string() + ": " + ec.message());
  }
}

std::string utc_timestamp() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---------------------------------------------------------------------------
// Shared options and run context
// ---------------------------------------------------------------------------

struct CommonOptions {
  double G = std::nan("");  // NaN = keep the parameter-set value
  std::string params_file;
  std::vector<std::string> sets;  // key=value overrides
  std::string out_dir = "out";
  std::string format = "csv";
  unsigned jobs = 1;
  std::uint64_t seed = 10;
  double rtol = 0.0;  // <= 0: library default
  double atol = 0.0;
  bool gnuplot = false;
};

void add_common_flags(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--G", o.G, "glucose level (overrides --params/--set)");
  cmd->add_option("--params", o.params_file,
                  "parameter file with 'key = value' lines");
  cmd->add_option("--set", o.sets,
                  "parameter override key=value (repeatable)");
  cmd->add_option("--out", o.out_dir, "output directory")
      ->envname("MTSB_OUT")
      ->capture_default_str();
  cmd->add_option("--format", o.format, "table format: csv or json")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  cmd->add_option("--jobs", o.jobs, "worker threads for sweeps")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--seed", o.seed, "seed for heterogeneity draws")
      ->capture_default_str();
  cmd->add_option("--rtol", o.rtol, "integrator relative tolerance");
  cmd->add_option("--atol", o.atol, "integrator absolute tolerance");
  cmd->add_flag("--gnuplot", o.gnuplot, "also emit a gnuplot script");
}

// Owns the resolved parameter set and collects outputs for the manifest.
class RunContext {
 public:
  RunContext(std::string command, const CommonOptions& o)
      : command_(std::move(command)), opt_(o), params_(mtsb_params_create()) {
    if (!params_) fail("out of memory");
    if (!o.params_file.empty())
      check(mtsb_params_load_file(params_.get(), o.params_file.c_str()),
            "--params");
    for (const std::string& kv : o.sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos)
        fail("--set expects key=value, got '" + kv + "'");
      const std::string key = kv.substr(0, eq);
      double value = 0.0;
      try {
        std::size_t pos = 0;
        value = std::stod(kv.substr(eq + 1), &pos);
        if (pos != kv.size() - eq - 1) throw std::invalid_argument("");
      } catch (const std::exception&) {
        fail("--set " + key + ": not a number: '" + kv.substr(eq + 1) + "'");
      }
      check(mtsb_params_set(params_.get(), key.c_str(), value), "--set");
    }
    if (!std::isnan(o.G))
      check(mtsb_params_set(params_.get(), "G", o.G), "--G");
  }

  const mtsb_params* params() const { return params_.get(); }
  ParamsPtr clone_params() const {
    ParamsPtr p(mtsb_params_clone(params_.get()));
    if (!p) fail("out of memory");
    return p;
  }
  const CommonOptions& opt() const { return opt_; }

  mtsb_solver_options solver() const {
    mtsb_solver_options s{};
    s.rtol = opt_.rtol;
    s.atol = opt_.atol;
    return s;
  }

  double param(const char* key) const {
    double v = 0.0;
    check(mtsb_params_get(params_.get(), key, &v), key);
    return v;
  }

  json resolved_parameters() const {
    json obj = json::object();
    for (std::size_t i = 0; i < mtsb_params_key_count(); ++i) {
      const char* key = mtsb_params_key(i);
      obj[key] = param(key);
    }
    return obj;
  }

  // Base config echoed into summary and manifest.
  json& config() { return config_; }

  void write_table(const std::string& stem, const Table& t) {
    if (opt_.format == "json") {
      json j = t.render_json();
      write_named(stem + ".json", j.dump(2) + "\n");
    } else {
      write_named(stem + ".csv", t.render_csv());
    }
  }

  void write_summary(const json& results) {
    json s = json::object();
    s["schema_version"] = kSchemaVersion;
    s["command"] = command_;
    s["config"] = config_;
    s["results"] = results;
    write_named("summary.json", s.dump(2) + "\n");
  }

  void write_gnuplot(const std::string& script) {
    if (opt_.gnuplot) write_named("plot.gp", script);
  }

  // The manifest is the only output carrying a timestamp.
  void write_manifest() {
    json m = json::object();
    m["schema_version"] = kSchemaVersion;
    m["command"] = command_;
    m["library_version"] = mtsb_version();
    m["created_utc"] = utc_timestamp();
    m["config"] = config_;
    m["outputs"] = outputs_;
    write_named("manifest.json", m.dump(2) + "\n");
  }

  void finish_config() {
    config_["command"] = command_;
    config_["out"] = opt_.out_dir;
    config_["format"] = opt_.format;
    config_["jobs"] = opt_.jobs;
    config_["seed"] = opt_.seed;
    config_["rtol"] = opt_.rtol > 0 ? json(opt_.rtol) : json(nullptr);
    config_["atol"] = opt_.atol > 0 ? json(opt_.atol) : json(nullptr);
    config_["params_file"] =
        opt_.params_file.empty() ? json(nullptr) : json(opt_.params_file);
    config_["set"] = opt_.sets;
    config_["parameters"] = resolved_parameters();
  }

 private:
  void write_named(const std::string& name, const std::string& content) {
    write_file_atomic_cli(fs::path(opt_.out_dir) / name, content);
    outputs_.push_back(name);
  }

  std::string command_;
  CommonOptions opt_;
  ParamsPtr params_;
  json config_ = json::object();
  json outputs_ = json::array();
};

// Deterministic worker pool: tasks indexed 0..n-1, results collated by index.
void parallel_for(std::size_t n, unsigned jobs,
                  const std::function<void(std::size_t)>& body) {
  jobs = std::max(1u, jobs);
  if (jobs == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex err_mutex;
  std::vector<std::thread> workers;
  const unsigned count = std::min<std::size_t>(jobs, n);
  workers.reserve(count);
  for (unsigned w = 0; w < count; ++w)
    workers.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  for (auto& w : workers) w.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::vector<double> grid_values(double from, double to, double step) {
  if (step <= 0.0) fail("--step must be positive");
  if (to < from) fail("range end below start");
  std::vector<double> v;
  const auto n = static_cast<std::size_t>((to - from) / step + 1e-9);
  for (std::size_t i = 0; i <= n; ++i) v.push_back(from + double(i) * step);
  return v;
}

std::vector<double> fetch_crossings(const mtsb_trajectory* t,
                                    std::size_t component, double level,
                                    int direction, double t_min) {
  std::size_t count = 0;
  check(mtsb_trajectory_crossings(t, component, level, direction, t_min,
                                  nullptr, 0, &count),
        "crossing scan");
  std::vector<double> times(count);
  if (count)
    check(mtsb_trajectory_crossings(t, component, level, direction, t_min,
                                    times.data(), count, &count),
          "crossing scan");
  return times;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateOptions {
  double t_min = 20.0;
  double record_dt = 50.0;
  double section_v = -59.0;
  std::vector<double> ic;
};

int cmd_simulate(const CommonOptions& common, const SimulateOptions& so) {
  RunContext ctx("simulate", common);
  ctx.config()["t_min"] = so.t_min;
  ctx.config()["record_dt_ms"] = so.record_dt;
  ctx.config()["section_v"] = so.section_v;
  ctx.config()["ic"] = so.ic.empty() ? json(nullptr) : json(so.ic);
  ctx.finish_config();

  if (!so.ic.empty() && so.ic.size() != 5)
    fail("--ic expects 5 comma-separated values (v,u,x,y,z)");

  const double t1 = so.t_min * 60000.0;
  const mtsb_solver_options solver = ctx.solver();
  mtsb_trajectory* raw = nullptr;
  check(mtsb_simulate(ctx.params(), 0.0, t1, so.record_dt, &solver,
                      so.ic.empty() ? nullptr : so.ic.data(), &raw),
        "simulate");
  TrajectoryPtr traj(raw);

  Table table({"t", "v", "u", "x", "y", "z"});
  const std::size_t n = mtsb_trajectory_size(traj.get());
  const double* times = mtsb_trajectory_times(traj.get());
  const double* states = mtsb_trajectory_states(traj.get());
  for (std::size_t i = 0; i < n; ++i) {
    table.row().add(times[i]);
    for (int c = 0; c < 5; ++c) table.add(states[i * 5 + c]);
  }
  ctx.write_table("trajectory", table);

  // Burst accounting: an onset is an upward crossing of the section level; a
  // burst is complete when the active phase ends (downward crossing) before
  // the end of the run.
  const auto onsets =
      fetch_crossings(traj.get(), 0, so.section_v, +1, 0.0);
  const auto offsets =
      fetch_crossings(traj.get(), 0, so.section_v, -1, 0.0);
  std::size_t complete = 0;
  for (double on : onsets)
    if (std::any_of(offsets.begin(), offsets.end(),
                    [on](double off) { return off > on; }))
      ++complete;
  json results;
  results["samples"] = n;
  results["onsets_ms"] = onsets;
  results["complete_bursts"] = complete;
  if (onsets.size() >= 2) {
    results["mean_period_min"] =
        (onsets.back() - onsets.front()) / double(onsets.size() - 1) / 60000.0;
  } else {
    results["mean_period_min"] = nullptr;
  }
  ctx.write_summary(results);
  ctx.write_gnuplot(
      "set datafile separator ','\n"
      "set key autotitle columnhead\n"
      "set xlabel 't (ms)'\nset ylabel 'v (mV)'\n"
      "plot 'trajectory.csv' using 1:2 with lines title 'v'\n");
  ctx.write_manifest();
  return kExitOk;
}

// ---------------------------------------------------------------------------
// manifold
// ---------------------------------------------------------------------------

struct ManifoldOptions {
  std::string kind = "C1";
  double v_from = -75.0, v_to = -25.0;
  double x_from = 0.02, x_to = 0.25;
  double z_from = 60.0, z_to = 110.0;
  std::size_t n1 = 101, n2 = 101;
  double z_slice = 84.72;
};

int cmd_manifold(const CommonOptions& common, const ManifoldOptions& mo) {
  RunContext ctx("manifold", common);
  const bool is_c = mo.kind == "C";
  ctx.config()["kind"] = mo.kind;
  ctx.config()["v_from"] = mo.v_from;
  ctx.config()["v_to"] = mo.v_to;
  ctx.config()[is_c ? "x_from" : "z_from"] = is_c ? mo.x_from : mo.z_from;
  ctx.config()[is_c ? "x_to" : "z_to"] = is_c ? mo.x_to : mo.z_to;
  ctx.config()["n1"] = mo.n1;
  ctx.config()["n2"] = mo.n2;
  if (is_c) ctx.config()["z_slice"] = mo.z_slice;
  ctx.finish_config();

  mtsb_manifold* raw = nullptr;
  check(mtsb_sample_manifold(ctx.params(),
                             is_c ? MTSB_MANIFOLD_C : MTSB_MANIFOLD_C1,
                             mo.v_from, mo.v_to,
                             is_c ? mo.x_from : mo.z_from,
                             is_c ? mo.x_to : mo.z_to, mo.n1, mo.n2,
                             mo.z_slice, &raw),
        "manifold sampling");
  ManifoldPtr m(raw);

  Table table({"axis1", "axis2", "v", "u", "x", "y", "z", "residual"});
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < mtsb_manifold_count(m.get()); ++i) {
    double a1 = 0, a2 = 0, st[5], res = 0;
    int ok = 0;
    check(mtsb_manifold_node(m.get(), i, &a1, &a2, st, &res, &ok),
          "manifold node");
    if (!ok) {
      ++skipped;
      continue;
    }
    table.row().add(a1).add(a2);
    for (double v : st) table.add(v);
    table.add(res);
  }
  ctx.write_table("manifold", table);

  Table fold({"v", "u", "x", "y", "z"});
  for (std::size_t i = 0; i < mtsb_manifold_fold_count(m.get()); ++i) {
    double st[5];
    check(mtsb_manifold_fold_point(m.get(), i, st), "fold point");
    fold.row();
    for (double v : st) fold.add(v);
  }
  ctx.write_table("fold", fold);

  json results;
  results["axis1"] = mtsb_manifold_axis_name(m.get(), 0);
  results["axis2"] = mtsb_manifold_axis_name(m.get(), 1);
  results["nodes"] = mtsb_manifold_count(m.get());
  results["skipped_nodes"] = skipped;
  results["fold_points"] = mtsb_manifold_fold_count(m.get());
  ctx.write_summary(results);
  ctx.write_gnuplot(
      "set datafile separator ','\n"
      "set key autotitle columnhead\n"
      "set xlabel 'axis1'\nset ylabel 'axis2'\nset zlabel 'x'\n"
      "splot 'manifold.csv' using 1:2:5 with points pt 7 ps 0.3, \\\n"
      "      'fold.csv' using 1:5:3 with points pt 7 ps 1 title 'fold'\n");
  ctx.write_manifest();
  return kExitOk;
}

// ---------------------------------------------------------------------------
// psp
// ---------------------------------------------------------------------------

struct PspOptions {
  double guess_v = -60.0;
  double guess_x = -1.0;
  double g_from = std::nan(""), g_to = std::nan(""), g_step = 0.25;
};

json psp_to_json(const mtsb_psp_result& r) {
  json j;
  j["location"] = {{"v", r.state[0]},
                   {"u", r.state[1]},
                   {"x", r.state[2]},
                   {"y", r.state[3]},
                   {"z", r.state[4]}};
  j["G"] = r.glucose;
  j["eigenvalues"] = json::array({{{"re", r.eig_re[0]}, {"im", r.eig_im[0]}},
                                  {{"re", r.eig_re[1]}, {"im", r.eig_im[1]}}});
  j["classification"] = mtsb_class_name(r.classification);
  j["assumption_ok"] = r.assumption_ok != 0;
  j["assumption"] = {{"det2", r.det2},
                     {"h_vv", r.h_vv},
                     {"g2_0", r.g2_0},
                     {"h_x", r.h_x},
                     {"f_v", r.f_v}};
  return j;
}

void psp_row(Table& t, double G, bool ok, const mtsb_psp_result& r,
             const std::string& error) {
  t.row().add(G).add(ok);
  for (double v : r.state) t.add(v);
  t.add(r.eig_re[0]).add(r.eig_im[0]).add(r.eig_re[1]).add(r.eig_im[1]);
  t.add(ok ? std::string(mtsb_class_name(r.classification)) : std::string());
  t.add(error);
}

int cmd_psp(const CommonOptions& common, const PspOptions& po) {
  RunContext ctx("psp", common);
  const bool sweep = !std::isnan(po.g_from) && !std::isnan(po.g_to);
  ctx.config()["guess_v"] = po.guess_v;
  ctx.config()["guess_x"] = po.guess_x;
  if (sweep) {
    ctx.config()["G_from"] = po.g_from;
    ctx.config()["G_to"] = po.g_to;
    ctx.config()["step"] = po.g_step;
  }
  ctx.finish_config();

  Table table({"G", "ok", "v", "u", "x", "y", "z", "eig1_re", "eig1_im",
               "eig2_re", "eig2_im", "classification", "error"});
  json results;
  int exit_code = kExitOk;

  if (sweep) {
    mtsb_eigen_sweep* raw = nullptr;
    check(mtsb_eigen_sweep_run(ctx.params(), po.g_from, po.g_to, po.g_step,
                               &raw),
          "eigenvalue sweep");
    SweepPtr s(raw);
    std::size_t failures = 0;
    json rows = json::array();
    for (std::size_t i = 0; i < mtsb_eigen_sweep_count(s.get()); ++i) {
      double G = 0;
      int ok = 0;
      mtsb_psp_result r{};
      char err[256];
      check(mtsb_eigen_sweep_row(s.get(), i, &G, &ok, &r, err, sizeof err),
            "sweep row");
      psp_row(table, G, ok != 0, r, err);
      if (ok) {
        json row = psp_to_json(r);
        rows.push_back(row);
      } else {
        ++failures;
        rows.push_back({{"G", G}, {"error", err}});
      }
    }
    results["rows"] = rows;
    results["failures"] = failures;
    if (failures) exit_code = kExitPartial;
  } else {
    mtsb_psp_result r{};
    check(mtsb_find_psp(ctx.params(), po.guess_v, po.guess_x, &r),
          "stationary-point search");
    psp_row(table, r.glucose, true, r, "");
    results = psp_to_json(r);
  }

  ctx.write_table("psp", table);
  ctx.write_summary(results);
  ctx.write_gnuplot(
      "set datafile separator ','\n"
      "set key autotitle columnhead\n"
      "set xlabel 'G'\nset ylabel 'eigenvalue real part'\n"
      "plot 'psp.csv' using 1:8 with linespoints title 'eig1_re', \\\n"
      "     'psp.csv' using 1:10 with linespoints title 'eig2_re'\n");
  ctx.write_manifest();
  return exit_code;
}

// ---------------------------------------------------------------------------
// normalform
// ---------------------------------------------------------------------------

int cmd_normalform(const CommonOptions& common) {
  RunContext ctx("normalform", common);
  ctx.finish_config();

  const std::size_t n = mtsb_coeff_count();
  std::vector<double> values(n);
  check(mtsb_normal_form(ctx.params(), values.data()), "normal form");

  Table table({"name", "value"});
  json coeffs = json::object();
  for (std::size_t i = 0; i < n; ++i) {
    const char* name = mtsb_coeff_name(i);
    table.row().add(std::string(name)).add(values[i]);
    coeffs[name] = values[i];
  }
  ctx.write_table("coefficients", table);

  mtsb_chart_scaling sc{};
  check(mtsb_chart_scaling_at(ctx.params(), &sc), "chart scaling");
  json results;
  results["coefficients"] = coeffs;
  results["chart_scaling"] = {{"r3", sc.r3},     {"fac_v", sc.fac_v},
                              {"fac_x", sc.fac_x}, {"fac_y", sc.fac_y},
                              {"fac_z", sc.fac_z}, {"fac_t", sc.fac_t}};
  ctx.write_summary(results);
  ctx.write_manifest();
  return kExitOk;
}

// ---------------------------------------------------------------------------
// blowup
// ---------------------------------------------------------------------------

struct BlowupOptions {
  std::vector<double> r3;
  double t3_from = -5.0;
  double t3_to = 3000.0;
  double ic_offset = std::nan("");  // NaN: auto (quarter of the v3 slope)
  double z30 = 0.0;
  double dt3 = 0.5;
};

int cmd_blowup(const CommonOptions& common, const BlowupOptions& bo) {
  RunContext ctx("blowup", common);

  std::vector<double> r3 = bo.r3;
  if (r3.empty()) {
    const double r3_ref = std::sqrt(ctx.param("eps"));
    r3 = {r3_ref * 1e-3, r3_ref * 1e-2, r3_ref * 1e-1, r3_ref};
  }
  double ic_offset = bo.ic_offset;
  if (std::isnan(ic_offset)) {
    std::vector<double> values(mtsb_coeff_count());
    check(mtsb_normal_form(ctx.params(), values.data()), "normal form");
    double b1 = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i)
      if (std::string(mtsb_coeff_name(i)) == "b1") b1 = values[i];
    ic_offset = b1 / 4.0;
  }
  ctx.config()["r3"] = r3;
  ctx.config()["t3_from"] = bo.t3_from;
  ctx.config()["t3_to"] = bo.t3_to;
  ctx.config()["ic_offset"] = ic_offset;
  ctx.config()["z30"] = bo.z30;
  ctx.config()["dt3"] = bo.dt3;
  ctx.finish_config();

  mtsb_blowup* raw = nullptr;
  check(mtsb_blowup_run(ctx.params(), r3.data(), r3.size(), bo.t3_from,
                        bo.t3_to, ic_offset, bo.z30, bo.dt3, &raw),
        "chart integration");
  BlowupPtr b(raw);

  Table table({"r3", "t3", "v3", "x3", "y3", "z3", "branch"});
  json runs = json::array();
  bool partial = false;
  for (std::size_t i = 0; i < mtsb_blowup_count(b.get()); ++i) {
    double run_r3 = 0, escape = 0;
    int completed = 0, oscillations = 0, turned = 0;
    check(mtsb_blowup_summary(b.get(), i, &run_r3, &completed, &escape,
                              &oscillations, &turned),
          "run summary");
    for (int branch = 0; branch < 2; ++branch) {
      const double *t3 = nullptr, *v3 = nullptr, *x3 = nullptr, *y3 = nullptr,
                   *z3 = nullptr;
      std::size_t count = 0;
      check(mtsb_blowup_samples(b.get(), i, branch, &t3, &v3, &x3, &y3, &z3,
                                &count),
            "run samples");
      const std::string name = branch == 0 ? "perturbed" : "special";
      for (std::size_t j = 0; j < count; ++j)
        table.row()
            .add(run_r3)
            .add(t3[j])
            .add(v3[j])
            .add(x3[j])
            .add(y3[j])
            .add(z3[j])
            .add(name);
    }
    json run;
    run["r3"] = run_r3;
    run["completed"] = completed != 0;
    run["escape_t3"] = std::isnan(escape) ? json(nullptr) : json(escape);
    run["oscillations"] = oscillations;
    run["turned"] = turned != 0;
    runs.push_back(run);
    if (!completed) partial = true;
  }
  ctx.write_table("blowup", table);
  json results;
  results["runs"] = runs;
  ctx.write_summary(results);
  ctx.write_gnuplot(
      "set datafile separator ','\n"
      "set key autotitle columnhead\n"
      "set xlabel 't3'\nset ylabel 'v3'\n"
      "plot 'blowup.csv' using 2:(strcol(7) eq 'perturbed' ? $3 : 1/0):1 "
      "with points palette ps 0.3 title 'perturbed (color: r3)', \\\n"
      "     'blowup.csv' using 2:(strcol(7) eq 'special' ? $3 : 1/0) "
      "with lines lc 'black' title 'separatrix'\n");
  ctx.write_manifest();
  return partial ? kExitPartial : kExitOk;
}

// ---------------------------------------------------------------------------
// poincare
// ---------------------------------------------------------------------------

struct PoincareOptions {
  double section_v = -59.0;
  double t_min = 80.0;
  std::string estimator = "mean";
};

int cmd_poincare(const CommonOptions& common, const PoincareOptions& po) {
  RunContext ctx("poincare", common);
  ctx.config()["section_v"] = po.section_v;
  ctx.config()["t_min"] = po.t_min;
  ctx.config()["estimator"] = po.estimator;
  ctx.finish_config();

  const mtsb_solver_options solver = ctx.solver();
  mtsb_poincare* raw = nullptr;
  check(mtsb_poincare_map(ctx.params(), po.section_v, po.t_min * 60000.0,
                          &solver, po.estimator == "last" ? 1 : 0, &raw),
        "return map");
  PoincarePtr r(raw);

  Table table({"t_ms", "x", "y"});
  for (std::size_t i = 0; i < mtsb_poincare_crossing_count(r.get()); ++i) {
    double t = 0, x = 0, y = 0;
    check(mtsb_poincare_crossing(r.get(), i, &t, &x, &y), "crossing");
    table.row().add(t).add(x).add(y);
  }
  ctx.write_table("poincare", table);

  double fx = 0, fy = 0, md = 0, pm = 0;
  int contracting = 0, stable = 0, insufficient = 0;
  check(mtsb_poincare_stats(r.get(), &fx, &fy, &md, &contracting, &stable,
                            &insufficient, &pm),
        "stats");
  json results;
  results["crossings"] = mtsb_poincare_crossing_count(r.get());
  results["insufficient"] = insufficient != 0;
  if (!insufficient) {
    results["fixed_point"] = {{"x", fx}, {"y", fy}};
    results["max_dist"] = md;
    results["contracting"] = contracting != 0;
    results["stable"] = stable != 0;
    results["period_min"] = pm;
  }
  ctx.write_summary(results);
  ctx.write_gnuplot(
      "set datafile separator ','\n"
      "set key autotitle columnhead\n"
      "set xlabel 'x'\nset ylabel 'y'\n"
      "plot 'poincare.csv' using 2:3 with points pt 7 title 'returns'\n");
  ctx.write_manifest();
  return insufficient ? kExitPartial : kExitOk;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

struct SweepOptions {
  double g_from = 7.0, g_to = 13.0, step = 0.5;
  double section_v = -59.0;
  double t_min = 80.0;
};

int cmd_sweep(const CommonOptions& common, const SweepOptions& so) {
  RunContext ctx("sweep", common);
  ctx.config()["G_from"] = so.g_from;
  ctx.config()["G_to"] = so.g_to;
  ctx.config()["step"] = so.step;
  ctx.config()["section_v"] = so.section_v;
  ctx.config()["t_min"] = so.t_min;
  ctx.finish_config();

  const std::vector<double> gs = grid_values(so.g_from, so.g_to, so.step);
  struct Row {
    double G = 0, fx = 0, fy = 0, md = 0, pm = 0;
    int stable = 0, insufficient = 0;
    std::size_t crossings = 0;
  };
  std::vector<Row> rows(gs.size());
  const mtsb_solver_options solver = ctx.solver();

  parallel_for(gs.size(), common.jobs, [&](std::size_t i) {
    ParamsPtr p = ctx.clone_params();
    check(mtsb_params_set(p.get(), "G", gs[i]), "G");
    mtsb_poincare* raw = nullptr;
    check(mtsb_poincare_map(p.get(), so.section_v, so.t_min * 60000.0,
                            &solver, 0, &raw),
          "return map");
    PoincarePtr r(raw);
    Row& row = rows[i];
    row.G = gs[i];
    row.crossings = mtsb_poincare_crossing_count(r.get());
    int contracting = 0;
    check(mtsb_poincare_stats(r.get(), &row.fx, &row.fy, &row.md,
                              &contracting, &row.stable, &row.insufficient,
                              &row.pm),
          "stats");
  });

  Table table({"G", "xstar", "ystar", "max_dist", "stable", "period_min"});
  json crossings = json::array();
  std::size_t flagged = 0;
  for (const Row& r : rows) {
    const double nan = std::nan("");
    if (r.insufficient) {
      ++flagged;
      table.row().add(r.G).add(nan).add(nan).add(nan).add(false).add(nan);
    } else {
      table.row()
          .add(r.G)
          .add(r.fx)
          .add(r.fy)
          .add(r.md)
          .add(r.stable != 0)
          .add(r.pm);
    }
    crossings.push_back(
        {{"G", r.G},
         {"crossings", r.crossings},
         {"insufficient", r.insufficient != 0}});
  }
  ctx.write_table("sweep", table);
  json results;
  results["rows"] = crossings;
  results["insufficient_count"] = flagged;
  ctx.write_summary(results);
  ctx.write_gnuplot(
      "set datafile separator ','\n"
      "set key autotitle columnhead\n"
      "set xlabel 'G'\nset ylabel 'period (min)'\n"
      "plot 'sweep.csv' using 1:6 with linespoints title 'period'\n");
  ctx.write_manifest();
  return flagged ? kExitPartial : kExitOk;
}

// ---------------------------------------------------------------------------
// linger
// ---------------------------------------------------------------------------

struct LingerOptions {
  double g_from = 7.0, g_to = 13.0, step = 0.5;
  bool single = false;
  double radius = 1.0;
  double section_v = -59.0;
  double t_min = 80.0;
  std::vector<double> scales;
  double k_ref = 0.005;
  double t_ref = 35000.0;
};

int cmd_linger(const CommonOptions& common, const LingerOptions& lo) {
  RunContext ctx("linger", common);
  std::vector<double> gs;
  if (lo.single) {
    gs.push_back(ctx.param("G"));
  } else {
    gs = grid_values(lo.g_from, lo.g_to, lo.step);
  }
  if (!lo.scales.empty() && lo.scales.size() != 4)
    fail("--scales expects 4 comma-separated values (v,x,y,z)");
  ctx.config()["G_values"] = gs;
  ctx.config()["radius"] = lo.radius;
  ctx.config()["section_v"] = lo.section_v;
  ctx.config()["t_min"] = lo.t_min;
  ctx.config()["scales"] =
      lo.scales.empty() ? json(nullptr) : json(lo.scales);
  ctx.config()["k_ref"] = lo.k_ref;
  ctx.config()["t_ref_ms"] = lo.t_ref;
  ctx.finish_config();

  struct Row {
    double G = 0, t_linger = 0, k = 0;
    std::string error;
  };
  std::vector<Row> rows(gs.size());
  parallel_for(gs.size(), common.jobs, [&](std::size_t i) {
    Row& row = rows[i];
    row.G = gs[i];
    ParamsPtr p = ctx.clone_params();
    check(mtsb_params_set(p.get(), "G", gs[i]), "G");
    double t = 0;
    const mtsb_status st = mtsb_linger_time(
        p.get(), lo.radius, lo.section_v, lo.t_min * 60000.0,
        lo.scales.empty() ? nullptr : lo.scales.data(), &t);
    if (st != MTSB_OK) {
      row.error = mtsb_last_error();
      return;
    }
    row.t_linger = t;
    check(mtsb_coupling_from_linger(t, lo.k_ref, lo.t_ref, &row.k),
          "coupling");
  });

  Table linger({"G", "t_linger_ms"});
  Table coupling({"G", "k"});
  json errors = json::array();
  for (const Row& r : rows) {
    if (!r.error.empty()) {
      errors.push_back({{"G", r.G}, {"error", r.error}});
      continue;
    }
    linger.row().add(r.G).add(r.t_linger);
    coupling.row().add(r.G).add(r.k);
  }
  ctx.write_table("linger", linger);
  ctx.write_table("coupling", coupling);
  json results;
  results["errors"] = errors;
  ctx.write_summary(results);
  ctx.write_gnuplot(
      "set datafile separator ','\n"
      "set key autotitle columnhead\n"
      "set xlabel 'G'\nset ylabel 't_linger (ms)'\n"
      "plot 'linger.csv' using 1:2 with linespoints title 'linger time'\n");
  ctx.write_manifest();
  return errors.empty() ? kExitOk : kExitPartial;
}

// ---------------------------------------------------------------------------
// network
// ---------------------------------------------------------------------------

struct NetworkOptions {
  std::size_t n_cells = 6;
  double k = 0.005;
  double spread_tol = 0.0;
  double t_min = 50.0;
  double transient_min = 60.0;
  double section_v = -59.0;
  bool save_traj = false;
  double record_dt = 100.0;
  double g_from = 7.0, g_to = 13.0, step = 1.0;
  bool sweep = false; // set when --G-from is given: one row per glucose level
};

json heterogeneity_json(const RunContext& ctx, std::size_t n,
                        std::uint64_t seed) {
  json cells = json::array();
  std::vector<double> a5(n), kr(n);
  check(mtsb_heterogeneous_values(ctx.params(), n, seed, "a5", a5.data()),
        "heterogeneity");
  check(mtsb_heterogeneous_values(ctx.params(), n, seed, "k_r", kr.data()),
        "heterogeneity");
  for (std::size_t i = 0; i < n; ++i)
    cells.push_back({{"a5", a5[i]}, {"k_r", kr[i]}});
  return cells;
}

// One coupled run per glucose level; emits one table row per G so the
// period-vs-G relationship of the heterogeneous network plots directly.
int cmd_network_sweep(const CommonOptions& common, const NetworkOptions& no) {
  RunContext ctx("network", common);
  const std::vector<double> gs = grid_values(no.g_from, no.g_to, no.step);
  ctx.config()["G_values"] = gs;
  ctx.config()["N"] = no.n_cells;
  ctx.config()["k"] = no.k;
  ctx.config()["spread_tol_ms"] = no.spread_tol;
  ctx.config()["t_min"] = no.t_min;
  ctx.config()["transient_min"] = no.transient_min;
  ctx.config()["section_v"] = no.section_v;
  ctx.config()["cells"] = heterogeneity_json(ctx, no.n_cells, common.seed);
  ctx.finish_config();

  struct Row {
    double G = 0, k = 0, g_c = 0, spread = 0, tol = 0;
    int is_sync = 0;
    std::vector<double> periods;
    std::string error;
  };
  std::vector<Row> rows(gs.size());
  const mtsb_solver_options solver = ctx.solver();
  parallel_for(gs.size(), common.jobs, [&](std::size_t i) {
    Row& row = rows[i];
    row.G = gs[i];
    ParamsPtr p = ctx.clone_params();
    check(mtsb_params_set(p.get(), "G", gs[i]), "G");
    mtsb_sync_report* raw = nullptr;
    const mtsb_status st = mtsb_network_sync(
        p.get(), no.n_cells, common.seed, no.k, no.t_min * 60000.0,
        no.spread_tol, no.section_v, no.transient_min * 60000.0, &solver,
        &raw);
    if (st != MTSB_OK) {
      row.error = mtsb_last_error();
      return;
    }
    SyncPtr rep(raw);
    check(mtsb_sync_stats(rep.get(), &row.k, &row.g_c, &row.spread, &row.tol,
                          &row.is_sync),
          "sync stats");
    row.periods.resize(no.n_cells);
    for (std::size_t c = 0; c < no.n_cells; ++c)
      check(mtsb_sync_cell_period(rep.get(), c, &row.periods[c]),
            "cell period");
  });

  std::vector<std::string> cols = {"G", "k", "g_c", "spread_ms",
                                   "synchronized"};
  for (std::size_t c = 1; c <= no.n_cells; ++c)
    cols.push_back("period_cell" + std::to_string(c));
  Table table(cols);
  json summary_rows = json::array();
  json errors = json::array();
  for (const Row& row : rows) {
    if (!row.error.empty()) {
      errors.push_back({{"G", row.G}, {"error", row.error}});
      continue;
    }
    table.row().add(row.G).add(row.k).add(row.g_c).add(row.spread).add(
        row.is_sync != 0);
    json periods = json::array();
    for (double pm : row.periods) {
      table.add(pm);
      periods.push_back(std::isnan(pm) ? json(nullptr) : json(pm));
    }
    summary_rows.push_back(
        {{"G", row.G},
         {"k", row.k},
         {"g_c", row.g_c},
         {"spread_ms", std::isinf(row.spread) ? json(nullptr)
                                              : json(row.spread)},
         {"tolerance_ms", row.tol},
         {"synchronized", row.is_sync != 0},
         {"periods_min", periods}});
  }
  ctx.write_table("network", table);
  json results;
  results["rows"] = summary_rows;
  results["errors"] = errors;
  ctx.write_summary(results);
  std::string plot =
      "set datafile separator ','\n"
      "set key autotitle columnhead\n"
      "set xlabel 'G (mM)'\nset ylabel 'period (min)'\nplot ";
  for (std::size_t c = 1; c <= no.n_cells; ++c)
    plot += std::string(c > 1 ? ", " : "") + "'network.csv' using 1:" +
            std::to_string(5 + c) + " with linespoints";
  ctx.write_gnuplot(plot + "\n");
  ctx.write_manifest();
  return errors.empty() ? kExitOk : kExitPartial;
}

int cmd_network(const CommonOptions& common, const NetworkOptions& no) {
  if (no.sweep) return cmd_network_sweep(common, no);
  RunContext ctx("network", common);
  ctx.config()["N"] = no.n_cells;
  ctx.config()["k"] = no.k;
  ctx.config()["spread_tol_ms"] = no.spread_tol;
  ctx.config()["t_min"] = no.t_min;
  ctx.config()["transient_min"] = no.transient_min;
  ctx.config()["section_v"] = no.section_v;
  ctx.config()["cells"] = heterogeneity_json(ctx, no.n_cells, common.seed);
  ctx.finish_config();

  const mtsb_solver_options solver = ctx.solver();
  mtsb_sync_report* raw = nullptr;
  check(mtsb_network_sync(ctx.params(), no.n_cells, common.seed, no.k,
                          no.t_min * 60000.0, no.spread_tol, no.section_v,
                          no.transient_min * 60000.0, &solver, &raw),
        "network run");
  SyncPtr rep(raw);

  double k = 0, g_c = 0, spread = 0, tol = 0;
  int is_sync = 0;
  check(mtsb_sync_stats(rep.get(), &k, &g_c, &spread, &tol, &is_sync),
        "sync stats");

  std::vector<std::string> cols = {"G", "k", "g_c", "spread_ms",
                                   "synchronized"};
  for (std::size_t c = 1; c <= no.n_cells; ++c)
    cols.push_back("period_cell" + std::to_string(c));
  Table table(cols);
  table.row().add(ctx.param("G")).add(k).add(g_c).add(spread).add(
      is_sync != 0);
  json periods = json::array();
  for (std::size_t c = 0; c < no.n_cells; ++c) {
    double pm = 0;
    check(mtsb_sync_cell_period(rep.get(), c, &pm), "cell period");
    table.add(pm);
    periods.push_back(std::isnan(pm) ? json(nullptr) : json(pm));
  }
  ctx.write_table("network", table);

  Table onsets({"cell", "onset_ms"});
  for (std::size_t c = 0; c < no.n_cells; ++c) {
    std::size_t count = 0;
    check(mtsb_sync_cell_onsets(rep.get(), c, nullptr, 0, &count), "onsets");
    std::vector<double> times(count);
    if (count)
      check(mtsb_sync_cell_onsets(rep.get(), c, times.data(), count, &count),
            "onsets");
    for (double t : times)
      onsets.row().add(static_cast<long long>(c + 1)).add(t);
  }
  ctx.write_table("onsets", onsets);

  if (no.save_traj) {
    mtsb_trajectory* traw = nullptr;
    check(mtsb_simulate_network(
              ctx.params(), no.n_cells, common.seed, no.k, 0.0,
              (no.transient_min + no.t_min) * 60000.0, no.record_dt, &solver,
              &traw),
          "network trajectory");
    TrajectoryPtr traj(traw);
    std::vector<std::string> tcols = {"t"};
    for (std::size_t c = 1; c <= no.n_cells; ++c)
      for (const char* name : {"v", "u", "x", "y", "z"})
        tcols.push_back(std::string(name) + "_" + std::to_string(c));
    Table ttab(tcols);
    const std::size_t n = mtsb_trajectory_size(traj.get());
    const std::size_t dim = mtsb_trajectory_dim(traj.get());
    const double* times = mtsb_trajectory_times(traj.get());
    const double* states = mtsb_trajectory_states(traj.get());
    for (std::size_t i = 0; i < n; ++i) {
      ttab.row().add(times[i]);
      for (std::size_t d = 0; d < dim; ++d) ttab.add(states[i * dim + d]);
    }
    ctx.write_table("network_traj", ttab);
  }

  json results;
  results["k"] = k;
  results["g_c"] = g_c;
  results["spread_ms"] = std::isinf(spread) ? json(nullptr) : json(spread);
  results["onsets_matched"] = !std::isinf(spread);
  results["tolerance_ms"] = tol;
  results["synchronized"] = is_sync != 0;
  results["periods_min"] = periods;
  ctx.write_summary(results);
  ctx.write_gnuplot(
      "set datafile separator ','\n"
      "set key autotitle columnhead\n"
      "set xlabel 'onset time (ms)'\nset ylabel 'cell'\n"
      "plot 'onsets.csv' using 2:1 with points pt 7 title 'burst onsets'\n");
  ctx.write_manifest();
  return kExitOk;
}

// ---------------------------------------------------------------------------
// sync (minimum synchronizing coupling over G)
// ---------------------------------------------------------------------------

struct SyncOptions {
  double g_from = 7.0, g_to = 13.0, step = 3.0;
  bool single = false;
  std::size_t n_cells = 6;
  double k_lo = 0.001, k_hi = 0.06;
  double spread_tol = 0.0;
  double t_min = 50.0;
  double transient_min = 60.0;
  double section_v = -59.0;
};

int cmd_sync(const CommonOptions& common, const SyncOptions& so) {
  RunContext ctx("sync", common);
  std::vector<double> gs;
  if (so.single) {
    gs.push_back(ctx.param("G"));
  } else {
    gs = grid_values(so.g_from, so.g_to, so.step);
  }
  ctx.config()["G_values"] = gs;
  ctx.config()["N"] = so.n_cells;
  ctx.config()["k_lo"] = so.k_lo;
  ctx.config()["k_hi"] = so.k_hi;
  ctx.config()["spread_tol_ms"] = so.spread_tol;
  ctx.config()["t_min"] = so.t_min;
  ctx.config()["transient_min"] = so.transient_min;
  ctx.config()["section_v"] = so.section_v;
  ctx.config()["cells"] = heterogeneity_json(ctx, so.n_cells, common.seed);
  ctx.finish_config();

  struct Row {
    double G = 0, k_min = 0, g_c = 0, spread = 0, tol = 0;
    int monotonic = 1;
    std::string error;
  };
  std::vector<Row> rows(gs.size());
  const mtsb_solver_options solver = ctx.solver();
  parallel_for(gs.size(), common.jobs, [&](std::size_t i) {
    Row& row = rows[i];
    row.G = gs[i];
    ParamsPtr p = ctx.clone_params();
    check(mtsb_params_set(p.get(), "G", gs[i]), "G");
    mtsb_sync_report* rep_raw = nullptr;
    const mtsb_status st = mtsb_min_sync_coupling(
        p.get(), so.n_cells, common.seed, so.k_lo, so.k_hi,
        so.t_min * 60000.0, so.spread_tol, so.section_v,
        so.transient_min * 60000.0, &solver, &row.k_min, &row.monotonic,
        &rep_raw);
    if (st != MTSB_OK) {
      row.error = mtsb_last_error();
      return;
    }
    SyncPtr rep(rep_raw);
    check(mtsb_sync_stats(rep.get(), nullptr, &row.g_c, &row.spread,
                          &row.tol, nullptr),
          "sync stats");
  });

  Table table(
      {"G", "k_min", "g_c", "spread_ms", "tolerance_ms", "monotonic"});
  json errors = json::array();
  json found = json::array();
  for (const Row& r : rows) {
    if (!r.error.empty()) {
      errors.push_back({{"G", r.G}, {"error", r.error}});
      continue;
    }
    table.row()
        .add(r.G)
        .add(r.k_min)
        .add(r.g_c)
        .add(r.spread)
        .add(r.tol)
        .add(r.monotonic != 0);
    found.push_back({{"G", r.G},
                     {"k_min", r.k_min},
                     {"g_c", r.g_c},
                     {"monotonic", r.monotonic != 0}});
  }
  ctx.write_table("sync", table);
  json results;
  results["rows"] = found;
  results["errors"] = errors;
  ctx.write_summary(results);
  ctx.write_gnuplot(
      "set datafile separator ','\n"
      "set key autotitle columnhead\n"
      "set xlabel 'G'\nset ylabel 'k_min (1/ms)'\n"
      "plot 'sync.csv' using 1:2 with linespoints title 'minimum coupling'\n");
  ctx.write_manifest();
  return errors.empty() ? kExitOk : kExitPartial;
}

} // namespace

// ---------------------------------------------------------------------------

int main(int argc, char** argv) {
  CLI::App app{
      "mtsb: slow-fast beta-cell dynamics toolkit (simulation, geometry, "
      "normal form, return maps, network synchronization)"};
  app.require_subcommand(1);

  CommonOptions common;
  SimulateOptions sim;
  ManifoldOptions mo;
  PspOptions po;
  BlowupOptions bo;
  PoincareOptions pc;
  SweepOptions sw;
  LingerOptions lg;
  NetworkOptions nw;
  SyncOptions sy;

  auto* c_sim = app.add_subcommand("simulate", "single-cell trajectory");
  add_common_flags(c_sim, common);
  c_sim->add_option("--t-min", sim.t_min, "simulated span (minutes)")
      ->capture_default_str();
  c_sim->add_option("--record-dt", sim.record_dt,
                    "sampling interval (ms; <= 0 stores every step)")
      ->capture_default_str();
  c_sim->add_option("--section-v", sim.section_v,
                    "burst-onset detection level (mV)")
      ->capture_default_str();
  c_sim->add_option("--ic", sim.ic, "initial state v,u,x,y,z")
      ->delimiter(',');

  auto* c_man = app.add_subcommand("manifold", "critical-manifold mesh");
  add_common_flags(c_man, common);
  c_man->add_option("--kind", mo.kind, "C (fast equilibria) or C1 (refined)")
      ->check(CLI::IsMember({"C", "C1"}))
      ->capture_default_str();
  c_man->add_option("--v-from", mo.v_from)->capture_default_str();
  c_man->add_option("--v-to", mo.v_to)->capture_default_str();
  c_man->add_option("--x-from", mo.x_from, "x range (kind C)")
      ->capture_default_str();
  c_man->add_option("--x-to", mo.x_to)->capture_default_str();
  c_man->add_option("--z-from", mo.z_from, "z range (kind C1)")
      ->capture_default_str();
  c_man->add_option("--z-to", mo.z_to)->capture_default_str();
  c_man->add_option("--n1", mo.n1, "mesh nodes along v")
      ->capture_default_str();
  c_man->add_option("--n2", mo.n2, "mesh nodes along the second axis")
      ->capture_default_str();
  c_man->add_option("--z-slice", mo.z_slice, "fixed z for kind C")
      ->capture_default_str();

  auto* c_psp = app.add_subcommand(
      "psp", "stationary point of the desingularized slow flow");
  add_common_flags(c_psp, common);
  c_psp->add_option("--guess-v", po.guess_v)->capture_default_str();
  c_psp->add_option("--guess-x", po.guess_x, "<= 0 for automatic")
      ->capture_default_str();
  c_psp->add_option("--G-from", po.g_from, "sweep start (enables sweep)");
  c_psp->add_option("--G-to", po.g_to, "sweep end");
  c_psp->add_option("--step", po.g_step, "sweep step")->capture_default_str();

  auto* c_nf =
      app.add_subcommand("normalform", "normal-form coefficient table");
  add_common_flags(c_nf, common);

  auto* c_bl = app.add_subcommand("blowup",
                                  "central-chart orbits vs the separatrix");
  add_common_flags(c_bl, common);
  c_bl->add_option("--r3", bo.r3,
                   "chart perturbation values (default: sqrt(eps) times "
                   "1e-3, 1e-2, 1e-1, 1)")
      ->delimiter(',');
  c_bl->add_option("--t3-from", bo.t3_from)->capture_default_str();
  c_bl->add_option("--t3-to", bo.t3_to)->capture_default_str();
  c_bl->add_option("--ic-offset", bo.ic_offset,
                   "x3 offset from the separatrix (default: b1/4)");
  c_bl->add_option("--z30", bo.z30)->capture_default_str();
  c_bl->add_option("--dt3", bo.dt3, "sample spacing")->capture_default_str();

  auto* c_pc = app.add_subcommand("poincare", "section return-map analysis");
  add_common_flags(c_pc, common);
  c_pc->add_option("--section-v", pc.section_v)->capture_default_str();
  c_pc->add_option("--t-min", pc.t_min, "analysis window (minutes)")
      ->capture_default_str();
  c_pc->add_option("--estimator", pc.estimator, "fixed point from mean|last")
      ->check(CLI::IsMember({"mean", "last"}))
      ->capture_default_str();

  auto* c_sw = app.add_subcommand("sweep", "fixed point and period over G");
  add_common_flags(c_sw, common);
  c_sw->add_option("--G-from", sw.g_from)->capture_default_str();
  c_sw->add_option("--G-to", sw.g_to)->capture_default_str();
  c_sw->add_option("--step", sw.step)->capture_default_str();
  c_sw->add_option("--section-v", sw.section_v)->capture_default_str();
  c_sw->add_option("--t-min", sw.t_min, "analysis window (minutes)")
      ->capture_default_str();

  auto* c_lg = app.add_subcommand(
      "linger", "quiescent-phase duration and coupling heuristic over G");
  add_common_flags(c_lg, common);
  c_lg->add_option("--G-from", lg.g_from)->capture_default_str();
  c_lg->add_option("--G-to", lg.g_to)->capture_default_str();
  c_lg->add_option("--step", lg.step)->capture_default_str();
  c_lg->add_flag("--single", lg.single, "one row at the resolved G");
  c_lg->add_option("--radius", lg.radius, "neighborhood radius")
      ->capture_default_str();
  c_lg->add_option("--section-v", lg.section_v)->capture_default_str();
  c_lg->add_option("--t-min", lg.t_min, "analysis window (minutes)")
      ->capture_default_str();
  c_lg->add_option("--scales", lg.scales,
                   "neighborhood scales v,x,y,z (default: calibrated)")
      ->delimiter(',');
  c_lg->add_option("--k-ref", lg.k_ref, "coupling anchor")
      ->capture_default_str();
  c_lg->add_option("--t-ref", lg.t_ref, "linger anchor (ms)")
      ->capture_default_str();

  auto* c_nw = app.add_subcommand(
      "network", "coupled heterogeneous run (single G or a G sweep)");
  add_common_flags(c_nw, common);
  c_nw->add_option("--N", nw.n_cells, "number of cells")
      ->capture_default_str();
  c_nw->add_option("--k", nw.k, "coupling strength (1/ms)")
      ->capture_default_str();
  c_nw->add_option("--spread-tol", nw.spread_tol,
                   "sync tolerance (ms; <= 0: 5% of median period)")
      ->capture_default_str();
  c_nw->add_option("--t-min", nw.t_min, "analysis window (minutes)")
      ->capture_default_str();
  c_nw->add_option("--transient-min", nw.transient_min,
                   "settling time discarded before analysis (minutes)")
      ->capture_default_str();
  c_nw->add_option("--section-v", nw.section_v)->capture_default_str();
  auto* nw_traj =
      c_nw->add_flag("--save-traj", nw.save_traj, "also write the trajectory");
  c_nw->add_option("--record-dt", nw.record_dt,
                   "trajectory sampling interval (ms)")
      ->capture_default_str();
  auto* nw_from =
      c_nw->add_option("--G-from", nw.g_from,
                       "sweep mode: one row per glucose level from here")
          ->capture_default_str();
  c_nw->add_option("--G-to", nw.g_to, "sweep end")
      ->needs(nw_from)
      ->capture_default_str();
  c_nw->add_option("--step", nw.step, "sweep step")
      ->needs(nw_from)
      ->capture_default_str();
  nw_from->excludes(nw_traj);
  c_nw->callback([&nw, nw_from]() { nw.sweep = nw_from->count() > 0; });

  auto* c_sy = app.add_subcommand(
      "sync", "minimum synchronizing coupling (bisection) over G");
  add_common_flags(c_sy, common);
  c_sy->add_option("--G-from", sy.g_from)->capture_default_str();
  c_sy->add_option("--G-to", sy.g_to)->capture_default_str();
  c_sy->add_option("--step", sy.step)->capture_default_str();
  c_sy->add_flag("--single", sy.single, "one row at the resolved G");
  c_sy->add_option("--N", sy.n_cells, "number of cells")
      ->capture_default_str();
  c_sy->add_option("--k-lo", sy.k_lo, "bracket start (unsynchronized)")
      ->capture_default_str();
  c_sy->add_option("--k-hi", sy.k_hi, "bracket end (synchronized)")
      ->capture_default_str();
  c_sy->add_option("--spread-tol", sy.spread_tol,
                   "sync tolerance (ms; <= 0: 5% of median period)")
      ->capture_default_str();
  c_sy->add_option("--t-min", sy.t_min, "analysis window (minutes)")
      ->capture_default_str();
  c_sy->add_option("--transient-min", sy.transient_min,
                   "settling time discarded before analysis (minutes)")
      ->capture_default_str();
  c_sy->add_option("--section-v", sy.section_v)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (c_sim->parsed()) return cmd_simulate(common, sim);
    if (c_man->parsed()) return cmd_manifold(common, mo);
    if (c_psp->parsed()) return cmd_psp(common, po);
    if (c_nf->parsed()) return cmd_normalform(common);
    if (c_bl->parsed()) return cmd_blowup(common, bo);
    if (c_pc->parsed()) return cmd_poincare(common, pc);
    if (c_sw->parsed()) return cmd_sweep(common, sw);
    if (c_lg->parsed()) return cmd_linger(common, lg);
    if (c_nw->parsed()) return cmd_network(common, nw);
    if (c_sy->parsed()) return cmd_sync(common, sy);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFatal;
  }
  return kExitFatal;
}
