// Acceptance gate: runs every published behavior target at its stated
// tolerance and prints exactly one PASS/FAIL line per criterion. The binary
// exits nonzero if any criterion fails, so the failure list below is the
// authoritative conformance report for the artifact.
//
// Targets whose reference values are internally inconsistent with the rest
// of the reference data still run exactly as stated; they are allowed to
// fail here and the discrepancy is reported in the detail column.

#include <sys/wait.h>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "mtsb/analysis.hpp"
#include "mtsb/geometry.hpp"
#include "mtsb/integrate.hpp"
#include "mtsb/model.hpp"
#include "mtsb/network.hpp"
#include "mtsb/normalform.hpp"
#include "mtsb/singular.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mtsb;

namespace {

constexpr const char* kCliPath = MTSB_CLI_PATH;
constexpr const char* kTestsPath = MTSB_TESTS_PATH;
constexpr const char* kRepoDir = MTSB_REPO_DIR;

const fs::path kWorkDir = "acceptance_out";

struct CommandResult {
  int exit_code = -1;
  std::string output;
};

// Runs a shell command with stdout+stderr captured to a scratch file.
CommandResult run_command(const std::string& cmd) {
  static int counter = 0;
  const fs::path log = kWorkDir / ("cmd_" + std::to_string(counter++) + ".log");
  const std::string full = cmd + " >" + log.string() + " 2>&1";
  const int status = std::system(full.c_str());
  CommandResult r;
  if (WIFEXITED(status)) r.exit_code = WEXITSTATUS(status);
  std::ifstream in(log);
  std::stringstream buf;
  buf << in.rdbuf();
  r.output = buf.str();
  return r;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

bool within_rel(double got, double ref, double tol) {
  return std::abs(got - ref) <= tol * std::abs(ref);
}

struct Criterion {
  int id;
  std::string title;
  std::function<bool(std::string&)> body; // fills the detail string
};

// Results shared between criteria so expensive sweeps run once.
std::vector<PoincareRecord> g_sweep;           // G = 7..13 step 1 (criteria 8, 9)
std::map<int, double> g_linger_ms;             // integer G -> linger time (10, 11)

// ---------------------------------------------------------------------------

bool criterion1(std::string& detail) {
  const fs::path out = kWorkDir / "c1";
  const auto t0 = std::chrono::steady_clock::now();
  const CommandResult r = run_command(std::string(kCliPath) +
                                      " simulate --G 13 --t-min 20 --out " +
                                      out.string());
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  if (r.exit_code != 0) {
    detail = "CLI exit " + std::to_string(r.exit_code) + ": " + r.output;
    return false;
  }
  const json summary = json::parse(read_file(out / "summary.json"));
  const int bursts = summary["results"]["complete_bursts"].get<int>();
  const double period_s =
      summary["results"]["mean_period_min"].get<double>() * 60.0;
  const bool bursts_ok = bursts >= 2 && bursts <= 4;
  const bool period_ok = period_s >= 343.0 * 0.8 && period_s <= 343.0 * 1.2;
  const bool time_ok = secs < 60.0;
  detail = "bursts=" + std::to_string(bursts) + " (want 3±1), period=" +
           fmt("%.1f", period_s) + " s (want 343 s ±20%), runtime=" +
           fmt("%.1f", secs) + " s (<60)";
  return bursts_ok && period_ok && time_ok;
}

bool criterion2(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  CellParams p;
  p.G = 8.0;
  const PspPoint psp = find_psp(p);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  const std::array<std::pair<const char*, double>, 4> ref = {{
      {"v", -60.4}, {"x", 0.094}, {"y", 0.467}, {"z", 84.539}}};
  const std::array<double, 4> got = {psp.location.v, psp.location.x,
                                     psp.location.y, psp.location.z};
  double worst = 0.0;
  const char* worst_name = "";
  for (std::size_t i = 0; i < 4; ++i) {
    const double rel = std::abs(got[i] - ref[i].second) /
                       std::abs(ref[i].second);
    if (rel > worst) { worst = rel; worst_name = ref[i].first; }
  }
  const bool loc_ok = worst <= 0.01;
  const std::string cls = to_string(psp.classification);
  const bool cls_ok = cls == "saddle";
  const bool time_ok = secs < 5.0;
  detail = "location max dev " + fmt("%.3f", worst * 100.0) + "% (" +
           worst_name + ", tol 1%)" + (loc_ok ? " ok" : " FAIL") +
           "; classification '" + cls + "' vs reference 'saddle'" +
           (cls_ok ? "" : " FAIL (eigenvalues " +
                              fmt("%.4g", psp.eigenvalues[0].real()) + "±" +
                              fmt("%.4g", std::abs(psp.eigenvalues[0].imag())) +
                              "i: complex pair, not a real saddle pair)") +
           "; runtime=" + fmt("%.2f", secs) + " s (<5)";
  return loc_ok && cls_ok && time_ok;
}

bool criterion3(std::string& detail) {
  CellParams p;
  p.G = 8.0;
  const PspPoint psp = find_psp(p);
  const NormalFormCoeffs c = coeffs(compute_partials(psp, p));

  const std::map<std::string, double> table = {
      {"H_XX", -3.42120e6},  {"H_VX", -4.99657e1},  {"H_VY", 4.99657e1},
      {"H_VVV", 1.15445e1},  {"H_XXX", 3.58420e13}, {"F_V", 1.26600e-4},
      {"F_X", -1.60000e1},   {"F_Z", -5.37860e-6},  {"F_VV", 2.93710e-3},
      {"F_VVV", 3.76990e-2}, {"G_10", -1.00000e-4}, {"G_1X", -7.66910e2},
      {"G_1Y", -1.00000e0},  {"G_1XX", 2.20800e7},  {"G_1XXX", 1.68630e14},
      {"G_2X", -1.44480e7},  {"G_2Z", -7.46300e0}};
  const std::map<std::string, double> loose = {
      {"H_XXX", 0.05}, {"G_1XXX", 0.05}, {"F_VVV", 0.05}};

  int n_pass = 0;
  std::string failures;
  for (const auto& [name, ref] : table) {
    const double tol = loose.count(name) ? loose.at(name) : 0.02;
    if (within_rel(coeff_value(c, name), ref, tol)) {
      ++n_pass;
    } else {
      if (!failures.empty()) failures += ", ";
      failures += name + "=" + fmt("%.4g", coeff_value(c, name)) + " vs " +
                  fmt("%.4g", ref);
    }
  }
  const bool identities = c.b1 == c.F_V && c.b2 == c.F_Z && c.b3 == c.F_X &&
                          c.b4 == -c.G_1X && c.b5 == c.G_1Y &&
                          c.lambda == -c.G_10;
  detail = std::to_string(n_pass) + "/17 coefficients within tolerance";
  if (!failures.empty())
    detail += "; outside: " + failures +
              " (reference-table entries inconsistent with the printed "
              "formulas; see ledger)";
  detail += identities ? "; identities exact" : "; IDENTITY VIOLATION";
  return n_pass == 17 && identities;
}

bool criterion4(std::string& detail) {
  CellParams p;
  p.G = 8.0;
  const PspPoint psp = find_psp(p);
  const ChartScaling sc = chart_scaling(p.eps, compute_partials(psp, p));

  const std::array<std::pair<const char*, double>, 5> ref = {{
      {"v", 13.838}, {"x", 2306.1}, {"y", -7.414e-5}, {"z", -0.253},
      {"t", 51.6191}}};
  const std::array<double, 5> got = {sc.fac_v, sc.fac_x, sc.fac_y, sc.fac_z,
                                     sc.fac_t};
  int n_pass = 0;
  std::string report;
  for (std::size_t i = 0; i < 5; ++i) {
    const bool ok = within_rel(got[i], ref[i].second, 0.01);
    n_pass += ok;
    if (!report.empty()) report += ", ";
    report += std::string(ref[i].first) + "=" + fmt("%.5g", got[i]) +
              (ok ? " ok" : " vs " + fmt("%.5g", ref[i].second) + " FAIL");
  }
  detail = std::to_string(n_pass) + "/5 factors within 1%: " + report;
  return n_pass == 5;
}

bool criterion5(std::string& detail) {
  CellParams p;
  p.G = 8.0;
  const PspPoint psp = find_psp(p);
  const NormalFormCoeffs c = coeffs(compute_partials(psp, p));
  const double delta3 = p.delta / std::sqrt(p.eps);
  const double lambda3 = c.lambda / p.eps;

  // Fast-pair residual of the closed form at r3 = 0 over 1000 samples.
  double worst_fast = 0.0;
  double worst_y3 = 0.0;
  const int n = 1000;
  for (int i = 0; i < n; ++i) {
    const double t3 = -5.0 + (3000.0 + 5.0) * double(i) / double(n - 1);
    const ChartK3State g = special_solution(c, delta3, lambda3, 0.0, t3);
    const std::array<double, 4> rhs = k3_rhs(g, c);
    const double dv3 = c.b1 / 2.0;
    const double dx3 = (c.b1 * c.b1 / 2.0) * t3;
    worst_fast = std::max(worst_fast, std::abs(rhs[0] - dv3));
    worst_fast = std::max(worst_fast, std::abs(rhs[1] - dx3));
    // y3 oracle: derivative of the printed closed form vs the slow equation
    // along the parabola (adjudicates the cubic coefficient -b1^2 b4/12).
    const double dy3_form =
        delta3 * ((c.b1 * c.b4 / 2.0 - lambda3) -
                  (c.b1 * c.b1 * c.b4 / 4.0) * t3 * t3);
    worst_y3 = std::max(
        worst_y3, std::abs(dy3_form - rhs[2]) / std::max(1.0, std::abs(rhs[2])));
  }
  const bool fast_ok = worst_fast <= 1e-12;
  const bool y3_ok = worst_y3 <= 1e-12;
  const fs::path report = fs::path(kRepoDir) / "docs" /
                          "special_solution_oracle.md";
  const bool archived = fs::exists(report) &&
                        read_file(report).find("cubic coefficient") !=
                            std::string::npos;
  detail = "fast-pair residual max " + fmt("%.2e", worst_fast) +
           " (≤1e-12), y3-oracle residual max " + fmt("%.2e", worst_y3) +
           " (scaled, ≤1e-12), archived report " +
           (archived ? "present" : "MISSING");
  return fast_ok && y3_ok && archived;
}

bool criterion6(std::string& detail) {
  CellParams p;
  p.G = 8.0;
  const PspPoint psp = find_psp(p);
  const NormalFormCoeffs c = coeffs(compute_partials(psp, p));
  const double delta3 = p.delta / std::sqrt(p.eps);
  const double lambda3 = c.lambda / p.eps;
  const double r3_full = std::sqrt(p.eps);
  const std::vector<double> r3s = {r3_full * 1e-3, r3_full * 1e-2,
                                   r3_full * 1e-1, r3_full};
  const BlowupComparison cmp = compare_blowup(c, delta3, lambda3, r3s, -5.0,
                                              3000.0, c.b1 / 4.0, 0.0, 0.5);
  bool ok = cmp.runs.size() == 4;
  std::string report;
  for (const BlowupRun& run : cmp.runs) {
    if (!report.empty()) report += "; ";
    report += "r3=" + fmt("%.2e", run.r3) + ": osc=" +
              std::to_string(run.oscillations) + " escape=" +
              (std::isfinite(run.escape_t3) ? fmt("%.0f", run.escape_t3)
                                            : "none") +
              (run.turned ? " turned" : "");
    ok = ok && run.completed && std::isfinite(run.escape_t3);
  }
  // Small r3: focus passage with at least two oscillations before escape.
  ok = ok && cmp.runs[0].oscillations >= 2 && cmp.runs[1].oscillations >= 2;
  // Full r3 = sqrt(eps): slow-feedback turn before the unbounded growth.
  ok = ok && cmp.runs[3].turned;
  detail = report;
  return ok;
}

bool criterion7(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  CellParams p;
  p.G = 8.0;
  const PoincareRecord rec = poincare_map(p);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  const bool x_ok = std::abs(rec.fixed_point[0] - 0.073) <= 0.01;
  const bool y_ok = std::abs(rec.fixed_point[1] - 0.467) <= 0.01;
  const bool stable_ok = rec.stable;
  const bool dist_ok = rec.max_dist < 1e-6;
  const bool time_ok = secs < 120.0;
  detail = "fixed point (" + fmt("%.6f", rec.fixed_point[0]) + ", " +
           fmt("%.6f", rec.fixed_point[1]) + ") vs (0.073, 0.467) ±0.01, " +
           "stable=" + (rec.stable ? "true" : "false") + ", max_dist=" +
           fmt("%.2e", rec.max_dist) + " (<1e-6), runtime=" +
           fmt("%.1f", secs) + " s (<120)";
  return x_ok && y_ok && stable_ok && dist_ok && time_ok;
}

bool criterion8(std::string& detail) {
  CellParams p;
  g_sweep = sweep_G(p, 7.0, 13.0, 1.0);
  if (g_sweep.size() != 7) {
    detail = "expected 7 sweep rows, got " + std::to_string(g_sweep.size());
    return false;
  }
  bool decreasing = true;
  std::string periods;
  for (std::size_t i = 0; i < g_sweep.size(); ++i) {
    if (g_sweep[i].insufficient) {
      detail = "G=" + fmt("%.0f", g_sweep[i].G) + " flagged insufficient";
      return false;
    }
    if (i > 0 &&
        !(g_sweep[i].period_minutes < g_sweep[i - 1].period_minutes))
      decreasing = false;
    if (!periods.empty()) periods += ", ";
    periods += fmt("%.2f", g_sweep[i].period_minutes);
  }
  const double p7 = g_sweep.front().period_minutes;
  const double p13 = g_sweep.back().period_minutes;
  const bool p7_ok = within_rel(p7, 10.3, 0.25);
  const bool p13_ok = within_rel(p13, 5.5, 0.25);
  detail = "periods (min) = [" + periods + "]" +
           (decreasing ? ", strictly decreasing" : ", NOT decreasing") +
           "; G=7: " + fmt("%.2f", p7) + " vs 10.3 ±25%" +
           (p7_ok ? " ok" : " FAIL") + "; G=13: " + fmt("%.2f", p13) +
           " vs 5.5 ±25%" + (p13_ok ? " ok" : " FAIL");
  return decreasing && p7_ok && p13_ok;
}

bool criterion9(std::string& detail) {
  if (g_sweep.size() != 7) {
    detail = "sweep unavailable (criterion 8 must run first)";
    return false;
  }
  bool ok = true;
  std::string counts;
  for (const PoincareRecord& rec : g_sweep) {
    const std::size_t n = rec.crossings.size();
    if (n < 8 || n > 15) ok = false;
    if (!counts.empty()) counts += ", ";
    counts += std::to_string(n);
  }
  detail = "upward crossings per G in 80 min = [" + counts +
           "], all within [8, 15]" + (ok ? "" : " FAIL");
  return ok;
}

bool criterion10(std::string& detail) {
  CellParams p;
  bool decreasing = true;
  double prev = 0.0;
  std::string values;
  for (int g = 7; g <= 13; ++g) {
    p.G = double(g);
    const double t = linger_time_for_G(p);
    g_linger_ms[g] = t;
    if (g > 7 && !(t < prev)) decreasing = false;
    prev = t;
    if (!values.empty()) values += ", ";
    values += fmt("%.1f", t / 1000.0);
  }
  const bool a7 = within_rel(g_linger_ms[7], 35000.0, 0.30);
  const bool a13 = within_rel(g_linger_ms[13], 5000.0, 0.30);
  detail = "linger times (s) = [" + values + "]" +
           (decreasing ? ", strictly decreasing" : ", NOT decreasing") +
           "; G=7 vs 35 s ±30%" + (a7 ? " ok" : " FAIL") +
           "; G=13 vs 5 s ±30%" + (a13 ? " ok" : " FAIL");
  return decreasing && a7 && a13;
}

bool criterion11(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  const bool exact = k_from_conductance(26.5) == 26.5 / kCellCapacitanceFf &&
                     k_from_conductance(10.0) == 10.0 / kCellCapacitanceFf;

  // Synchronization tolerance: a fixed fraction of the quiescent-phase
  // duration at each glucose level (burst initiations must align within a
  // shorter quiescent window as G rises). The fraction is calibrated once;
  // see the tolerance note in the ledger.
  CellParams p;
  std::string report;
  std::vector<double> kmins;
  bool in_band = true;
  for (int g : {7, 10, 13}) {
    p.G = double(g);
    const double linger =
        g_linger_ms.count(g) ? g_linger_ms[g] : linger_time_for_G(p);
    const double tol = 0.045 * linger;
    const MinSyncResult r =
        min_sync_coupling(p, 6, 10, 0.001, 0.06, 50.0 * 60000.0, tol);
    kmins.push_back(r.k_min);
    in_band = in_band && r.k_min >= 0.005 && r.k_min <= 0.045;
    if (!report.empty()) report += "; ";
    report += "G=" + std::to_string(g) + ": k_min=" + fmt("%.4f", r.k_min) +
              (r.monotonic ? "" : " (monotonicity note: " +
                                      r.monotonicity_note + ")");
  }
  const bool nondecreasing = kmins[0] <= kmins[1] && kmins[1] <= kmins[2];
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  const bool time_ok = secs < 15.0 * 60.0;
  detail = std::string("k_from_conductance exact: ") +
           (exact ? "yes" : "NO") + "; " + report +
           (nondecreasing ? "; non-decreasing" : "; NOT non-decreasing") +
           "; all in [0.005, 0.045]: " + (in_band ? "yes" : "NO") +
           "; runtime=" + fmt("%.0f", secs) + " s (<900)";
  return exact && in_band && nondecreasing && time_ok;
}

bool criterion12(std::string& detail) {
  // (a) The unit/property suites run green.
  const CommandResult unit = run_command(std::string(kTestsPath) +
                                         " --minimal");
  const bool suites_ok = unit.exit_code == 0;

  // (b) Reproducibility: identical seeded runs produce byte-identical
  // outputs, excluding the manifest (the only file carrying a timestamp).
  const fs::path a = kWorkDir / "repro_a";
  const fs::path b = kWorkDir / "repro_b";
  const std::string net_cmd =
      " network --G 10 --N 3 --k 0.01 --seed 7 --t-min 6 --transient-min 6"
      " --save-traj --record-dt 500 --out ";
  const CommandResult ra = run_command(kCliPath + net_cmd + a.string());
  const CommandResult rb = run_command(kCliPath + net_cmd + b.string());
  bool repro_ok = ra.exit_code == rb.exit_code;
  std::string mismatch;
  int compared = 0;
  if (repro_ok && fs::exists(a)) {
    for (const auto& entry : fs::directory_iterator(a)) {
      const std::string name = entry.path().filename().string();
      if (name == "manifest.json") continue;
      ++compared;
      if (read_file(entry.path()) != read_file(b / name)) {
        repro_ok = false;
        mismatch += (mismatch.empty() ? "" : ", ") + name;
      }
    }
    repro_ok = repro_ok && compared > 0;
  } else {
    repro_ok = false;
  }

  // (c) An unknown parameter key is a fatal error naming the key.
  const CommandResult bad = run_command(
      std::string(kCliPath) + " psp --G 8 --set a99=1 --out " +
      (kWorkDir / "badkey").string());
  const bool badkey_ok = bad.exit_code == 1 &&
                         bad.output.find("a99") != std::string::npos;

  // (d) Partial results exit with code 2 (insufficient crossings here).
  const CommandResult part = run_command(
      std::string(kCliPath) + " poincare --G 8 --t-min 10 --out " +
      (kWorkDir / "partial").string());
  const bool partial_ok = part.exit_code == 2;

  detail = std::string("property suites ") +
           (suites_ok ? "green" : "FAILING") + "; seeded rerun of " +
           std::to_string(compared) + " files byte-identical: " +
           (repro_ok ? "yes" : ("NO (" + mismatch + ")")) +
           "; unknown key names offender + exit 1: " +
           (badkey_ok ? "yes" : "NO") + "; partial-result exit 2: " +
           (partial_ok ? "yes" : "NO");
  return suites_ok && repro_ok && badkey_ok && partial_ok;
}

} // namespace

int main() {
  std::error_code ec;
  fs::remove_all(kWorkDir, ec);
  fs::create_directories(kWorkDir);

  const std::vector<Criterion> criteria = {
      {1, "bursting reproduction (simulate --G 13 --t-min 20)", criterion1},
      {2, "stationary-point location and classification at G=8", criterion2},
      {3, "normal-form coefficient table at G=8", criterion3},
      {4, "chart back-transformation factors", criterion4},
      {5, "special-solution residual identity and y3 oracle", criterion5},
      {6, "blow-up phenomenology across four r3 values", criterion6},
      {7, "section-map fixed point at G=8", criterion7},
      {8, "period trend over G=7..13", criterion8},
      {9, "section-crossing counts over the sweep", criterion9},
      {10, "quiescent-phase (linger) times and anchors", criterion10},
      {11, "coupling conversion and minimum synchronizing coupling",
       criterion11},
      {12, "property suites, reproducibility, CLI error paths", criterion12},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    std::string detail;
    bool pass = false;
    try {
      pass = c.body(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    if (!pass) ++failures;
    std::printf("criterion %2d: %s — %s%s%s\n", c.id,
                pass ? "PASS" : "FAIL", c.title.c_str(),
                detail.empty() ? "" : " — ", detail.c_str());
    std::fflush(stdout);
  }
  std::printf("acceptance: %d/12 criteria passed\n",
              int(criteria.size()) - failures);
  return failures == 0 ? 0 : 1;
}
