#include "mtsb/model.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace mtsb {

namespace {

/// Logistic sigma((w - mid)/slope) and derivatives w.r.t. w, orders 0..3.
double logistic_d(double w, double mid, double slope, int n) {
  const double s = 1.0 / (1.0 + std::exp(-(w - mid) / slope));
  const double q = s * (1.0 - s);
  switch (n) {
    case 0: return s;
    case 1: return q / slope;
    case 2: return q * (1.0 - 2.0 * s) / (slope * slope);
    case 3: return q * (1.0 - 6.0 * s + 6.0 * s * s) / (slope * slope * slope);
    default: throw std::invalid_argument("gate derivative order must be 0..3");
  }
}

/// Hill gate x^5 / (x^5 + K^5) and derivatives w.r.t. x, orders 0..3 (x > 0).
double hill5_d(double x, double K, int n) {
  if (!(x > 0.0))
    throw std::domain_error("calcium-activated gate needs x > 0");
  const double r = std::pow(K / x, 5);
  const double U = 1.0 / (1.0 + r);
  const double q = U * (1.0 - U);
  switch (n) {
    case 0: return U;
    case 1: return 5.0 * q / x;
    case 2: return 5.0 * q * (4.0 - 10.0 * U) / (x * x);
    case 3: return 5.0 * q * (12.0 - 120.0 * U + 150.0 * U * U) / (x * x * x);
    default: throw std::invalid_argument("gate derivative order must be 0..3");
  }
}

} // namespace

double gate_X(double v, const CellParams& p) { return logistic_d(v, p.v1, p.s1, 0); }
double gate_Y(double v, const CellParams& p) { return logistic_d(v, p.v2, p.s2, 0); }
double gate_Z(double x, const CellParams& p) { return logistic_d(x, p.x_mid(), p.s3, 0); }
double gate_U(double x, const CellParams& p) { return hill5_d(x, p.K_d, 0); }

double gate_X_d(double v, const CellParams& p, int n) { return logistic_d(v, p.v1, p.s1, n); }
double gate_Y_d(double v, const CellParams& p, int n) { return logistic_d(v, p.v2, p.s2, n); }
double gate_Z_d(double x, const CellParams& p, int n) { return logistic_d(x, p.x_mid(), p.s3, n); }
double gate_U_d(double x, const CellParams& p, int n) { return hill5_d(x, p.K_d, n); }

double h1(const CellState& s, const CellParams& p) {
  return -(p.a1 * gate_X(s.v, p) * (s.v - p.a2) +
           (p.a3 * s.u + p.a4 * gate_U(s.x, p) + p.a5 * s.y) * (s.v - p.a6));
}

double h2(const CellState& s, const CellParams& p) {
  return p.a7 * (gate_Y(s.v, p) - s.u);
}

double f(const CellState& s, const CellParams& p) {
  return -p.d1 * gate_X(s.v, p) * (s.v - p.a2) - p.d2 * s.x + p.d3 * s.z;
}

double g1(const CellState& s, const CellParams& p) {
  return gate_Z(s.x, p) - s.y;
}

double g2(const CellState& s, const CellParams& p) {
  return p.k1 * s.x - p.k2 * s.z;
}

CellState rhs_single(const CellState& s, const CellParams& p) {
  CellState d;
  d.v = h1(s, p);
  d.u = h2(s, p);
  d.x = p.eps * f(s, p);
  d.y = p.eps * p.delta * g1(s, p);
  d.z = p.eps * p.delta * g2(s, p);
  return d;
}

std::array<double, 4> rhs_reduced4(const std::array<double, 4>& s,
                                   const CellParams& p) {
  CellState c{s[0], gate_Y(s[0], p), s[1], s[2], s[3]};
  return {h1(c, p), p.eps * f(c, p), p.eps * p.delta * g1(c, p),
          p.eps * p.delta * g2(c, p)};
}

void NetworkParams::validate() const {
  if (cells.empty())
    throw std::invalid_argument("network must contain at least one cell");
  if (!(k >= 0.0) || !std::isfinite(k))
    throw std::invalid_argument("coupling strength k must be finite and >= 0");
  for (const auto& c : cells) c.validate();
}

void rhs_network(const double* state, double* deriv, const NetworkParams& np) {
  const std::size_t n = np.size();
  double mean_v = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean_v += state[5 * i];
  mean_v /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* si = state + 5 * i;
    CellState s{si[0], si[1], si[2], si[3], si[4]};
    const CellState d = rhs_single(s, np.cells[i]);
    double* di = deriv + 5 * i;
    di[0] = d.v + np.k * (mean_v - s.v);
    di[1] = d.u;
    di[2] = d.x;
    di[3] = d.y;
    di[4] = d.z;
  }
}

NetworkParams make_heterogeneous(const CellParams& base, std::size_t n,
                                 std::uint64_t seed, double k,
                                 double a5_spread, double kr_spread) {
  NetworkParams np;
  np.k = k;
  np.cells.reserve(n);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    CellParams c = base;
    c.a5 = base.a5 * (1.0 + a5_spread * unit(rng));
    c.k_r = base.k_r * (1.0 + kr_spread * unit(rng));
    np.cells.push_back(c);
  }
  np.validate();
  return np;
}

void CellParams::validate() const {
  struct Check { const char* name; double value; };
  const Check positive[] = {
      {"a1", a1}, {"a3", a3}, {"a4", a4}, {"a5", a5}, {"a7", a7},
      {"s1", s1}, {"s2", s2}, {"s3", s3}, {"d1", d1}, {"d2", d2},
      {"d3", d3}, {"k1", k1}, {"k2", k2}, {"k_r", k_r}, {"K_d", K_d},
      {"G", G}};
  for (const auto& c : positive)
    if (!(c.value > 0.0) || !std::isfinite(c.value))
      throw std::invalid_argument(std::string("parameter ") + c.name +
                                  " must be finite and > 0");
  const Check finite[] = {{"a2", a2}, {"a6", a6}, {"v1", v1},
                          {"v2", v2}, {"p_r", p_r}};
  for (const auto& c : finite)
    if (!std::isfinite(c.value))
      throw std::invalid_argument(std::string("parameter ") + c.name +
                                  " must be finite");
  if (!(eps > 0.0 && eps < 1.0))
    throw std::invalid_argument("parameter eps must lie in (0, 1)");
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("parameter delta must lie in (0, 1)");
}

namespace {

struct KeyEntry {
  const char* name;
  double CellParams::* member;
};

const KeyEntry kKeyTable[] = {
    {"a1", &CellParams::a1},   {"a2", &CellParams::a2},
    {"a3", &CellParams::a3},   {"a4", &CellParams::a4},
    {"a5", &CellParams::a5},   {"a6", &CellParams::a6},
    {"a7", &CellParams::a7},   {"v1", &CellParams::v1},
    {"v2", &CellParams::v2},   {"s1", &CellParams::s1},
    {"s2", &CellParams::s2},   {"s3", &CellParams::s3},
    {"d1", &CellParams::d1},   {"d2", &CellParams::d2},
    {"d3", &CellParams::d3},   {"k1", &CellParams::k1},
    {"k2", &CellParams::k2},   {"p_r", &CellParams::p_r},
    {"k_r", &CellParams::k_r}, {"K_d", &CellParams::K_d},
    {"eps", &CellParams::eps}, {"delta", &CellParams::delta},
    {"G", &CellParams::G}};

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

} // namespace

const std::vector<std::string>& param_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& e : kKeyTable) k.emplace_back(e.name);
    return k;
  }();
  return keys;
}

void set_param(CellParams& p, const std::string& key, double value) {
  for (const auto& e : kKeyTable)
    if (key == e.name) {
      p.*(e.member) = value;
      return;
    }
  throw std::invalid_argument("unknown parameter key: " + key);
}

double get_param(const CellParams& p, const std::string& key) {
  for (const auto& e : kKeyTable)
    if (key == e.name) return p.*(e.member);
  throw std::invalid_argument("unknown parameter key: " + key);
}

CellParams load_params(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw std::invalid_argument("cannot open parameter file: " + path);
  CellParams p;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                  ": expected 'key = value'");
    const std::string key = trim(body.substr(0, eq));
    const std::string value_str = trim(body.substr(eq + 1));
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(value_str, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != value_str.size() || value_str.empty())
      throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                  ": malformed value for key '" + key + "'");
    set_param(p, key, value);
  }
  p.validate();
  return p;
}

} // namespace mtsb
