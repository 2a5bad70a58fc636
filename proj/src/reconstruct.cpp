#include "mrt/reconstruct.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "mrt/errors.hpp"
#include "mrt/quadrature.hpp"

namespace mrt::reconstruct {

namespace {

using num::Real;

int floor_index(int m, const Real& x) {
  long v = (Real(m) * x).to_long_floor();
  return static_cast<int>(std::clamp(v, 0L, static_cast<long>(m)));
}

void check_point(const Real& x1, const Real& x2) {
  if (x1.sign() < 0 || x1 > Real(1) || x2.sign() < 0 || x2 > Real(1)) {
    throw DomainError("reconstruction point (" + x1.str(17) + ", " + x2.str(17) +
                      ") lies outside [0,1]^2");
  }
}

// beta(t; i+1, m-i+1) = (m+1) C(m,i) t^i (1-t)^(m-i)
Real beta_density(int m, int i, const Real& t) {
  return Real(m + 1) * num::binomial(m, i) * num::pow(t, static_cast<unsigned long>(i)) *
         num::pow(Real(1) - t, static_cast<unsigned long>(m - i));
}

}  // namespace

MlValue ml_value(const density::MomentTriangle& t, int m, int n, const Real& x1, const Real& x2) {
  if (m < 0 || n < 0) throw DomainError("reconstruction orders must be nonnegative");
  check_point(x1, x2);
  if (!t.contains(m, n)) {
    // report the lowest-order moment of the rectangle that is absent
    const int k = t.max_order() + 1;
    const int a = std::min(m, k);
    throw IncompletenessError("reconstruction of order (" + std::to_string(m) + "," +
                                  std::to_string(n) + ") needs moment (" + std::to_string(a) + "," +
                                  std::to_string(k - a) + "); the triangle stops at order " +
                                  std::to_string(t.max_order()),
                              a, k - a);
  }
  const int i = floor_index(m, x1);
  const int j = floor_index(n, x2);
  // C_{m,n} over the factorials collapses to binomials:
  // (m+1)(n+1) C(m,i) C(n,j) C(m-i,a1) C(n-j,a2)
  const Real prefactor = Real(m + 1) * Real(n + 1) * num::binomial(m, i) * num::binomial(n, j);
  Real sum(0);
  Real max_term(0);
  for (int a1 = 0; a1 <= m - i; ++a1) {
    const Real b1 = num::binomial(m - i, a1);
    for (int a2 = 0; a2 <= n - j; ++a2) {
      Real term = b1 * num::binomial(n - j, a2) * t.at(a1 + i, a2 + j);
      if ((a1 + a2) % 2 == 1) term = -term;
      max_term = num::max(max_term, num::abs(term));
      sum += term;
    }
  }
  return {prefactor * sum, prefactor * max_term};
}

BetaKernelOracle::BetaKernelOracle(const density::Density& d, int m, int n) : m_(m), n_(n) {
  if (m < 0 || n < 0) throw DomainError("reconstruction orders must be nonnegative");
  a1_ = axis_for(d, m, d.kink_lines_x1());
  a2_ = axis_for(d, n, d.kink_lines_x2());
  f_.assign(a1_.nodes.size(), std::vector<Real>(a2_.nodes.size()));
  for (std::size_t i = 0; i < a1_.nodes.size(); ++i) {
    for (std::size_t j = 0; j < a2_.nodes.size(); ++j) f_[i][j] = d.eval_inside(a1_.nodes[i], a2_.nodes[j]);
  }
}

BetaKernelOracle::Axis BetaKernelOracle::axis_for(const density::Density& d, int order,
                                                  const std::vector<Real>& kinks) const {
  std::vector<Real> cuts{Real(0)};
  for (const auto& k : kinks) cuts.push_back(k);
  cuts.emplace_back(1);
  int points = 0;
  const int degree = d.polynomial_degree();
  if (degree >= 0) {
    // f t^i (1-t)^(m-i) is a polynomial of degree m + deg on each piece
    points = (order + degree) / 2 + 1;
  } else {
    // smooth but not polynomial: more panels and a generous rule
    cuts.clear();
    for (int p = 0; p <= 4; ++p) cuts.push_back(Real(p) / Real(4));
    points = order / 2 + 40;
  }
  const auto& rule = num::gauss_legendre(points);
  Axis axis;
  for (std::size_t c = 1; c < cuts.size(); ++c) {
    Real half = (cuts[c] - cuts[c - 1]) / Real(2);
    Real mid = (cuts[c] + cuts[c - 1]) / Real(2);
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      axis.nodes.push_back(mid + half * rule.nodes[q]);
      axis.weights.push_back(half * rule.weights[q]);
    }
  }
  return axis;
}

Real BetaKernelOracle::value(const Real& x1, const Real& x2) const {
  check_point(x1, x2);
  const int i = floor_index(m_, x1);
  const int j = floor_index(n_, x2);
  std::vector<Real> k2(a2_.nodes.size());
  for (std::size_t q = 0; q < k2.size(); ++q) k2[q] = a2_.weights[q] * beta_density(n_, j, a2_.nodes[q]);
  Real total(0);
  for (std::size_t p = 0; p < a1_.nodes.size(); ++p) {
    Real inner(0);
    for (std::size_t q = 0; q < k2.size(); ++q) inner.add_product(k2[q], f_[p][q]);
    total.add_product(a1_.weights[p] * beta_density(m_, i, a1_.nodes[p]), inner);
  }
  return total;
}

Real beta_kernel_value(const density::Density& d, int m, int n, const Real& x1, const Real& x2) {
  return BetaKernelOracle(d, m, n).value(x1, x2);
}

std::vector<Real> grid_nodes(int count) {
  if (count < 1) throw ValidationError("grid resolution must be at least 1");
  if (count == 1) return {Real(1)};
  std::vector<Real> out;
  for (int i = 0; i < count; ++i) out.push_back(Real(i) / Real(count - 1));
  return out;
}

ReconstructionGrid reconstruct_grid(const density::MomentTriangle& t, int m, int n, int g1, int g2,
                                    Execution mode) {
  ReconstructionGrid g;
  g.x1 = grid_nodes(g1);
  g.x2 = grid_nodes(g2);
  g.m = m;
  g.n = n;
  const std::size_t n1 = g.x1.size();
  const std::size_t n2 = g.x2.size();
  g.values.assign(n1, std::vector<Real>(n2));
  std::vector<Real> terms(n1 * n2);
  for_each_index(n1 * n2, mode, [&](std::size_t cell) {
    const std::size_t i = cell / n2;
    const std::size_t j = cell % n2;
    auto v = ml_value(t, m, n, g.x1[i], g.x2[j]);
    g.values[i][j] = std::move(v.value);
    terms[cell] = std::move(v.max_term);
  });
  Real peak(0);
  for (const auto& term : terms) g.max_term = num::max(g.max_term, term);
  for (const auto& row : g.values) {
    for (const auto& v : row) peak = num::max(peak, num::abs(v));
  }
  if (peak.is_zero() || g.max_term.is_zero()) {
    g.digits_lost = Real(0);
  } else {
    g.digits_lost = num::log(g.max_term / peak) / num::log(Real(10));
  }
  return g;
}

Real sup_error(const ReconstructionGrid& g, const density::Density& d) {
  Real worst(0);
  for (std::size_t i = 0; i < g.x1.size(); ++i) {
    for (std::size_t j = 0; j < g.x2.size(); ++j) {
      worst = num::max(worst, num::abs(g.values[i][j] - d.eval(g.x1[i], g.x2[j])));
    }
  }
  return worst;
}

Real choose_h(int n, double c, double c1) {
  if (n < 0) throw ValidationError("order n must be nonnegative");
  if (!(c > 0) || !(c1 > 0) || !std::isfinite(c) || !std::isfinite(c1)) {
    throw ValidationError("choose_h needs positive finite constants");
  }
  return num::sqrt((Real(c) / Real(c1)) / Real(n + 2));
}

double rate_constant(const density::DerivativeNorms& d) {
  return 2.0 * (d.f10 + d.f01) + 0.5 * (d.f20 + d.f11 + d.f02);
}

double smoothing_constant(const density::DerivativeNorms& d, double sigma2) {
  return 0.5 * sigma2 * (d.f20 + d.f11 + d.f02);
}

double fit_loglog_slope(const std::vector<int>& orders, const std::vector<double>& errors) {
  if (orders.size() != errors.size() || orders.size() < 2) return std::nan("");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double count = static_cast<double>(orders.size());
  for (std::size_t i = 0; i < orders.size(); ++i) {
    const double x = std::log(static_cast<double>(orders[i]));
    const double y = std::log(errors[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double denom = count * sxx - sx * sx;
  if (denom == 0) return std::nan("");
  return (count * sxy - sx * sy) / denom;
}

void write_grid(const ReconstructionGrid& g, const std::filesystem::path& csv) {
  std::string text = "x1,x2,value\n";
  for (std::size_t i = 0; i < g.x1.size(); ++i) {
    for (std::size_t j = 0; j < g.x2.size(); ++j) {
      text += g.x1[i].str();
      text += ',';
      text += g.x2[j].str();
      text += ',';
      text += g.values[i][j].str();
      text += '\n';
    }
  }
  io::write_text(csv, text);
  io::json meta;
  meta["schema"] = kGridSchema;
  meta["precision_bits"] = num::working_precision();
  meta["m"] = g.m;
  meta["n"] = g.n;
  meta["resolution"] = {g.x1.size(), g.x2.size()};
  meta["source"] = g.source;
  meta["h"] = g.h ? io::to_json(*g.h) : io::json(nullptr);
  meta["max_term"] = io::to_json(g.max_term);
  meta["digits_lost"] = g.digits_lost.to_double();
  io::write_json(io::sidecar_path(csv), meta);
}

ReconstructionGrid read_grid(const std::filesystem::path& csv) {
  auto meta = io::read_json(io::sidecar_path(csv));
  if (meta.value("schema", std::string()) != kGridSchema) {
    throw ValidationError("sidecar of " + csv.string() + " is not a " + kGridSchema + " file");
  }
  io::check_precision(meta, csv);
  ReconstructionGrid g;
  g.m = meta.at("m").get<int>();
  g.n = meta.at("n").get<int>();
  g.source = meta.value("source", std::string("unknown"));
  if (meta.contains("h") && !meta["h"].is_null()) g.h = io::real_from_json(meta["h"], "h");
  g.max_term = io::real_from_json(meta.value("max_term", io::json("0")), "max_term");
  g.digits_lost = Real(meta.value("digits_lost", 0.0));
  const auto res = meta.at("resolution");
  g.x1 = grid_nodes(res.at(0).get<int>());
  g.x2 = grid_nodes(res.at(1).get<int>());
  g.values.assign(g.x1.size(), std::vector<Real>(g.x2.size()));
  std::ifstream in(csv);
  if (!in) throw IoError("cannot open " + csv.string());
  std::string line;
  std::getline(in, line);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "x1,x2,value") throw ValidationError(csv.string() + ": header must be x1,x2,value");
  std::size_t row = 0;
  const std::size_t n2 = g.x2.size();
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (row >= g.x1.size() * n2) throw ValidationError(csv.string() + " has extra rows");
    auto c2 = line.rfind(',');
    if (c2 == std::string::npos) throw ValidationError(csv.string() + ": malformed row");
    g.values[row / n2][row % n2] = Real::from_string(line.substr(c2 + 1));
    ++row;
  }
  if (row != g.x1.size() * n2) throw ValidationError(csv.string() + " is missing rows");
  return g;
}

}  // namespace mrt::reconstruct
