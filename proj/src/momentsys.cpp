#include "mrt/momentsys.hpp"

#include <algorithm>

#include "mrt/errors.hpp"
#include "mrt/quadrature.hpp"

namespace mrt::momentsys {

namespace {

using num::Real;

void check_order(int k) {
  if (k < 0) throw DomainError("moment order must be nonnegative");
}

Real moment_tolerance() { return num::default_tolerance(); }

// Offset rule and Rf samples for one direction.
struct Profile {
  num::QuadratureRule rule;
  std::vector<Real> rf;         // Rf(theta, u_l)
  std::vector<Real> raw;        // b^(k), k = 0..K
};

Profile profile_moments(const density::Density& d, const Real& c, const Real& s, int max_order) {
  auto cuts = radon::profile_breakpoints(d, c, s);
  const Real tol = radon::default_chord_tolerance();
  num::QuadratureOptions opts;
  const int degree = d.polynomial_degree();
  if (degree >= 0) {
    // Rf is piecewise polynomial of degree deg+1 in u; pick a rule that is
    // exact for Rf u^K so the adaptive check passes on the first split.
    opts.order = std::max(8, (max_order + degree + 1) / 2 + 2);
  } else {
    opts.order = std::max(20, max_order / 2 + 4);
  }
  const auto dim = static_cast<std::size_t>(max_order + 1);
  auto f = [&](const Real& u, std::vector<Real>& out) {
    Real r = radon::radon_eval_dir(d, c, s, u, tol);
    out[0] = r;
    for (std::size_t k = 1; k < dim; ++k) out[k] = out[k - 1] * u;
  };
  Profile p;
  if (cuts.size() < 2) {
    p.raw.assign(dim, Real(0));
    return p;
  }
  p.raw = num::integrate_1d(num::VectorIntegrand(f), dim, cuts, moment_tolerance(), opts, &p.rule);
  return p;
}

void fill_rf(const density::Density& d, const Real& c, const Real& s, Profile& p) {
  const Real tol = radon::default_chord_tolerance();
  p.rf.reserve(p.rule.nodes.size());
  for (const auto& u : p.rule.nodes) p.rf.push_back(radon::radon_eval_dir(d, c, s, u, tol));
}

// int phi_h(tau) sum_l w_l Rf(u_l) (u_l + tau)^k dtau, k = 0..K
std::vector<Real> mollified_profile_moments(const Profile& p, const mollifier::MollifierSpec& m,
                                            int max_order) {
  const auto dim = static_cast<std::size_t>(max_order + 1);
  std::vector<Real> wr(p.rf.size());
  for (std::size_t l = 0; l < wr.size(); ++l) wr[l] = p.rule.weights[l] * p.rf[l];
  auto g = [&](const Real& tau, std::vector<Real>& out) {
    for (auto& o : out) o = Real(0);
    Real phi = m.eval(tau);
    if (phi.is_zero()) return;
    for (std::size_t l = 0; l < wr.size(); ++l) {
      Real x = p.rule.nodes[l] + tau;
      Real term = wr[l] * phi;
      for (std::size_t k = 0; k < dim; ++k) {
        out[k] += term;
        term *= x;
      }
    }
  };
  return num::integrate_tanh_sinh(num::VectorIntegrand(g), dim, num::Interval(-m.h(), m.h()),
                                  moment_tolerance(), 14);
}

MomentSet empty_like(const MomentSet& src, MomentSet::Kind kind) {
  MomentSet out;
  out.kind = kind;
  out.max_order = src.max_order;
  out.angles = src.angles;
  out.values.assign(static_cast<std::size_t>(src.max_order + 1),
                    std::vector<Real>(src.angles.size()));
  return out;
}

void check_complete(const MomentSet& ms) {
  if (ms.values.size() != static_cast<std::size_t>(ms.max_order + 1)) {
    throw ValidationError("moment table does not cover orders 0.." + std::to_string(ms.max_order));
  }
  for (const auto& row : ms.values) {
    if (row.size() != ms.angles.size()) throw ValidationError("moment table row has wrong length");
  }
}

}  // namespace

std::string kind_name(MomentSet::Kind k) { return k == MomentSet::Kind::raw ? "raw" : "mollified"; }

MomentSet sinogram_moments(const radon::Sinogram& s, int max_order, Execution mode) {
  check_order(max_order);
  const std::size_t na = s.angles.size();
  const std::size_t np = s.offsets.size();
  Real peak(0);
  for (const auto& row : s.values) {
    for (const auto& v : row) peak = num::max(peak, num::abs(v));
  }
  const Real limit = peak * Real(1e-3);
  for (std::size_t i = 0; i < na; ++i) {
    if (num::abs(s.values[i].front()) > limit || num::abs(s.values[i].back()) > limit) {
      throw TruncationError("sinogram row at theta = " + s.angles[i].str(17) +
                            " does not vanish at the ends of the offset grid");
    }
  }
  MomentSet ms;
  ms.kind = s.meta.mollifier ? MomentSet::Kind::mollified : MomentSet::Kind::raw;
  ms.mollifier = s.meta.mollifier;
  ms.max_order = max_order;
  ms.angles = s.angles;
  ms.values.assign(static_cast<std::size_t>(max_order + 1), std::vector<Real>(na));
  const auto w = radon::trapezoid_weights(np, s.spacing());
  for_each_index(na, mode, [&](std::size_t i) {
    std::vector<Real> acc(static_cast<std::size_t>(max_order + 1));
    for (std::size_t j = 0; j < np; ++j) {
      Real term = w[j] * s.values[i][j];
      for (auto& a : acc) {
        a += term;
        term *= s.offsets[j];
      }
    }
    for (std::size_t k = 0; k < acc.size(); ++k) ms.values[k][i] = std::move(acc[k]);
  });
  return ms;
}

MomentSet continuous_moments(const density::Density& d, const std::vector<Real>& angles,
                             int max_order, const mollifier::MollifierSpec* m, Execution mode) {
  check_order(max_order);
  radon::validate_angles(angles);
  MomentSet ms;
  ms.kind = m ? MomentSet::Kind::mollified : MomentSet::Kind::raw;
  if (m) ms.mollifier = m->descriptor();
  ms.max_order = max_order;
  ms.angles = angles;
  ms.values.assign(static_cast<std::size_t>(max_order + 1), std::vector<Real>(angles.size()));
  for_each_index(angles.size(), mode, [&](std::size_t i) {
    const Real c = num::cos(angles[i]);
    const Real s = num::sin(angles[i]);
    Profile p = profile_moments(d, c, s, max_order);
    std::vector<Real> column;
    if (m == nullptr) {
      column = std::move(p.raw);
    } else if (p.rule.nodes.empty()) {
      column.assign(static_cast<std::size_t>(max_order + 1), Real(0));
    } else {
      fill_rf(d, c, s, p);
      column = mollified_profile_moments(p, *m, max_order);
    }
    for (std::size_t k = 0; k < column.size(); ++k) ms.values[k][i] = std::move(column[k]);
  });
  return ms;
}

MomentQuadrature parse_moment_quadrature(const std::string& name) {
  if (name == "auto") return MomentQuadrature::automatic;
  if (name == "grid") return MomentQuadrature::grid;
  if (name == "continuous") return MomentQuadrature::continuous;
  throw ValidationError("moment quadrature must be auto, grid or continuous, got '" + name + "'");
}

std::string moment_quadrature_name(MomentQuadrature q) {
  switch (q) {
    case MomentQuadrature::automatic: return "auto";
    case MomentQuadrature::grid: return "grid";
    case MomentQuadrature::continuous: return "continuous";
  }
  return "auto";
}

bool continuous_available(const radon::Sinogram& s) {
  if (s.meta.source == "external") return false;
  if (s.meta.noise.kind != radon::NoiseSpec::Kind::none) return false;
  try {
    (void)density::make_density(s.meta.source);
    return true;
  } catch (const Error&) {
    return false;
  }
}

MomentSet extract_moments(const radon::Sinogram& s, int max_order, MomentQuadrature q,
                          Execution mode) {
  if (q == MomentQuadrature::grid ||
      (q == MomentQuadrature::automatic && !continuous_available(s))) {
    return sinogram_moments(s, max_order, mode);
  }
  if (s.meta.noise.kind != radon::NoiseSpec::Kind::none) {
    throw ValidationError("continuous moments need noiseless data from a known density");
  }
  const auto d = density::make_density(s.meta.source);
  if (s.meta.mollifier) {
    const auto m = mollifier::MollifierSpec::from_descriptor(*s.meta.mollifier,
                                                             std::max(64, max_order));
    return continuous_moments(d, s.angles, max_order, &m, mode);
  }
  return continuous_moments(d, s.angles, max_order, nullptr, mode);
}

num::Matrix build_C(int k, const mollifier::MollifierSpec& m) {
  check_order(k);
  const auto n = static_cast<std::size_t>(k + 1);
  num::Matrix c(n, n);
  for (int r = 0; r <= k; ++r) {
    for (int j = 0; j <= r; ++j) {
      c(static_cast<std::size_t>(r), static_cast<std::size_t>(r - j)) =
          num::binomial(r, j) * m.moment(j);
    }
  }
  return c;
}

MomentSet hatb_to_b(const MomentSet& hatb, const mollifier::MollifierSpec& m) {
  if (hatb.kind != MomentSet::Kind::mollified) throw ValidationError("hatb_to_b needs a mollified moment set");
  check_complete(hatb);
  const auto c = build_C(hatb.max_order, m);
  MomentSet out = empty_like(hatb, MomentSet::Kind::raw);
  const auto dim = static_cast<std::size_t>(hatb.max_order + 1);
  std::vector<Real> rhs(dim);
  for (std::size_t i = 0; i < hatb.angles.size(); ++i) {
    for (std::size_t k = 0; k < dim; ++k) rhs[k] = hatb.values[k][i];
    auto x = num::solve_lower_triangular(c, rhs);
    for (std::size_t k = 0; k < dim; ++k) out.values[k][i] = std::move(x[k]);
  }
  return out;
}

MomentSet b_to_hatb(const MomentSet& b, const mollifier::MollifierSpec& m) {
  if (b.kind != MomentSet::Kind::raw) throw ValidationError("b_to_hatb needs a raw moment set");
  check_complete(b);
  MomentSet out = empty_like(b, MomentSet::Kind::mollified);
  out.mollifier = m.descriptor();
  for (int k = 0; k <= b.max_order; ++k) {
    for (std::size_t i = 0; i < b.angles.size(); ++i) {
      Real acc(0);
      for (int j = 0; j <= k; ++j) {
        Real cj = m.moment(j);
        if (cj.is_zero()) continue;
        acc.add_product(num::binomial(k, j) * cj, b.values[static_cast<std::size_t>(k - j)][i]);
      }
      out.values[static_cast<std::size_t>(k)][i] = std::move(acc);
    }
  }
  return out;
}

num::Matrix build_A(int k, std::span<const Real> angles) {
  check_order(k);
  const Real pi = num::pi();
  for (std::size_t i = 0; i < angles.size(); ++i) {
    if (!(angles[i] > Real(0) && angles[i] < pi)) {
      throw ValidationError("angle " + angles[i].str(17) + " lies outside (0, pi)");
    }
    for (std::size_t l = 0; l < i; ++l) {
      if (angles[l] == angles[i]) throw ValidationError("duplicate angle " + angles[i].str(17));
    }
  }
  num::Matrix a(angles.size(), static_cast<std::size_t>(k + 1));
  for (std::size_t i = 0; i < angles.size(); ++i) {
    const Real c = num::cos(angles[i]);
    const Real s = num::sin(angles[i]);
    for (int j = 0; j <= k; ++j) {
      a(i, static_cast<std::size_t>(j)) = num::binomial(k, j) *
                                          num::pow(c, static_cast<unsigned long>(j)) *
                                          num::pow(s, static_cast<unsigned long>(k - j));
    }
  }
  return a;
}

Real vandermonde_determinant(int k, std::span<const Real> angles) {
  if (angles.size() != static_cast<std::size_t>(k + 1)) {
    throw DomainError("determinant formula needs exactly k+1 angles");
  }
  Real det(1);
  std::vector<Real> cot;
  for (const auto& th : angles) {
    const Real s = num::sin(th);
    det *= num::pow(s, static_cast<unsigned long>(k));
    cot.push_back(num::cos(th) / s);
  }
  for (int j = 0; j <= k; ++j) det *= num::binomial(k, j);
  for (std::size_t i = 0; i < cot.size(); ++i) {
    for (std::size_t l = i + 1; l < cot.size(); ++l) det *= cot[l] - cot[i];
  }
  return det;
}

std::vector<std::size_t> spread_indices(std::size_t n, int k) {
  std::vector<std::size_t> out;
  const auto count = static_cast<std::size_t>(k + 1);
  for (std::size_t i = 0; i < count; ++i) out.push_back(i * n / count);
  return out;
}

OrderSolution solve_order(const MomentSet& ms, int k, SolveMode mode,
                          const std::vector<std::size_t>* subset) {
  if (ms.kind != MomentSet::Kind::raw) throw ValidationError("angular solve needs raw moments");
  if (k < 0 || k > ms.max_order) {
    throw IncompletenessError("order " + std::to_string(k) + " is not in the moment set", k, 0);
  }
  const std::size_t n = ms.angles.size();
  if (n < static_cast<std::size_t>(k + 1)) {
    throw ValidationError("order " + std::to_string(k) + " needs at least " + std::to_string(k + 1) +
                          " angles, have " + std::to_string(n));
  }
  OrderSolution sol;
  sol.mode = mode;
  if (mode == SolveMode::least_squares) {
    for (std::size_t i = 0; i < n; ++i) sol.angle_indices.push_back(i);
  } else if (subset != nullptr) {
    if (subset->size() != static_cast<std::size_t>(k + 1)) {
      throw ValidationError("square solve needs exactly k+1 angle indices");
    }
    for (auto idx : *subset) {
      if (idx >= n) throw ValidationError("angle index out of range");
    }
    sol.angle_indices = *subset;
  } else {
    sol.angle_indices = spread_indices(n, k);
  }
  std::vector<Real> chosen;
  std::vector<Real> rhs;
  for (auto idx : sol.angle_indices) {
    chosen.push_back(ms.angles[idx]);
    rhs.push_back(ms.values[static_cast<std::size_t>(k)][idx]);
  }
  const auto a = build_A(k, chosen);
  if (mode == SolveMode::least_squares) {
    auto ls = num::solve_least_squares(a, rhs);
    sol.gamma = std::move(ls.x);
    sol.condition = std::move(ls.condition);
  } else {
    num::LuFactorization lu(a);
    sol.gamma = lu.solve(rhs);
    sol.condition = lu.condition_1();
  }
  return sol;
}

Recovery recover_triangle(const MomentSet& ms, int max_order, SolveMode mode, Execution exec) {
  check_order(max_order);
  check_complete(ms);
  if (max_order > ms.max_order) {
    throw IncompletenessError("moment set stops at order " + std::to_string(ms.max_order), max_order, 0);
  }
  std::vector<OrderSolution> rows(static_cast<std::size_t>(max_order + 1));
  for_each_index(rows.size(), exec, [&](std::size_t k) {
    rows[k] = solve_order(ms, static_cast<int>(k), mode);
  });
  Recovery r{density::MomentTriangle(max_order), {}};
  for (int k = 0; k <= max_order; ++k) {
    auto& row = rows[static_cast<std::size_t>(k)];
    for (int j = 0; j <= k; ++j) r.triangle.at(j, k - j) = row.gamma[static_cast<std::size_t>(j)];
    r.conditions.push_back(row.condition);
  }
  return r;
}

Real synthesis_residual(const density::MomentTriangle& t, const mollifier::MollifierSpec& m,
                        const Real& theta, int k, SynthesisForm form) {
  check_order(k);
  if (t.max_order() < k) {
    throw IncompletenessError("triangle of order " + std::to_string(t.max_order()) +
                                  " cannot check order " + std::to_string(k),
                              k, 0);
  }
  const Real c = num::cos(theta);
  const Real s = num::sin(theta);
  auto cp = [&](int e) { return num::pow(c, static_cast<unsigned long>(e)); };
  auto sp = [&](int e) { return num::pow(s, static_cast<unsigned long>(e)); };
  Real total(0);
  for (int j = 0; j <= k; ++j) {
    const Real ckj = num::binomial(k, j);
    for (int l = 0; l <= j; ++l) {
      const Real coef = ckj * num::binomial(j, l);
      Real bracket = m.raw_moment(k - j) * t.at(l, j - l) * cp(l) * sp(j - l);
      for (int n = 0; n <= k - j; ++n) {
        Real term = num::binomial(k - j, n) * t.at(j - l, k - j - n) * m.raw_moment(n + l);
        if (form == SynthesisForm::literal) {
          term *= cp(j) * sp(k - j);
        } else {
          term *= cp(j + l) * sp(k - j + n);
        }
        bracket -= term;
      }
      total.add_product(coef, bracket);
    }
  }
  return total;
}

Real homogeneity_residual(const MomentSet& ms, int k) {
  if (ms.kind != MomentSet::Kind::raw) throw ValidationError("homogeneity check needs raw moments");
  if (k < 0 || k > ms.max_order) throw DomainError("order outside the moment set");
  const auto a = build_A(k, ms.angles);
  const auto& b = ms.values[static_cast<std::size_t>(k)];
  auto ls = num::solve_least_squares(a, b);
  Real norm(0);
  for (const auto& v : b) norm.add_product(v, v);
  norm = num::sqrt(norm);
  if (norm.is_zero()) return ls.residual_norm;
  return ls.residual_norm / norm;
}

io::json to_json(const MomentSet& ms) {
  io::json j;
  j["schema"] = kMomentSetSchema;
  j["precision_bits"] = num::working_precision();
  j["kind"] = kind_name(ms.kind);
  j["K"] = ms.max_order;
  if (ms.mollifier) j["mollifier"] = ms.mollifier->to_json();
  j["angles"] = io::to_json(ms.angles);
  io::json rows = io::json::array();
  for (const auto& row : ms.values) rows.push_back(io::to_json(row));
  j["values"] = rows;
  return j;
}

MomentSet moment_set_from_json(const io::json& j) {
  if (!j.is_object() || !j.contains("kind") || !j.contains("K") || !j.contains("angles") ||
      !j.contains("values")) {
    throw ValidationError("moment set JSON needs kind, K, angles and values");
  }
  MomentSet ms;
  const auto kind = j["kind"].get<std::string>();
  if (kind == "raw") {
    ms.kind = MomentSet::Kind::raw;
  } else if (kind == "mollified") {
    ms.kind = MomentSet::Kind::mollified;
  } else {
    throw ValidationError("moment set kind must be raw or mollified");
  }
  ms.max_order = j["K"].get<int>();
  if (ms.max_order < 0) throw ValidationError("moment set K must be nonnegative");
  if (j.contains("mollifier") && !j["mollifier"].is_null()) {
    ms.mollifier = radon::MollifierDescriptor::from_json(j["mollifier"]);
  }
  ms.angles = io::reals_from_json(j["angles"], "angles");
  for (const auto& row : j["values"]) ms.values.push_back(io::reals_from_json(row, "values"));
  check_complete(ms);
  return ms;
}

io::json to_json(const density::MomentTriangle& t) {
  io::json j;
  j["schema"] = kTriangleSchema;
  j["precision_bits"] = num::working_precision();
  j["K"] = t.max_order();
  io::json gamma = io::json::object();
  for (int k = 0; k <= t.max_order(); ++k) {
    for (int b = 0; b <= k; ++b) {
      gamma[std::to_string(k - b) + "," + std::to_string(b)] = io::to_json(t.at(k - b, b));
    }
  }
  j["gamma"] = gamma;
  return j;
}

density::MomentTriangle triangle_from_json(const io::json& j) {
  if (!j.is_object() || !j.contains("K") || !j.contains("gamma")) {
    throw ValidationError("moment triangle JSON needs K and gamma");
  }
  const int order = j["K"].get<int>();
  density::MomentTriangle t(order);
  const auto& gamma = j["gamma"];
  for (int k = 0; k <= order; ++k) {
    for (int b = 0; b <= k; ++b) {
      const std::string key = std::to_string(k - b) + "," + std::to_string(b);
      if (!gamma.contains(key)) {
        throw IncompletenessError("moment triangle is missing gamma " + key, k - b, b);
      }
      t.at(k - b, b) = io::real_from_json(gamma[key], "gamma " + key);
    }
  }
  return t;
}

void write_moment_set(const MomentSet& ms, const std::filesystem::path& path) {
  io::write_json(path, to_json(ms));
}

MomentSet read_moment_set(const std::filesystem::path& path) {
  auto j = io::read_json(path);
  io::check_precision(j, path);
  return moment_set_from_json(j);
}

void write_triangle(const density::MomentTriangle& t, const std::filesystem::path& path) {
  io::write_json(path, to_json(t));
}

density::MomentTriangle read_triangle(const std::filesystem::path& path) {
  auto j = io::read_json(path);
  io::check_precision(j, path);
  return triangle_from_json(j);
}

}  // namespace mrt::momentsys
