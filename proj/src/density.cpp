#include "mrt/density.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>

#include "mrt/errors.hpp"
#include "mrt/quadrature.hpp"

namespace mrt::density {

namespace {

using num::Real;

struct Term {
  int i;
  int j;
  Real c;
};

// Sum of c x^i y^j. Covers uniform, monomials and coefficient tables.
class PolynomialModel final : public Model {
 public:
  PolynomialModel(std::string id, std::vector<Term> terms) : id_(std::move(id)), terms_(std::move(terms)) {
    for (const auto& t : terms_) degree_ = std::max(degree_, t.i + t.j);
  }

  std::string id() const override { return id_; }

  Real eval(const Real& x1, const Real& x2) const override {
    Real acc(0);
    for (const auto& t : terms_) {
      acc.add_product(t.c, num::pow(x1, static_cast<unsigned long>(t.i)) *
                               num::pow(x2, static_cast<unsigned long>(t.j)));
    }
    return acc;
  }

  Real moment(int a, int b) const override {
    Real acc(0);
    for (const auto& t : terms_) {
      Real denom(static_cast<long>((a + t.i + 1)) * static_cast<long>(b + t.j + 1));
      acc += t.c / denom;
    }
    return acc;
  }

  bool closed_form_moments() const override { return true; }

  std::optional<DerivativeNorms> derivative_norms() const override {
    // Polynomial derivatives are cheap in double; take the sup over a fine
    // grid that includes the corners, where monomials peak.
    DerivativeNorms n;
    const int samples = 201;
    for (int r = 0; r < samples; ++r) {
      for (int s = 0; s < samples; ++s) {
        double x = static_cast<double>(r) / (samples - 1);
        double y = static_cast<double>(s) / (samples - 1);
        double d10 = 0, d01 = 0, d20 = 0, d11 = 0, d02 = 0;
        for (const auto& t : terms_) {
          double c = t.c.to_double();
          auto p = [](double v, int e) { return e < 0 ? 0.0 : std::pow(v, e); };
          d10 += c * t.i * p(x, t.i - 1) * p(y, t.j);
          d01 += c * t.j * p(x, t.i) * p(y, t.j - 1);
          d20 += c * t.i * (t.i - 1) * p(x, t.i - 2) * p(y, t.j);
          d11 += c * t.i * t.j * p(x, t.i - 1) * p(y, t.j - 1);
          d02 += c * t.j * (t.j - 1) * p(x, t.i) * p(y, t.j - 2);
        }
        n.f10 = std::max(n.f10, std::abs(d10));
        n.f01 = std::max(n.f01, std::abs(d01));
        n.f20 = std::max(n.f20, std::abs(d20));
        n.f11 = std::max(n.f11, std::abs(d11));
        n.f02 = std::max(n.f02, std::abs(d02));
      }
    }
    return n;
  }

  int polynomial_degree() const override { return degree_; }

 private:
  std::string id_;
  std::vector<Term> terms_;
  int degree_ = 0;
};

// g(x1) g(x2) with g(t) = exp(-(t - 1/2)^2 / (2 s^2)), s = 1/4.
class SmoothBumpModel final : public Model {
 public:
  std::string id() const override { return "smooth-bump"; }

  Real eval(const Real& x1, const Real& x2) const override {
    // one exponential instead of two
    Real d1 = x1 - Real(0.5);
    Real d2 = x2 - Real(0.5);
    Real q = d1 * d1;
    q.add_product(d2, d2);
    return num::exp(-(q * Real(8)));
  }

  Real moment(int a, int b) const override { return moment_1d(a) * moment_1d(b); }

  bool closed_form_moments() const override { return false; }

  std::optional<DerivativeNorms> derivative_norms() const override {
    // sup|g| = 1, sup|g'| = 1/(s sqrt(e)), sup|g''| = 1/s^2
    const double s = 0.25;
    const double d1 = 1.0 / (s * std::sqrt(std::exp(1.0)));
    return DerivativeNorms{d1, d1, 1.0 / (s * s), d1 * d1, 1.0 / (s * s)};
  }

  int polynomial_degree() const override { return -1; }

 private:
  static Real g(const Real& t) {
    Real d = t - Real(0.5);
    return num::exp(-(d * d * Real(8)));
  }

  Real moment_1d(int a) const {
    const auto key = std::make_pair(a, num::working_precision());
    {
      std::lock_guard<std::mutex> lock(mutex_);
      auto it = cache_.find(key);
      if (it != cache_.end()) return it->second;
    }
    // Tighter than the default 1e-30: the reconstruction formula amplifies
    // moment errors by many orders of magnitude at high order.
    Real tol = num::epsilon_pow2(num::working_precision() - 24);
    Real value = num::integrate_1d(
        [a](const Real& t) { return num::pow(t, static_cast<unsigned long>(a)) * g(t); },
        num::Interval(Real(0), Real(1)), tol);
    std::lock_guard<std::mutex> lock(mutex_);
    cache_.emplace(key, value);
    return value;
  }

  mutable std::mutex mutex_;
  mutable std::map<std::pair<int, int>, Real> cache_;
};

// Bilinear interpolation of node values on a uniform grid over [0,1]^2.
class GridModel final : public Model {
 public:
  GridModel(std::string id, int n1, int n2, std::vector<Real> values)
      : id_(std::move(id)), n1_(n1), n2_(n2), values_(std::move(values)) {}

  std::string id() const override { return id_; }

  Real eval(const Real& x1, const Real& x2) const override {
    auto locate = [](const Real& x, int n, int& cell) {
      Real s = x * Real(n - 1);
      long c = s.to_long_floor();
      c = std::clamp(c, 0L, static_cast<long>(n - 2));
      cell = static_cast<int>(c);
      return s - Real(c);
    };
    int i = 0, j = 0;
    Real u = locate(x1, n1_, i);
    Real v = locate(x2, n2_, j);
    Real one(1);
    Real lo = node(i, j) * (one - u) + node(i + 1, j) * u;
    Real hi = node(i, j + 1) * (one - u) + node(i + 1, j + 1) * u;
    return lo * (one - v) + hi * v;
  }

  Real moment(int a, int b) const override {
    // The interpolant is a sum of tensor hats, so each moment factors into
    // 1-D hat moments.
    auto h1 = hat_moments(a, n1_);
    auto h2 = hat_moments(b, n2_);
    Real acc(0);
    for (int i = 0; i < n1_; ++i) {
      for (int j = 0; j < n2_; ++j) acc.add_product(node(i, j), h1[i] * h2[j]);
    }
    return acc;
  }

  bool closed_form_moments() const override { return false; }
  std::optional<DerivativeNorms> derivative_norms() const override { return std::nullopt; }
  // bilinear on each cell, so quadratic along a line
  int polynomial_degree() const override { return 2; }

  std::vector<Real> kink_lines_x1() const override { return interior(n1_); }
  std::vector<Real> kink_lines_x2() const override { return interior(n2_); }

  int n1() const { return n1_; }
  int n2() const { return n2_; }

 private:
  const Real& node(int i, int j) const { return values_[static_cast<std::size_t>(i * n2_ + j)]; }

  static std::vector<Real> interior(int n) {
    std::vector<Real> out;
    for (int i = 1; i < n - 1; ++i) out.push_back(Real(i) / Real(n - 1));
    return out;
  }

  // Integral of x^a times the i-th hat function, by a Gauss rule exact for
  // the cell polynomials.
  static std::vector<Real> hat_moments(int a, int n) {
    const auto& rule = num::gauss_legendre(a / 2 + 2);
    std::vector<Real> out(static_cast<std::size_t>(n));
    Real width = Real(1) / Real(n - 1);
    for (int c = 0; c + 1 < n; ++c) {
      Real left = Real(c) * width;
      Real half = width / Real(2);
      Real mid = left + half;
      for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
        Real x = mid + half * rule.nodes[q];
        Real w = rule.weights[q] * half * num::pow(x, static_cast<unsigned long>(a));
        Real frac = (x - left) / width;
        out[c] += w * (Real(1) - frac);
        out[c + 1] += w * frac;
      }
    }
    return out;
  }

  std::string id_;
  int n1_;
  int n2_;
  std::vector<Real> values_;
};

std::shared_ptr<const Model> monomial(const std::string& id, int a, int b) {
  return std::make_shared<PolynomialModel>(id, std::vector<Term>{{a, b, Real(1)}});
}

std::shared_ptr<const Model> grid_demo() {
  // 0.5 + x y^2 sampled on 9 x 9 nodes
  const int n = 9;
  std::vector<Real> values;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      Real x = Real(i) / Real(n - 1);
      Real y = Real(j) / Real(n - 1);
      values.push_back(Real(0.5) + x * y * y);
    }
  }
  return std::make_shared<GridModel>("grid-demo", n, n, std::move(values));
}

int parse_int(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    int v = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("bad integer '" + s + "' in " + what);
  }
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

std::shared_ptr<const Model> parse_poly(const std::string& id, const std::string& body) {
  std::vector<Term> terms;
  for (const auto& part : split(body, ';')) {
    auto f = split(part, ',');
    if (f.size() != 3) throw ValidationError("poly term must be i,j,c: '" + part + "'");
    int i = parse_int(f[0], id);
    int j = parse_int(f[1], id);
    if (i < 0 || j < 0) throw ValidationError("poly exponents must be nonnegative in " + id);
    terms.push_back({i, j, Real::from_string(f[2])});
  }
  if (terms.empty()) throw ValidationError("poly needs at least one term");
  auto model = std::make_shared<PolynomialModel>(id, std::move(terms));
  // signed densities are out of scope
  for (int r = 0; r <= 40; ++r) {
    for (int s = 0; s <= 40; ++s) {
      if (model->eval(Real(r) / Real(40), Real(s) / Real(40)).sign() < 0) {
        throw ValidationError("poly density '" + id + "' is negative inside the square");
      }
    }
  }
  return model;
}

std::shared_ptr<const GridModel> read_grid(const std::filesystem::path& path, const std::string& id) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open grid file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty grid file " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "x1,x2,value") {
    throw ValidationError("grid file header must be 'x1,x2,value', got '" + line + "'");
  }
  struct Row {
    Real x1, x2, v;
  };
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto f = split(line, ',');
    if (f.size() != 3) throw ValidationError("grid row needs three fields: '" + line + "'");
    rows.push_back({Real::from_string(f[0]), Real::from_string(f[1]), Real::from_string(f[2])});
  }
  auto distinct = [&](auto get) {
    std::vector<Real> xs;
    for (const auto& r : rows) xs.push_back(get(r));
    std::sort(xs.begin(), xs.end(), [](const Real& a, const Real& b) { return a < b; });
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    return xs;
  };
  auto xs1 = distinct([](const Row& r) { return r.x1; });
  auto xs2 = distinct([](const Row& r) { return r.x2; });
  const auto n1 = static_cast<int>(xs1.size());
  const auto n2 = static_cast<int>(xs2.size());
  if (n1 < 2 || n2 < 2 || rows.size() != static_cast<std::size_t>(n1) * static_cast<std::size_t>(n2)) {
    throw ValidationError("grid file is not a complete rectangular grid with at least 2x2 nodes");
  }
  // Uniform spacing over exactly [0,1] in each axis, to a loose decimal tolerance.
  const Real slack = Real(1e-12);
  auto check_axis = [&](const std::vector<Real>& xs, const char* name) {
    const int n = static_cast<int>(xs.size());
    for (int i = 0; i < n; ++i) {
      if (num::abs(xs[i] - Real(i) / Real(n - 1)) > slack) {
        throw ValidationError(std::string("grid axis ") + name + " is not uniform on [0,1]");
      }
    }
  };
  check_axis(xs1, "x1");
  check_axis(xs2, "x2");
  std::vector<Real> values(rows.size());
  std::vector<bool> seen(rows.size(), false);
  for (const auto& r : rows) {
    long i = (r.x1 * Real(n1 - 1) + Real(0.5)).to_long_floor();
    long j = (r.x2 * Real(n2 - 1) + Real(0.5)).to_long_floor();
    auto k = static_cast<std::size_t>(i * n2 + j);
    if (seen[k]) throw ValidationError("duplicate grid node in " + path.string());
    if (r.v.sign() < 0) throw ValidationError("negative grid value in " + path.string());
    seen[k] = true;
    values[k] = r.v;
  }
  return std::make_shared<GridModel>(id, n1, n2, std::move(values));
}

}  // namespace

Density::Density(std::shared_ptr<const Model> model, bool normalize)
    : model_(std::move(model)), normalize_(normalize), id_(model_->id()), scale_(1) {
  if (normalize_) {
    Real m = model_->moment(0, 0);
    if (!(m > Real(0))) throw ValidationError("cannot normalize a density with zero mass");
    scale_ = Real(1) / m;
    id_ += "+normalized";
  }
  kinks_x1_ = model_->kink_lines_x1();
  kinks_x2_ = model_->kink_lines_x2();
}

Real Density::eval(const Real& x1, const Real& x2) const {
  if (x1.sign() < 0 || x2.sign() < 0 || x1 > Real(1) || x2 > Real(1)) return Real(0);
  return eval_inside(x1, x2);
}

Real Density::eval_inside(const Real& x1, const Real& x2) const {
  if (normalize_) return model_->eval(x1, x2) * scale_;
  return model_->eval(x1, x2);
}

Real Density::true_moment(int a, int b) const {
  if (a < 0 || b < 0) throw DomainError("moment indices must be nonnegative");
  if (normalize_) return model_->moment(a, b) * scale_;
  return model_->moment(a, b);
}

std::optional<DerivativeNorms> Density::derivative_norms() const {
  auto n = model_->derivative_norms();
  if (n && normalize_) {
    double s = scale_.to_double();
    n->f10 *= s;
    n->f01 *= s;
    n->f20 *= s;
    n->f11 *= s;
    n->f02 *= s;
  }
  return n;
}

std::vector<Vertex> Density::vertices() const {
  std::vector<Real> xs1{Real(0)}, xs2{Real(0)};
  for (const auto& k : kinks_x1_) xs1.push_back(k);
  for (const auto& k : kinks_x2_) xs2.push_back(k);
  xs1.emplace_back(1);
  xs2.emplace_back(1);
  std::vector<Vertex> out;
  for (const auto& a : xs1) {
    for (const auto& b : xs2) out.push_back({a, b});
  }
  return out;
}

Density make_density(const std::string& requested) {
  std::string id = requested;
  bool normalize = false;
  const std::string suffix = "+normalized";
  if (id.size() > suffix.size() && id.compare(id.size() - suffix.size(), suffix.size(), suffix) == 0) {
    normalize = true;
    id.resize(id.size() - suffix.size());
  }
  std::shared_ptr<const Model> model;
  if (id == "uniform") {
    model = monomial(id, 0, 0);
  } else if (id == "xy") {
    model = monomial(id, 1, 1);
  } else if (id == "x") {
    model = monomial(id, 1, 0);
  } else if (id == "x2y") {
    model = monomial(id, 2, 1);
  } else if (id.rfind("monomial:", 0) == 0) {
    auto f = split(id.substr(9), ',');
    if (f.size() != 2) throw ValidationError("monomial id must be monomial:a,b");
    int a = parse_int(f[0], id);
    int b = parse_int(f[1], id);
    if (a < 0 || b < 0) throw ValidationError("monomial exponents must be nonnegative");
    model = monomial(id, a, b);
  } else if (id == "poly-demo") {
    // 1 + x - y^2 + 2 x^2 y, zero only at the corner (0,1)
    model = parse_poly(id, "0,0,1;1,0,1;0,2,-1;2,1,2");
  } else if (id.rfind("poly:", 0) == 0) {
    model = parse_poly(id, id.substr(5));
  } else if (id == "smooth-bump") {
    model = std::make_shared<SmoothBumpModel>();
  } else if (id == "grid-demo") {
    model = grid_demo();
  } else if (id.rfind("grid:", 0) == 0) {
    model = read_grid(id.substr(5), id);
  } else {
    throw ValidationError("unknown density id '" + requested + "'");
  }
  return Density(std::move(model), normalize);
}

std::vector<std::string> registry_ids() {
  return {"uniform", "xy", "x", "x2y", "poly-demo", "smooth-bump", "grid-demo"};
}

Density load_grid_csv(const std::filesystem::path& path) {
  return Density(read_grid(path, "grid:" + path.string()));
}

MomentTriangle::MomentTriangle(int max_order) : max_order_(max_order) {
  if (max_order < 0) throw DomainError("moment triangle order must be nonnegative");
  const auto k = static_cast<std::size_t>(max_order) + 1;
  values_.resize(k * (k + 1) / 2);
}

const Real& MomentTriangle::at(int a, int b) const {
  if (!contains(a, b)) {
    throw IncompletenessError("moment (" + std::to_string(a) + "," + std::to_string(b) +
                                  ") is outside a triangle of order " + std::to_string(max_order_),
                              a, b);
  }
  return values_[index(a, b)];
}

Real& MomentTriangle::at(int a, int b) {
  if (!contains(a, b)) {
    throw IncompletenessError("moment (" + std::to_string(a) + "," + std::to_string(b) +
                                  ") is outside a triangle of order " + std::to_string(max_order_),
                              a, b);
  }
  return values_[index(a, b)];
}

MomentTriangle moment_triangle(const Density& d, int max_order) {
  MomentTriangle t(max_order);
  for (int k = 0; k <= max_order; ++k) {
    for (int b = 0; b <= k; ++b) t.at(k - b, b) = d.true_moment(k - b, b);
  }
  return t;
}

}  // namespace mrt::density
