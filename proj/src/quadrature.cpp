#include "mrt/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <string>
#include <utility>

#include "mrt/errors.hpp"

namespace mrt::num {

namespace {

GaussRule compute_gauss_legendre(int n) {
  const int bits = working_precision();
  const Real tiny = epsilon_pow2(bits - 4);
  GaussRule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  const Real one(1);
  for (int i = 1; i <= (n + 1) / 2; ++i) {
    Real x(std::cos(M_PI * (i - 0.25) / (n + 0.5)));
    Real dp;
    for (int iter = 0, extra = 0; iter < 200; ++iter) {
      Real p0(1), p1(x);
      for (int k = 2; k <= n; ++k) {
        Real p2 = x * p1;
        p2 *= static_cast<long>(2 * k - 1);
        p2.sub_product(p0, Real(k - 1));
        p2 /= static_cast<long>(k);
        p0 = std::move(p1);
        p1 = std::move(p2);
      }
      if (n == 1) p0 = one;
      // p1 = P_n(x), p0 = P_{n-1}(x)
      dp = (x * p1 - p0) * Real(n) / (x * x - one);
      Real dx = p1 / dp;
      x -= dx;
      if (abs(dx) <= tiny && ++extra >= 2) break;
    }
    Real w = Real(2) / ((one - x * x) * dp * dp);
    const auto lo = static_cast<std::size_t>(i - 1);
    const auto hi = static_cast<std::size_t>(n - i);
    rule.nodes[lo] = -x;
    rule.nodes[hi] = x;
    rule.weights[lo] = w;
    rule.weights[hi] = w;
  }
  if (n % 2 == 1) rule.nodes[static_cast<std::size_t>(n / 2)] = Real(0);
  return rule;
}

struct PanelEstimate {
  std::vector<Real> value;
  std::vector<Real> magnitude;  // sum of |w f|, for the relative floor
};

class AdaptiveIntegrator {
 public:
  AdaptiveIntegrator(const VectorIntegrand& f, std::size_t dim, const Real& tol,
                     const Real& total_length, const QuadratureOptions& opts,
                     QuadratureRule* rule)
      : f_(f),
        dim_(dim),
        tol_(tol),
        total_length_(total_length),
        opts_(opts),
        gauss_(gauss_legendre(opts.order)),
        floor_(tolerance_floor()),
        rule_(rule),
        sum_(dim),
        scratch_(dim) {}

  void integrate_piece(const Real& a, const Real& b) {
    if (a == b) return;
    PanelEstimate whole = panel(a, b, nullptr);
    refine(a, b, whole, 0);
  }

  std::vector<Real> take_sum() { return std::move(sum_); }

 private:
  // Gauss estimate on [a, b]. When `nodes_out` is non-null the mapped nodes and
  // weights are appended to it.
  PanelEstimate panel(const Real& a, const Real& b, QuadratureRule* nodes_out) {
    PanelEstimate est{std::vector<Real>(dim_), std::vector<Real>(dim_)};
    Real half = (b - a) / Real(2);
    Real mid = (a + b) / Real(2);
    for (std::size_t i = 0; i < gauss_.nodes.size(); ++i) {
      Real x = mid;
      x.add_product(half, gauss_.nodes[i]);
      f_(x, scratch_);
      for (std::size_t k = 0; k < dim_; ++k) {
        Real term = gauss_.weights[i] * scratch_[k];
        est.magnitude[k] += abs(term);
        est.value[k] += term;
      }
      if (nodes_out != nullptr) {
        nodes_out->nodes.push_back(x);
        nodes_out->weights.push_back(gauss_.weights[i] * half);
      }
    }
    for (std::size_t k = 0; k < dim_; ++k) {
      est.value[k] *= half;
      est.magnitude[k] *= abs(half);
    }
    return est;
  }

  void refine(const Real& a, const Real& b, const PanelEstimate& whole, int depth) {
    Real mid = (a + b) / Real(2);
    QuadratureRule local;
    QuadratureRule* local_ptr = rule_ != nullptr ? &local : nullptr;
    PanelEstimate left = panel(a, mid, local_ptr);
    PanelEstimate right = panel(mid, b, local_ptr);
    Real share = tol_ * (b - a) / total_length_;
    bool accepted = true;
    Real worst(0);
    for (std::size_t k = 0; k < dim_; ++k) {
      Real both = left.value[k] + right.value[k];
      Real diff = abs(both - whole.value[k]);
      Real allowed = max(share, floor_ * (left.magnitude[k] + right.magnitude[k]));
      if (diff > allowed) {
        accepted = false;
        worst = max(worst, diff);
      }
    }
    if (accepted) {
      for (std::size_t k = 0; k < dim_; ++k) {
        sum_[k] += left.value[k];
        sum_[k] += right.value[k];
      }
      if (rule_ != nullptr) {
        for (std::size_t i = 0; i < local.nodes.size(); ++i) {
          rule_->nodes.push_back(std::move(local.nodes[i]));
          rule_->weights.push_back(std::move(local.weights[i]));
        }
      }
      return;
    }
    if (depth >= opts_.max_depth) {
      throw QuadratureError("adaptive quadrature did not converge on [" + a.str(17) + ", " +
                                b.str(17) + "]; achieved error " + worst.str(6) +
                                " against target " + share.str(6),
                            worst.to_double());
    }
    refine(a, mid, left, depth + 1);
    refine(mid, b, right, depth + 1);
  }

  const VectorIntegrand& f_;
  std::size_t dim_;
  Real tol_;
  Real total_length_;
  QuadratureOptions opts_;
  const GaussRule& gauss_;
  Real floor_;
  QuadratureRule* rule_;
  std::vector<Real> sum_;
  std::vector<Real> scratch_;
};

void check_tolerance(const Real& tol) {
  if (!(tol > Real(0))) throw DomainError("quadrature tolerance must be positive");
}

}  // namespace

Real tolerance_floor() { return epsilon_pow2(working_precision() - 16); }

namespace {
std::mutex g_tol_mutex;
std::optional<std::string> g_tol_override;  // decimal, re-read at the current precision
}  // namespace

Real default_tolerance() {
  {
    std::lock_guard<std::mutex> lock(g_tol_mutex);
    if (g_tol_override) return Real::from_string(*g_tol_override);
  }
  return epsilon_pow2(working_precision() - 32);
}

void set_default_tolerance(const std::optional<Real>& tol) {
  if (tol && !(*tol > Real(0))) throw DomainError("quadrature tolerance must be positive");
  std::lock_guard<std::mutex> lock(g_tol_mutex);
  if (tol) {
    g_tol_override = tol->str();
  } else {
    g_tol_override.reset();
  }
}

const GaussRule& gauss_legendre(int n) {
  if (n < 1) throw DomainError("Gauss-Legendre rule needs at least one node");
  static std::mutex mutex;
  static std::map<std::pair<int, int>, GaussRule> cache;
  const auto key = std::make_pair(n, working_precision());
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, compute_gauss_legendre(n)).first;
  return it->second;
}

std::vector<Real> integrate_1d(const VectorIntegrand& f, std::size_t dim,
                               std::span<const Real> breakpoints, const Real& tol,
                               const QuadratureOptions& opts, QuadratureRule* accepted_rule) {
  check_tolerance(tol);
  if (breakpoints.size() < 2) throw DomainError("integration needs at least two breakpoints");
  for (std::size_t i = 1; i < breakpoints.size(); ++i) {
    if (breakpoints[i] < breakpoints[i - 1]) throw DomainError("breakpoints must be ascending");
  }
  Real total = breakpoints.back() - breakpoints.front();
  if (total.is_zero()) return std::vector<Real>(dim);
  AdaptiveIntegrator integrator(f, dim, tol, total, opts, accepted_rule);
  for (std::size_t i = 1; i < breakpoints.size(); ++i) {
    integrator.integrate_piece(breakpoints[i - 1], breakpoints[i]);
  }
  return integrator.take_sum();
}

Real integrate_1d(const ScalarIntegrand& f, std::span<const Real> breakpoints, const Real& tol,
                  const QuadratureOptions& opts) {
  VectorIntegrand g = [&f](const Real& x, std::vector<Real>& out) { out[0] = f(x); };
  return std::move(integrate_1d(g, 1, breakpoints, tol, opts)[0]);
}

Real integrate_1d(const ScalarIntegrand& f, const Interval& iv, const Real& tol,
                  const QuadratureOptions& opts) {
  const Real ends[2] = {iv.lo(), iv.hi()};
  return integrate_1d(f, std::span<const Real>(ends, 2), tol, opts);
}

std::vector<Real> integrate_tanh_sinh(const VectorIntegrand& f, std::size_t dim,
                                      const Interval& iv, const Real& tol, int max_level) {
  check_tolerance(tol);
  std::vector<Real> zero(dim);
  if (iv.length().is_zero()) return zero;

  const int bits = working_precision();
  // Beyond t_max the abscissae round onto the endpoints.
  const double t_max =
      std::asinh((2.0 / M_PI) * 0.5 * (bits + 1) * std::log(2.0));
  const Real centre = (iv.lo() + iv.hi()) / Real(2);
  const Real radius = iv.length() / Real(2);
  const Real half_pi = pi() / Real(2);
  const Real floor = tolerance_floor();

  std::vector<Real> sum(dim), magnitude(dim), scratch(dim);
  // Adds the node pair at +-t (t > 0) or the centre (t == 0).
  auto add_pair = [&](const Real& t) {
    Real et = exp(t);
    Real cosh_t = (et + Real(1) / et) / Real(2);
    Real s = half_pi * (et - Real(1) / et) / Real(2);
    Real es = exp(s);
    Real cosh_s = (es + Real(1) / es) / Real(2);
    Real weight = radius * half_pi * cosh_t / (cosh_s * cosh_s);
    // 1 - tanh(s) = 2 / (e^{2s} + 1), accurate near the endpoints.
    Real gap = Real(2) / (es * es + Real(1));
    Real offset = radius * gap;
    auto visit = [&](const Real& x) {
      if (!(x > iv.lo() && x < iv.hi())) return;
      f(x, scratch);
      for (std::size_t k = 0; k < dim; ++k) {
        Real term = weight * scratch[k];
        magnitude[k] += abs(term);
        sum[k] += term;
      }
    };
    if (t.is_zero()) {
      visit(centre);
      return;
    }
    visit(iv.lo() + offset);
    visit(iv.hi() - offset);
  };

  // level 0: integer multiples of step 1
  const long n0 = static_cast<long>(std::floor(t_max));
  add_pair(Real(0));
  for (long j = 1; j <= n0; ++j) add_pair(Real(j));
  std::vector<Real> previous = sum;  // step 1 estimate
  Real step(1);
  for (int level = 1; level <= max_level; ++level) {
    step /= 2L;
    const long count = static_cast<long>(std::floor(t_max / step.to_double()));
    for (long j = 1; j <= count; j += 2) {
      add_pair(step * Real(j));
    }
    std::vector<Real> current(dim);
    bool converged = level >= 3;
    Real worst(0);
    for (std::size_t k = 0; k < dim; ++k) {
      current[k] = sum[k] * step;
      Real diff = abs(current[k] - previous[k]);
      Real allowed = max(tol, floor * magnitude[k] * step);
      if (diff > allowed) {
        converged = false;
        worst = max(worst, diff);
      }
    }
    if (converged) return current;
    if (level == max_level) {
      throw QuadratureError("tanh-sinh quadrature did not converge; achieved error " +
                                worst.str(6),
                            worst.to_double());
    }
    previous = std::move(current);
  }
  return previous;
}

Real integrate_tanh_sinh(const ScalarIntegrand& f, const Interval& iv, const Real& tol,
                         int max_level) {
  VectorIntegrand g = [&f](const Real& x, std::vector<Real>& out) { out[0] = f(x); };
  return std::move(integrate_tanh_sinh(g, 1, iv, tol, max_level)[0]);
}

}  // namespace mrt::num
