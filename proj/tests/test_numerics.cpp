#include <random>
#include <vector>

#include "doctest.h"
#include "mrt/errors.hpp"
#include "mrt/linalg.hpp"
#include "mrt/numerics.hpp"
#include "mrt/quadrature.hpp"

using namespace mrt::num;
using mrt::DomainError;
using mrt::PrecisionError;
using mrt::SingularityError;

namespace {

Real rel_err(const Real& got, const Real& want) { return abs(got - want) / abs(want); }

// Unit-interval bump e^{-1/(1-t^2)}, zero at and beyond the ends.
Real bump(const Real& t) {
  Real q = Real(1) - t * t;
  if (q.sign() <= 0) return Real(0);
  return exp(-(Real(1) / q));
}

Real trapezoid(long panels) {
  Real h = Real(2) / Real(panels);
  Real sum(0);
  for (long i = 1; i < panels; ++i) sum += bump(Real(-1) + h * Real(i));
  return sum * h;
}

}  // namespace

TEST_CASE("binomials are exact integers") {
  CHECK(binomial(0, 0) == Real(1));
  CHECK(binomial(4, 2) == Real(6));
  CHECK(binomial(20, 10) == Real(184756));
  // 60 choose 30 exceeds 2^53 and still has to be exact
  CHECK(binomial(60, 30) == Real::from_string("118264581564861424"));
  CHECK_THROWS_AS(binomial(3, 4), DomainError);
  CHECK_THROWS_AS(binomial(-1, 0), DomainError);
}

TEST_CASE("interval rejects reversed ends") {
  CHECK_THROWS_AS(Interval(Real(1), Real(0)), DomainError);
  Interval iv(Real(-1), Real(2));
  CHECK(iv.length() == Real(3));
}

TEST_CASE("mixed precision arithmetic is rejected") {
  Real a(1);
  Real b = Real::with_precision(128);
  CHECK_THROWS_AS(a + b, PrecisionError);
}

TEST_CASE("serialization digit count round-trips") {
  Real third = Real(1) / Real(3);
  Real back = Real::from_string(third.str());
  CHECK(back == third);
  CHECK(decimal_digits_for(256) == 80);
}

TEST_CASE("integrate_1d on constants and low degree polynomials") {
  Interval unit(Real(0), Real(1));
  Real tol = Real::from_string("1e-30");
  CHECK(abs(integrate_1d([](const Real&) { return Real(1); }, unit, tol) - Real(1)) < tol);
  CHECK(abs(integrate_1d([](const Real& t) { return t * t; }, unit, tol) - Real(1) / Real(3)) <
        tol);
}

TEST_CASE("integrate_1d is exact for degrees 0..20") {
  Interval iv(Real(-1), Real(2));
  Real tol = Real::from_string("1e-40");
  for (unsigned long d = 0; d <= 20; ++d) {
    Real got = integrate_1d([d](const Real& t) { return pow(t, d); }, iv, tol);
    Real want = (pow(Real(2), d + 1) - pow(Real(-1), d + 1)) / Real(static_cast<long>(d + 1));
    CHECK(rel_err(got, want) < Real::from_string("1e-60"));
  }
}

TEST_CASE("bump integral matches a refined trapezoid oracle") {
  Real tol = Real::from_string("1e-30");
  Real quad = integrate_1d(bump, Interval(Real(-1), Real(1)), tol);
  // Richardson on the composite rule; the bump is flat at the ends so the
  // plain rule is already far below the target.
  const long n = 1000000;
  Real t1 = trapezoid(n / 2);
  Real t2 = trapezoid(n);
  Real oracle = t2 + (t2 - t1) / Real(3);
  CHECK(abs(quad - oracle) < Real::from_string("1e-25"));
}

TEST_CASE("tanh-sinh agrees with adaptive Gauss on the bump") {
  Real tol = Real::from_string("1e-40");
  Interval iv(Real(-1), Real(1));
  Real gauss = integrate_1d(bump, iv, tol);
  Real ts = integrate_tanh_sinh(bump, iv, tol);
  CHECK(abs(gauss - ts) < Real::from_string("1e-38"));
}

TEST_CASE("adaptive quadrature reports non-convergence") {
  QuadratureOptions opts;
  opts.max_depth = 2;
  auto wild = [](const Real& t) { return sin(Real(1000) * t); };
  try {
    (void)integrate_1d(wild, Interval(Real(0), Real(10)), Real::from_string("1e-30"), opts);
    FAIL("expected a quadrature error");
  } catch (const mrt::QuadratureError& e) {
    CHECK(e.achieved_error() > 0.0);
  }
}

TEST_CASE("vector integrand exports a reusable rule") {
  const Real ends[3] = {Real(0), Real::from_string("0.3"), Real(1)};
  QuadratureRule rule;
  auto f = [](const Real& x, std::vector<Real>& out) {
    out[0] = x;
    out[1] = x * x;
  };
  auto v = integrate_1d(f, 2, ends, Real::from_string("1e-40"), {}, &rule);
  CHECK(abs(v[1] - Real(1) / Real(3)) < Real::from_string("1e-60"));
  Real again(0);
  for (std::size_t i = 0; i < rule.nodes.size(); ++i)
    again.add_product(rule.weights[i], rule.nodes[i] * rule.nodes[i]);
  CHECK(abs(again - v[1]) < Real::from_string("1e-70"));
}

TEST_CASE("quadrature results are bit-identical across calls") {
  auto f = [](const Real& t) { return exp(t) * sin(Real(3) * t); };
  Interval iv(Real(0), Real(2));
  Real tol = Real::from_string("1e-50");
  CHECK(integrate_1d(f, iv, tol) == integrate_1d(f, iv, tol));
}

TEST_CASE("lower triangular solves") {
  Matrix id = Matrix::identity(3);
  std::vector<Real> y = {Real(1), Real(2), Real(3)};
  CHECK(solve_lower_triangular(id, y) == y);

  Matrix l(2, 2);
  Real c = Real::from_string("0.7");
  l(0, 0) = Real(1);
  l(1, 0) = c;
  l(1, 1) = Real(1);
  std::vector<Real> ab = {Real(2), Real(5)};
  auto x = solve_lower_triangular(l, ab);
  CHECK(x[0] == Real(2));
  CHECK(x[1] == Real(5) - c * Real(2));

  l(1, 1) = Real(0);
  CHECK_THROWS_AS(solve_lower_triangular(l, ab), SingularityError);
}

TEST_CASE("dense solve on identity and random construct-then-solve") {
  std::vector<Real> y = {Real(3), Real(-1)};
  CHECK(solve_dense(Matrix::identity(2), y) == y);

  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    Matrix a(5, 5);
    std::vector<Real> x(5);
    for (std::size_t i = 0; i < 5; ++i) {
      x[i] = Real(u(rng));
      for (std::size_t j = 0; j < 5; ++j) a(i, j) = Real(u(rng));
      a(i, i) += Real(3);
    }
    auto b = multiply(a, x);
    auto back = solve_dense(a, b);
    for (std::size_t i = 0; i < 5; ++i) CHECK(abs(back[i] - x[i]) < epsilon_pow2(128));
  }
}

TEST_CASE("singular matrices carry the pivot magnitude") {
  Matrix a(2, 2);
  a(0, 0) = Real(1);
  a(0, 1) = Real(2);
  a(1, 0) = Real(2);
  a(1, 1) = Real(4);
  std::vector<Real> y = {Real(1), Real(1)};
  try {
    (void)solve_dense(a, y);
    FAIL("expected singularity");
  } catch (const SingularityError& e) {
    CHECK(e.magnitude() < 1e-60);
  }
}

TEST_CASE("least squares reproduces an exact overdetermined fit") {
  Matrix a(6, 3);
  std::vector<Real> x = {Real(1), Real(-2), Real(3)};
  for (std::size_t i = 0; i < 6; ++i) {
    Real t(static_cast<long>(i));
    a(i, 0) = Real(1);
    a(i, 1) = t;
    a(i, 2) = t * t;
  }
  auto y = multiply(a, x);
  auto sol = solve_least_squares(a, y);
  for (std::size_t i = 0; i < 3; ++i) CHECK(abs(sol.x[i] - x[i]) < epsilon_pow2(200));
  CHECK(sol.residual_norm < epsilon_pow2(200));
  CHECK(sol.condition > Real(1));
}

TEST_CASE("determinant and condition number") {
  Matrix a(2, 2);
  a(0, 0) = Real(2);
  a(0, 1) = Real(1);
  a(1, 0) = Real(1);
  a(1, 1) = Real(3);
  LuFactorization lu(a);
  CHECK(abs(lu.determinant() - Real(5)) < epsilon_pow2(240));
  // ||A||_1 = 4, ||A^-1||_1 = 4/5
  CHECK(abs(lu.condition_1() - Real::from_string("3.2")) < epsilon_pow2(240));
}
