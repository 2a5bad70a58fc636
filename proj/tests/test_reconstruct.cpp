#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "mrt/errors.hpp"
#include "mrt/reconstruct.hpp"

using namespace mrt;
using num::Real;

namespace {

Real frac(long a, long b) { return Real(a) / Real(b); }

Real factorial(int n) {
  Real r(1);
  for (int i = 2; i <= n; ++i) r *= Real(i);
  return r;
}

// One-dimensional version of the moment formula for mu_a = int t^a g(t) dt:
// (m+1)!/(i!) sum_a (-1)^a mu_{a+i} / (a! (m-i-a)!), i = floor(m x).
Real ml_1d(const std::vector<Real>& mu, int m, const Real& x) {
  int i = static_cast<int>(std::floor(x.to_double() * m));
  if (i > m) i = m;
  Real sum(0);
  for (int a = 0; a <= m - i; ++a) {
    Real term = mu[a + i] / (factorial(a) * factorial(m - i - a));
    sum += (a % 2 == 0) ? term : -term;
  }
  return factorial(m + 1) / factorial(i) * sum;
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "mrt_reconstruct_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("moment formula reproduces low-degree cases exactly") {
  const double tol = num::epsilon_pow2(num::working_precision() / 2).to_double();
  auto u = density::moment_triangle(density::make_density("uniform"), 40);
  for (auto [m, n] : {std::pair{3, 3}, std::pair{10, 10}, std::pair{20, 20}}) {
    for (double x : {0.0, 0.37, 0.5, 1.0}) {
      CHECK(num::abs(reconstruct::ml_value(u, m, n, Real(x), Real(1 - x)).value - Real(1)).to_double() < tol);
    }
  }
  auto x = density::moment_triangle(density::make_density("monomial:1,0"), 20);
  CHECK(num::abs(reconstruct::ml_value(x, 10, 10, Real(0.5), Real(0.5)).value - frac(1, 2)).to_double() < 1e-60);
  auto xy = density::moment_triangle(density::make_density("xy"), 20);
  CHECK(num::abs(reconstruct::ml_value(xy, 10, 10, Real(0.5), Real(0.5)).value - frac(1, 4)).to_double() < 1e-60);
}

TEST_CASE("the corner point keeps a single term") {
  auto t = density::moment_triangle(density::make_density("poly-demo"), 14);
  for (auto [m, n] : {std::pair{4, 6}, std::pair{7, 7}}) {
    Real want = Real((m + 1) * (n + 1)) * t.at(m, n);
    auto v = reconstruct::ml_value(t, m, n, Real(1), Real(1));
    CHECK(num::abs(v.value - want).to_double() < 1e-70);
    CHECK(num::abs(v.max_term - num::abs(want)).to_double() < 1e-70);
  }
}

TEST_CASE("missing moments and points outside the square are rejected") {
  auto t = density::moment_triangle(density::make_density("xy"), 10);
  CHECK_THROWS_AS(reconstruct::ml_value(t, 6, 6, Real(0.5), Real(0.5)), IncompletenessError);
  CHECK_THROWS_AS(reconstruct::ml_value(t, 5, 5, Real(1.2), Real(0.5)), DomainError);
  CHECK_THROWS_AS(reconstruct::ml_value(t, 5, 5, Real(0.2), Real(-0.1)), DomainError);
}

TEST_CASE("moment formula equals the beta-kernel average of f") {
  for (const auto& id : {"poly-demo", "smooth-bump", "grid-demo"}) {
    CAPTURE(id);
    auto d = density::make_density(id);
    auto t = density::moment_triangle(d, 14);
    for (auto [m, n] : {std::pair{5, 7}, std::pair{7, 5}}) {
      reconstruct::BetaKernelOracle oracle(d, m, n);
      for (auto [a, b] : {std::pair{0.1, 0.9}, std::pair{0.55, 0.3}, std::pair{1.0, 0.0}}) {
        Real x1(a), x2(b);
        Real ml = reconstruct::ml_value(t, m, n, x1, x2).value;
        CHECK(num::abs(ml - oracle.value(x1, x2)).to_double() < 1e-40);
      }
    }
  }
}

TEST_CASE("separable densities give a product of one-dimensional formulas") {
  // f = x1^2 x2: mu_a = 1/(a+3) in x1 and 1/(b+2) in x2
  auto t = density::moment_triangle(density::make_density("x2y"), 24);
  std::vector<Real> mu1, mu2;
  for (int a = 0; a <= 12; ++a) {
    mu1.push_back(frac(1, a + 3));
    mu2.push_back(frac(1, a + 2));
  }
  for (auto [a, b] : {std::pair{0.2, 0.7}, std::pair{0.9, 0.1}, std::pair{0.5, 0.5}}) {
    Real x1(a), x2(b);
    Real want = ml_1d(mu1, 12, x1) * ml_1d(mu2, 12, x2);
    CHECK(num::abs(reconstruct::ml_value(t, 12, 12, x1, x2).value - want).to_double() < 1e-55);
  }
}

TEST_CASE("grids: nodes, uniform density, serial and parallel agree") {
  auto nodes = reconstruct::grid_nodes(5);
  CHECK(nodes.size() == 5);
  CHECK(nodes[1] == frac(1, 4));
  CHECK(reconstruct::grid_nodes(1)[0] == Real(1));

  auto u = density::moment_triangle(density::make_density("uniform"), 16);
  auto g = reconstruct::reconstruct_grid(u, 8, 8, 11, 11);
  for (const auto& row : g.values) {
    for (const auto& v : row) CHECK(num::abs(v - Real(1)).to_double() < 1e-60);
  }

  auto d = density::make_density("xy");
  auto t = density::moment_triangle(d, 32);
  auto a = reconstruct::reconstruct_grid(t, 16, 16, 21, 21, Execution::serial);
  auto b = reconstruct::reconstruct_grid(t, 16, 16, 21, 21, Execution::parallel);
  CHECK(a.values == b.values);
  // raw rate bound C_f / (n + 2) on exact moments
  const double cf = reconstruct::rate_constant(*d.derivative_norms());
  CHECK(reconstruct::sup_error(a, d).to_double() <= cf / 18.0);
  CHECK(a.digits_lost.to_double() >= 0.0);
}

TEST_CASE("sup_error of a grid sampled from f is zero") {
  auto d = density::make_density("poly-demo");
  reconstruct::ReconstructionGrid g;
  g.x1 = reconstruct::grid_nodes(7);
  g.x2 = reconstruct::grid_nodes(9);
  g.values.assign(7, std::vector<Real>(9));
  for (std::size_t i = 0; i < 7; ++i) {
    for (std::size_t j = 0; j < 9; ++j) g.values[i][j] = d.eval(g.x1[i], g.x2[j]);
  }
  CHECK(reconstruct::sup_error(g, d).is_zero());
  g.values[3][4] += Real(0.125);
  CHECK(reconstruct::sup_error(g, d) == Real(0.125));
}

TEST_CASE("choose_h and the rate constants") {
  CHECK(num::abs(reconstruct::choose_h(14, 2.5, 2.5) - Real(0.25)).to_double() < 1e-15);
  for (int n : {2, 7, 30}) {
    CHECK(num::abs(reconstruct::choose_h(n, 4.0, 1.0) - Real(2) / num::sqrt(Real(n + 2))).to_double() < 1e-15);
  }
  CHECK(reconstruct::choose_h(40, 1.0, 1.0) < reconstruct::choose_h(10, 1.0, 1.0));
  CHECK_THROWS_AS(reconstruct::choose_h(10, 0.0, 1.0), ValidationError);
  CHECK_THROWS_AS(reconstruct::choose_h(10, 1.0, -1.0), ValidationError);

  density::DerivativeNorms xy{1.0, 1.0, 0.0, 1.0, 0.0};
  CHECK(reconstruct::rate_constant(xy) == doctest::Approx(4.5));
  CHECK(reconstruct::smoothing_constant(xy, 0.5) == doctest::Approx(0.25));
}

TEST_CASE("log-log slope of an exact power law") {
  std::vector<int> n{8, 16, 32, 64};
  std::vector<double> e;
  for (int k : n) e.push_back(3.0 / k);
  CHECK(reconstruct::fit_loglog_slope(n, e) == doctest::Approx(-1.0));
  CHECK(std::isnan(reconstruct::fit_loglog_slope({8}, {0.1})));
}

TEST_CASE("grid files round-trip and check precision") {
  auto t = density::moment_triangle(density::make_density("xy"), 8);
  auto g = reconstruct::reconstruct_grid(t, 4, 4, 5, 6);
  g.source = "xy";
  g.h = Real(0.05);
  const auto p = scratch("g.csv");
  reconstruct::write_grid(g, p);
  auto back = reconstruct::read_grid(p);
  CHECK(back.values == g.values);
  CHECK(back.x1 == g.x1);
  CHECK(back.x2 == g.x2);
  CHECK(back.m == 4);
  CHECK(back.source == "xy");
  REQUIRE(back.h);
  CHECK(*back.h == *g.h);
  num::PrecisionScope other(128);
  CHECK_THROWS_AS(reconstruct::read_grid(p), PrecisionError);
}
