#include <filesystem>
#include <random>

#include "doctest.h"
#include "mrt/errors.hpp"
#include "mrt/linalg.hpp"
#include "mrt/momentsys.hpp"
#include "mrt/numerics.hpp"

using namespace mrt;
using num::Real;
using momentsys::MomentSet;

namespace {

Real frac(long a, long b) { return Real(a) / Real(b); }

// b^(k)(theta) = sum_j C(k,j) cos^j sin^(k-j) gamma_{j,k-j}, written out here
// instead of going through build_A.
MomentSet exact_raw(const density::Density& d, const std::vector<Real>& angles, int K) {
  auto t = density::moment_triangle(d, K);
  MomentSet ms;
  ms.kind = MomentSet::Kind::raw;
  ms.max_order = K;
  ms.angles = angles;
  ms.values.assign(K + 1, std::vector<Real>(angles.size()));
  for (int k = 0; k <= K; ++k) {
    for (std::size_t i = 0; i < angles.size(); ++i) {
      const Real c = num::cos(angles[i]);
      const Real s = num::sin(angles[i]);
      Real sum(0);
      for (int j = 0; j <= k; ++j) {
        sum += num::binomial(k, j) * num::pow(c, static_cast<unsigned long>(j)) *
               num::pow(s, static_cast<unsigned long>(k - j)) * t.at(j, k - j);
      }
      ms.values[k][i] = sum;
    }
  }
  return ms;
}

// Plain cofactor expansion; fine for the small sizes used here.
Real cofactor_det(const std::vector<std::vector<Real>>& a) {
  const std::size_t n = a.size();
  if (n == 1) return a[0][0];
  Real det(0);
  for (std::size_t c = 0; c < n; ++c) {
    std::vector<std::vector<Real>> minor;
    for (std::size_t r = 1; r < n; ++r) {
      std::vector<Real> row;
      for (std::size_t cc = 0; cc < n; ++cc) {
        if (cc != c) row.push_back(a[r][cc]);
      }
      minor.push_back(row);
    }
    Real term = a[0][c] * cofactor_det(minor);
    det += (c % 2 == 0) ? term : -term;
  }
  return det;
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "mrt_momentsys_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("build_C small orders") {
  mollifier::MollifierSpec m(mollifier::Family::bump, Real(0.1), 8);
  auto c0 = momentsys::build_C(0, m);
  CHECK(c0(0, 0) == m.moment(0));
  auto c2 = momentsys::build_C(2, m);
  CHECK(c2(0, 0) == m.moment(0));
  CHECK(c2(1, 1) == m.moment(0));
  CHECK(c2(1, 0).is_zero());
  CHECK(c2(2, 0) == m.moment(2));
  CHECK(c2(2, 1).is_zero());
  CHECK(c2(0, 1).is_zero());
  CHECK(num::abs(m.moment(0) - Real(1)).to_double() < 1e-60);
}

TEST_CASE("build_A entries and validation") {
  const Real pi = num::pi();
  auto a0 = momentsys::build_A(0, std::vector<Real>{Real(0.7)});
  CHECK(a0(0, 0) == Real(1));
  std::vector<Real> th{pi / Real(4), pi / Real(2)};
  auto a1 = momentsys::build_A(1, th);
  const Real h = num::sqrt(Real(2)) / Real(2);
  CHECK(num::abs(a1(0, 0) - h).to_double() < 1e-70);
  CHECK(num::abs(a1(0, 1) - h).to_double() < 1e-70);
  CHECK(num::abs(a1(1, 0) - Real(1)).to_double() < 1e-70);
  CHECK(num::abs(a1(1, 1)).to_double() < 1e-70);
  CHECK_THROWS_AS(momentsys::build_A(1, std::vector<Real>{Real(1), Real(1)}), ValidationError);
  CHECK_THROWS_AS(momentsys::build_A(1, std::vector<Real>{Real(0), Real(1)}), ValidationError);
}

TEST_CASE("determinant of A matches the factored Vandermonde form") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> th(0.05, 3.09);
  for (int k : {1, 2, 4, 6}) {
    std::vector<Real> angles;
    while (angles.size() < static_cast<std::size_t>(k + 1)) angles.emplace_back(th(rng));
    auto a = momentsys::build_A(k, angles);
    std::vector<std::vector<Real>> rows(k + 1, std::vector<Real>(k + 1));
    for (int i = 0; i <= k; ++i) {
      for (int j = 0; j <= k; ++j) rows[i][j] = a(i, j);
    }
    Real direct = cofactor_det(rows);
    Real formula = momentsys::vandermonde_determinant(k, angles);
    CHECK((num::abs(direct - formula) / num::abs(direct)).to_double() < 1e-60);
    // LU agrees too
    num::LuFactorization lu(a);
    CHECK((num::abs(lu.determinant() - direct) / num::abs(direct)).to_double() < 1e-60);
  }
}

TEST_CASE("solve_order on exact data") {
  const Real pi = num::pi();
  auto xy = density::make_density("xy");
  std::vector<Real> angles{pi / Real(4), pi / Real(2)};
  auto ms = exact_raw(xy, angles, 1);
  // the values named in the examples
  CHECK(num::abs(ms.values[1][0] - num::sqrt(Real(2)) / Real(6)).to_double() < 1e-70);
  CHECK(num::abs(ms.values[1][1] - frac(1, 6)).to_double() < 1e-70);

  auto s0 = momentsys::solve_order(ms, 0, momentsys::SolveMode::square);
  CHECK(num::abs(s0.gamma[0] - frac(1, 4)).to_double() < 1e-70);
  auto s1 = momentsys::solve_order(ms, 1, momentsys::SolveMode::square);
  CHECK(num::abs(s1.gamma[0] - frac(1, 6)).to_double() < 1e-70);
  CHECK(num::abs(s1.gamma[1] - frac(1, 6)).to_double() < 1e-70);

  auto u = exact_raw(density::make_density("uniform"), radon::default_angles(3), 1);
  auto su = momentsys::solve_order(u, 1, momentsys::SolveMode::least_squares);
  CHECK(num::abs(su.gamma[0] - frac(1, 2)).to_double() < 1e-70);
  CHECK(num::abs(su.gamma[1] - frac(1, 2)).to_double() < 1e-70);

  CHECK_THROWS_AS(momentsys::solve_order(ms, 2, momentsys::SolveMode::square), IncompletenessError);
  auto thin = exact_raw(xy, {pi / Real(3)}, 1);
  CHECK_THROWS_AS(momentsys::solve_order(thin, 1, momentsys::SolveMode::square), ValidationError);
  CHECK(momentsys::spread_indices(10, 2) == std::vector<std::size_t>{0, 3, 6});
}

TEST_CASE("recover_triangle returns the closed-form moments") {
  for (auto [id, K] : {std::pair{"xy", 2}, std::pair{"uniform", 4}, std::pair{"poly-demo", 8}, std::pair{"xy", 0}}) {
    CAPTURE(id);
    auto d = density::make_density(id);
    auto ms = exact_raw(d, radon::default_angles(K + 3), K);
    for (auto mode : {momentsys::SolveMode::square, momentsys::SolveMode::least_squares}) {
      auto rec = momentsys::recover_triangle(ms, K, mode);
      CHECK(rec.conditions.size() == static_cast<std::size_t>(K + 1));
      for (int a = 0; a <= K; ++a) {
        for (int b = 0; a + b <= K; ++b) {
          CHECK(num::abs(rec.triangle.at(a, b) - d.true_moment(a, b)).to_double() < 1e-55);
        }
      }
    }
  }
}

TEST_CASE("mollified moments round-trip through the transfer matrix") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> v(-1, 1);
  MomentSet b;
  b.kind = MomentSet::Kind::raw;
  b.max_order = 10;
  b.angles = radon::default_angles(4);
  b.values.assign(11, std::vector<Real>(4));
  for (auto& row : b.values) {
    for (auto& x : row) x = Real(v(rng));
  }
  mollifier::MollifierSpec m(mollifier::Family::truncated_gaussian, Real(0.2), 12);
  auto hb = momentsys::b_to_hatb(b, m);
  CHECK(hb.kind == MomentSet::Kind::mollified);
  REQUIRE(hb.mollifier);
  auto back = momentsys::hatb_to_b(hb, m);
  const double tol = num::epsilon_pow2(num::working_precision() / 2).to_double();
  for (int k = 0; k <= 10; ++k) {
    for (std::size_t i = 0; i < 4; ++i) CHECK(num::abs(back.values[k][i] - b.values[k][i]).to_double() < tol);
  }
  CHECK_THROWS_AS(momentsys::hatb_to_b(b, m), ValidationError);
}

TEST_CASE("grid moments of xy rows") {
  auto xy = density::make_density("xy");
  const Real tiny = Real::from_string("1e-9");
  std::vector<Real> angles{tiny, num::pi() / Real(2)};
  auto s = radon::make_sinogram(xy, angles, 2001, Real(0.2));
  auto ms = momentsys::sinogram_moments(s, 3);
  CHECK(ms.kind == MomentSet::Kind::raw);
  CHECK(num::abs(ms.values[0][0] - frac(1, 4)).to_double() < 1e-5);
  // theta ~ 0: p = x1, so b^(k) = 1/(2(k+2))
  for (int k = 0; k <= 3; ++k) CHECK(num::abs(ms.values[k][0] - frac(1, 2 * (k + 2))).to_double() < 1e-5);
  CHECK(num::abs(ms.values[1][1] - frac(1, 6)).to_double() < 1e-5);

  auto cont = momentsys::continuous_moments(xy, angles, 3, nullptr);
  CHECK(num::abs(cont.values[1][1] - frac(1, 6)).to_double() < 1e-60);
  CHECK(num::abs(cont.values[0][0] - frac(1, 4)).to_double() < 1e-60);
}

TEST_CASE("rows that do not decay raise TruncationError") {
  auto u = density::make_density("uniform");
  auto s = radon::make_sinogram(u, radon::default_angles(2), 41, Real(0.2));
  for (auto& row : s.values) row.back() = Real(1);
  CHECK_THROWS_AS(momentsys::sinogram_moments(s, 2), TruncationError);
}

TEST_CASE("moment path selection") {
  auto xy = density::make_density("xy");
  auto s = radon::make_sinogram(xy, radon::default_angles(3), 101, Real(0.2));
  CHECK(momentsys::continuous_available(s));
  radon::NoiseSpec g{radon::NoiseSpec::Kind::gaussian, 1e-6, 0.0, 1};
  CHECK_FALSE(momentsys::continuous_available(radon::add_noise(s, g)));
  CHECK(momentsys::parse_moment_quadrature("auto") == momentsys::MomentQuadrature::automatic);
  CHECK_THROWS_AS(momentsys::parse_moment_quadrature("simpson"), ValidationError);
}

TEST_CASE("synthesis constraint forms") {
  auto xy = density::make_density("xy");
  auto t = density::moment_triangle(xy, 8);
  mollifier::MollifierSpec m(mollifier::Family::bump, Real(1), 10);
  const Real theta = num::pi() / Real(3);

  CHECK(num::abs(momentsys::synthesis_residual(t, m, theta, 0)).to_double() < 1e-70);
  for (int k = 0; k <= 6; ++k) {
    Real r = momentsys::synthesis_residual(t, m, theta, k, momentsys::SynthesisForm::directional);
    CHECK(num::abs(r).to_double() < 1e-60);
  }
  // the literal double sum leaves -c2 gamma00 sin(2 theta) at k = 2
  Real lit = momentsys::synthesis_residual(t, m, theta, 2, momentsys::SynthesisForm::literal);
  Real want = -m.moment(2) * t.at(0, 0) * num::sin(Real(2) * theta);
  CHECK(num::abs(lit - want).to_double() < 1e-60);

  // the directional form holds for any triangle, so a perturbation does not
  // show up in it; the literal form moves with gamma00
  auto bad = t;
  bad.at(0, 0) += Real(1e-3);
  bad.at(1, 1) += Real(1e-3);
  Real pr = momentsys::synthesis_residual(bad, m, theta, 2, momentsys::SynthesisForm::directional);
  CHECK(num::abs(pr).to_double() < 1e-60);
  Real pl = momentsys::synthesis_residual(bad, m, theta, 2, momentsys::SynthesisForm::literal);
  CHECK(num::abs(pl - lit).to_double() > 1e-5);
}

TEST_CASE("homogeneity residual separates consistent and inconsistent data") {
  auto d = density::make_density("poly-demo");
  auto ms = momentsys::continuous_moments(d, radon::default_angles(24), 6, nullptr);
  for (int k = 0; k <= 6; ++k) CHECK(momentsys::homogeneity_residual(ms, k).to_double() < 1e-50);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> v(0.5, 1.5);
  for (auto& x : ms.values[4]) x *= Real(v(rng));
  CHECK(momentsys::homogeneity_residual(ms, 4).to_double() > 1e-3);
}

TEST_CASE("moment sets and triangles round-trip through json files") {
  auto d = density::make_density("x2y");
  mollifier::MollifierSpec m(mollifier::Family::bump, Real(0.05), 6);
  auto hb = momentsys::b_to_hatb(exact_raw(d, radon::default_angles(5), 4), m);
  const auto p = scratch("hb.json");
  momentsys::write_moment_set(hb, p);
  auto back = momentsys::read_moment_set(p);
  CHECK(back.kind == hb.kind);
  CHECK(back.values == hb.values);
  CHECK(back.angles == hb.angles);
  REQUIRE(back.mollifier);
  CHECK(back.mollifier->h == hb.mollifier->h);

  auto t = density::moment_triangle(d, 4);
  const auto tp = scratch("t.json");
  momentsys::write_triangle(t, tp);
  auto tb = momentsys::read_triangle(tp);
  for (int a = 0; a <= 4; ++a) {
    for (int b = 0; a + b <= 4; ++b) CHECK(tb.at(a, b) == t.at(a, b));
  }
}

TEST_CASE("parallel and serial moment paths are bit-identical") {
  auto d = density::make_density("grid-demo");
  auto angles = radon::default_angles(6);
  auto a = momentsys::continuous_moments(d, angles, 5, nullptr, Execution::serial);
  auto b = momentsys::continuous_moments(d, angles, 5, nullptr, Execution::parallel);
  CHECK(a.values == b.values);
  auto ra = momentsys::recover_triangle(a, 5, momentsys::SolveMode::square, Execution::serial);
  auto rb = momentsys::recover_triangle(a, 5, momentsys::SolveMode::square, Execution::parallel);
  for (int x = 0; x <= 5; ++x) {
    for (int y = 0; x + y <= 5; ++y) CHECK(ra.triangle.at(x, y) == rb.triangle.at(x, y));
  }
  auto s = radon::make_sinogram(d, angles, 101, Real(0.2));
  CHECK(momentsys::sinogram_moments(s, 4, Execution::serial).values ==
        momentsys::sinogram_moments(s, 4, Execution::parallel).values);
}
