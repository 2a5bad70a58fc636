#include <filesystem>
#include <random>

#include "doctest.h"
#include "mrt/density.hpp"
#include "mrt/errors.hpp"
#include "mrt/io.hpp"
#include "mrt/quadrature.hpp"
#include "mrt/radon.hpp"

using namespace mrt;
using num::Real;

namespace {

Real tiny() { return Real::from_string("1e-9"); }

// Line integral parametrized by x1 instead of arc length:
// x2 = (p - x1 c)/s, ds = dx1/|s|. Needs c != 0 and s != 0.
Real chord_by_x1(const density::Density& d, const Real& theta, const Real& p) {
  const Real c = num::cos(theta);
  const Real s = num::sin(theta);
  Real a = p / c;
  Real b = (p - s) / c;
  if (b < a) std::swap(a, b);
  Real lo = num::max(Real(0), a);
  Real hi = num::min(Real(1), b);
  if (!(lo < hi)) return Real(0);
  std::vector<Real> cuts{lo};
  for (const auto& k : d.kink_lines_x1()) {
    if (lo < k && k < hi) cuts.push_back(k);
  }
  // crossings of horizontal kink lines, in x1
  for (const auto& k : d.kink_lines_x2()) {
    Real x1 = (p - k * s) / c;
    if (lo < x1 && x1 < hi) cuts.push_back(x1);
  }
  cuts.push_back(hi);
  std::sort(cuts.begin(), cuts.end(), [](const Real& u, const Real& v) { return u < v; });
  auto f = [&](const Real& x1) {
    Real x2 = (p - x1 * c) / s;
    x2 = num::min(num::max(x2, Real(0)), Real(1));
    return d.eval_inside(x1, x2);
  };
  return num::integrate_1d(num::ScalarIntegrand(f), std::span<const Real>(cuts),
                           num::epsilon_pow2(num::working_precision() - 40)) /
         num::abs(s);
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "mrt_radon_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("radon_eval on the documented lines") {
  auto u = density::make_density("uniform");
  auto xy = density::make_density("xy");
  CHECK(num::abs(radon::radon_eval(u, tiny(), Real(0.5)) - Real(1)).to_double() < 1e-15);
  CHECK(num::abs(radon::radon_eval(xy, tiny(), Real(0.5)) - Real(0.25)).to_double() < 1e-9);
  CHECK(radon::radon_eval(xy, num::pi() / Real(2), Real(3)).is_zero());
  CHECK(radon::radon_eval(u, num::pi() / Real(3), Real(-2)).is_zero());
}

TEST_CASE("uniform chord lengths at 45 degrees") {
  auto u = density::make_density("uniform");
  const Real theta = num::pi() / Real(4);
  const Real r2 = num::sqrt(Real(2));
  for (double pd : {0.1, 0.3, 0.7, 1.0, 1.3}) {
    Real p(pd);
    Real s = r2 * p;  // x1 + x2 = s
    Real want = r2 * num::min(s, Real(2) - s);
    if (want.sign() < 0) want = Real(0);
    CHECK(num::abs(radon::radon_eval(u, theta, p) - want).to_double() < 1e-70);
  }
}

TEST_CASE("radon_eval agrees with an x1-parametrized line integral") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> th(0.1, 3.0), pp(-1.5, 1.5);
  for (const auto& id : {"xy", "poly-demo", "smooth-bump", "grid-demo"}) {
    CAPTURE(id);
    auto d = density::make_density(id);
    for (int trial = 0; trial < 6; ++trial) {
      Real theta(th(rng));
      if (num::abs(num::cos(theta)).to_double() < 0.05) continue;
      Real p(pp(rng));
      Real got = radon::radon_eval(d, theta, p);
      Real want = chord_by_x1(d, theta, p);
      CHECK(num::abs(got - want).to_double() < 1e-60);
    }
  }
}

TEST_CASE("evenness Rf(theta, p) = Rf(theta + pi, -p)") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> th(0.01, 3.1), pp(-1.4, 1.4);
  for (const auto& id : density::registry_ids()) {
    auto d = density::make_density(id);
    for (int trial = 0; trial < 4; ++trial) {
      Real theta(th(rng));
      Real p(pp(rng));
      Real a = radon::radon_eval(d, theta, p);
      Real b = radon::radon_eval(d, theta + num::pi(), -p);
      CHECK(num::abs(a - b).to_double() < 1e-60);
    }
  }
}

TEST_CASE("mass is preserved along every direction and Rf is nonnegative") {
  for (const auto& id : density::registry_ids()) {
    CAPTURE(id);
    auto d = density::make_density(id);
    for (double th : {0.2, 2.5}) {
      Real theta(th);
      const Real c = num::cos(theta);
      const Real s = num::sin(theta);
      auto cuts = radon::profile_breakpoints(d, c, s);
      auto rf = [&](const Real& p) { return radon::radon_eval_dir(d, c, s, p, radon::default_chord_tolerance()); };
      const Real tol = num::epsilon_pow2(num::working_precision() - 40);
      num::QuadratureOptions opts;
      opts.order = 40;
      Real mass = num::integrate_1d(num::ScalarIntegrand(rf), std::span<const Real>(cuts), tol, opts);
      CHECK(num::abs(mass - d.mass()).to_double() < 1e-60);
      for (double pd : {-0.3, 0.2, 0.9, 1.3}) CHECK(radon::radon_eval(d, theta, Real(pd)).sign() >= 0);
    }
  }
}

TEST_CASE("rows at pi/4: support, closed form for xy, mirror symmetry for centrosymmetric f") {
  std::vector<Real> angles{num::pi() / Real(4)};
  const Real r2 = num::sqrt(Real(2));

  auto xy = density::make_density("xy");
  auto s = radon::make_sinogram(xy, angles, 201, Real(0.2));
  for (std::size_t j = 0; j < s.offsets.size(); ++j) {
    const Real& p = s.offsets[j];
    if (num::abs(p) > r2) CHECK(s.values[0][j].is_zero());
    // line x1 + x2 = t with t = sqrt(2) p and arc length sqrt(2) dx1:
    // sqrt(2) * [t x^2/2 - x^3/3] over x in [max(0, t-1), min(1, t)]
    Real t = r2 * p;
    Real lo = num::max(Real(0), t - Real(1));
    Real hi = num::min(Real(1), t);
    Real want(0);
    if (lo < hi) {
      auto prim = [&](const Real& x) { return t * x * x / Real(2) - x * x * x / Real(3); };
      want = r2 * (prim(hi) - prim(lo));
    }
    CHECK(num::abs(s.values[0][j] - want).to_double() < 1e-70);
  }

  // f(x) = f(1 - x) makes every row symmetric about the centre's projection
  for (const auto& id : {"uniform", "smooth-bump"}) {
    auto d = density::make_density(id);
    for (double pd : {0.05, 0.3, 0.6}) {
      Real p(pd);
      Real a = radon::radon_eval(d, angles[0], p);
      Real b = radon::radon_eval(d, angles[0], r2 - p);
      CHECK(num::abs(a - b).to_double() < 1e-60);
    }
  }
}

TEST_CASE("uniform sinogram rows integrate to one") {
  auto u = density::make_density("uniform");
  auto s = radon::make_sinogram(u, radon::default_angles(8), 401, Real(0.2));
  const auto w = radon::trapezoid_weights(s.offset_count(), s.spacing());
  for (std::size_t i = 0; i < s.angle_count(); ++i) {
    Real sum(0);
    for (std::size_t j = 0; j < s.offset_count(); ++j) sum.add_product(w[j], s.values[i][j]);
    // piecewise-linear profile: trapezoid error O(dp^2)
    CHECK(num::abs(sum - Real(1)).to_double() < 1e-4);
  }
}

TEST_CASE("angle validation") {
  auto u = density::make_density("uniform");
  CHECK_THROWS_AS(radon::make_sinogram(u, {Real(0.5), Real(0.5)}, 11, Real(0.2)), ValidationError);
  CHECK_THROWS_AS(radon::make_sinogram(u, {Real(0)}, 11, Real(0.2)), ValidationError);
  CHECK_THROWS_AS(radon::make_sinogram(u, {num::pi()}, 11, Real(0.2)), ValidationError);
  CHECK_THROWS_AS(radon::make_sinogram(u, {Real(1), Real(0.5)}, 11, Real(0.2)), ValidationError);
  auto a = radon::default_angles(164);
  CHECK(a.size() == 164);
  CHECK(num::abs(a[0] - num::pi() / Real(328)).to_double() < 1e-70);
}

TEST_CASE("noise models") {
  auto xy = density::make_density("xy");
  auto s = radon::make_sinogram(xy, radon::default_angles(4), 41, Real(0.2));

  radon::NoiseSpec zero{radon::NoiseSpec::Kind::gaussian, 0.0, 0.0, 5};
  auto z = radon::add_noise(s, zero);
  CHECK(z.values == s.values);

  radon::NoiseSpec sine{radon::NoiseSpec::Kind::sinusoidal, 1e-3, 7.0, 0};
  auto w = radon::add_noise(s, sine);
  for (std::size_t i = 0; i < s.angle_count(); ++i) {
    for (std::size_t j = 0; j < s.offset_count(); ++j) {
      Real want = s.values[i][j] + Real(1e-3) * num::sin(Real(7.0) * s.offsets[j]);
      CHECK(num::abs(w.values[i][j] - want).to_double() < 1e-70);
    }
  }

  radon::NoiseSpec g{radon::NoiseSpec::Kind::gaussian, 1e-3, 0.0, 7};
  auto g1 = radon::add_noise(s, g);
  auto g2 = radon::add_noise(s, g);
  CHECK(g1.values == g2.values);
  CHECK(g1.values != s.values);

  CHECK_THROWS_AS(radon::add_noise(g1, g), StateError);
  radon::NoiseSpec neg{radon::NoiseSpec::Kind::uniform, -1.0, 0.0, 1};
  CHECK_THROWS_AS(radon::add_noise(s, neg), ValidationError);
}

TEST_CASE("L1 norm stays under 2 pi times the density's L1 norm") {
  for (const auto& id : density::registry_ids()) {
    CAPTURE(id);
    auto d = density::make_density(id);
    auto s = radon::make_sinogram(d, radon::default_angles(16), 201, Real(0.2));
    const double bound = 2 * M_PI * d.mass().to_double();
    const double l1 = radon::l1_norm(s).to_double();
    CHECK(l1 <= bound * 1.05);
    CHECK(l1 >= bound * 0.95);
  }
}

TEST_CASE("sinogram files round-trip and check precision") {
  auto xy = density::make_density("xy");
  auto s = radon::make_sinogram(xy, radon::default_angles(3), 21, Real(0.2));
  s.meta.angle_placement = "midpoint";
  const auto path = scratch("s.csv");
  radon::write_sinogram(s, path);
  auto back = radon::read_sinogram(path);
  CHECK(back.values == s.values);
  CHECK(back.angles == s.angles);
  CHECK(back.offsets == s.offsets);
  CHECK(back.meta.source == "xy");
  CHECK(back.meta.angle_placement == "midpoint");

  num::PrecisionScope other(128);
  CHECK_THROWS_AS(radon::read_sinogram(path), PrecisionError);
}

TEST_CASE("parallel and serial sinograms are bit-identical") {
  auto d = density::make_density("smooth-bump");
  auto angles = radon::default_angles(6);
  auto a = radon::make_sinogram(d, angles, 61, Real(0.2), Execution::serial);
  auto b = radon::make_sinogram(d, angles, 61, Real(0.2), Execution::parallel);
  CHECK(a.values == b.values);
}
