#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "mrt/density.hpp"
#include "mrt/errors.hpp"
#include "mrt/quadrature.hpp"

using namespace mrt;
using num::Real;

namespace {

Real frac(long a, long b) { return Real(a) / Real(b); }

// Fixed tensor Gauss grid over the square, straight from eval: does not
// touch the models' own moment code. Panels follow the kink lines, or eighths
// for smooth densities.
struct Tensor {
  std::vector<Real> x, w;
};

Tensor tensor_axis(const density::Density& d) {
  std::vector<Real> cuts{Real(0)};
  if (d.polynomial_degree() >= 0) {
    for (const auto& k : d.kink_lines_x1()) cuts.push_back(k);
  } else {
    for (int i = 1; i < 8; ++i) cuts.push_back(Real(i) / Real(8));
  }
  cuts.emplace_back(1);
  const auto& rule = num::gauss_legendre(48);
  Tensor t;
  for (std::size_t c = 1; c < cuts.size(); ++c) {
    Real half = (cuts[c] - cuts[c - 1]) / Real(2);
    Real mid = (cuts[c] + cuts[c - 1]) / Real(2);
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      t.x.push_back(mid + half * rule.nodes[q]);
      t.w.push_back(half * rule.weights[q]);
    }
  }
  return t;
}

Real brute_moment(const density::Density& d, const Tensor& t, int a, int b) {
  Real total(0);
  for (std::size_t i = 0; i < t.x.size(); ++i) {
    Real inner(0);
    for (std::size_t j = 0; j < t.x.size(); ++j) {
      inner.add_product(t.w[j] * num::pow(t.x[j], static_cast<unsigned long>(b)), d.eval(t.x[i], t.x[j]));
    }
    total.add_product(t.w[i] * num::pow(t.x[i], static_cast<unsigned long>(a)), inner);
  }
  return total;
}

}  // namespace

TEST_CASE("eval on the documented points") {
  auto u = density::make_density("uniform");
  auto xy = density::make_density("xy");
  CHECK(u.eval(Real(0.3), Real(0.7)) == Real(1));
  CHECK(xy.eval(Real(0.5), Real(0.5)) == frac(1, 4));
  CHECK(xy.eval(Real(1.5), Real(0.5)).is_zero());
  CHECK(xy.eval(Real(-0.01), Real(0.5)).is_zero());
}

TEST_CASE("closed-form moments of uniform and xy") {
  auto u = density::make_density("uniform");
  auto xy = density::make_density("xy");
  for (int a = 0; a <= 6; ++a) {
    for (int b = 0; b <= 6; ++b) {
      CHECK(u.true_moment(a, b) == frac(1, (a + 1) * (b + 1)));
      CHECK(xy.true_moment(a, b) == frac(1, (a + 2) * (b + 2)));
    }
  }
  CHECK(xy.mass() == frac(1, 4));
}

TEST_CASE("moment triangles") {
  auto t = density::moment_triangle(density::make_density("uniform"), 1);
  CHECK(t.at(0, 0) == Real(1));
  CHECK(t.at(1, 0) == frac(1, 2));
  CHECK(t.at(0, 1) == frac(1, 2));

  auto x = density::moment_triangle(density::make_density("xy"), 2);
  CHECK(x.at(0, 0) == frac(1, 4));
  CHECK(x.at(1, 0) == frac(1, 6));
  CHECK(x.at(0, 1) == frac(1, 6));
  CHECK(x.at(2, 0) == frac(1, 8));
  CHECK(x.at(0, 2) == frac(1, 8));
  CHECK(x.at(1, 1) == frac(1, 9));
  CHECK_THROWS_AS((void)x.at(2, 1), IncompletenessError);

  for (const auto& id : density::registry_ids()) {
    auto d = density::make_density(id);
    auto t0 = density::moment_triangle(d, 0);
    CHECK(t0.max_order() == 0);
    CHECK(t0.at(0, 0) == d.mass());
  }
}

TEST_CASE("registry moments agree with brute-force quadrature of eval") {
  for (const auto& id : {"poly-demo", "x2y", "smooth-bump", "grid-demo"}) {
    CAPTURE(id);
    auto d = density::make_density(id);
    const auto t = tensor_axis(d);
    for (auto [a, b] : {std::pair{0, 0}, std::pair{1, 2}, std::pair{3, 0}}) {
      Real want = brute_moment(d, t, a, b);
      CHECK(num::abs(d.true_moment(a, b) - want).to_double() < 1e-50);
    }
  }
}

TEST_CASE("normalized densities have unit mass") {
  auto d = density::make_density("poly-demo+normalized");
  CHECK(d.normalized());
  CHECK(num::abs(d.mass() - Real(1)).to_double() < 1e-70);
  CHECK(d.id() == "poly-demo+normalized");
}

TEST_CASE("invalid density ids and negative polynomials are rejected") {
  CHECK_THROWS_AS(density::make_density("nope"), ValidationError);
  CHECK_THROWS_AS(density::make_density("poly:0,0,-1"), ValidationError);
  CHECK_THROWS_AS(density::make_density("monomial:-1,2"), ValidationError);
}

TEST_CASE("derivative norms of xy are the closed forms") {
  auto n = density::make_density("xy").derivative_norms();
  REQUIRE(n);
  CHECK(n->f10 == doctest::Approx(1.0));
  CHECK(n->f01 == doctest::Approx(1.0));
  CHECK(n->f20 == doctest::Approx(0.0));
  CHECK(n->f11 == doctest::Approx(1.0));
  CHECK(n->f02 == doctest::Approx(0.0));
}

TEST_CASE("grid csv loader reproduces bilinear values") {
  const auto dir = std::filesystem::temp_directory_path() / "mrt_density_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "g.csv";
  {
    std::ofstream out(path);
    out << "x1,x2,value\n";
    for (int i = 0; i <= 2; ++i) {
      for (int j = 0; j <= 2; ++j) out << i * 0.5 << "," << j * 0.5 << "," << (1 + i + 2 * j) << "\n";
    }
  }
  auto d = density::make_density("grid:" + path.string());
  // the nodal values are an affine function, so bilinear interpolation is exact
  CHECK(num::abs(d.eval(Real(0.25), Real(0.75)) - Real(1 + 0.5 + 2 * 1.5)).to_double() < 1e-70);
  CHECK(num::abs(d.mass() - Real(1 + 1 + 2)).to_double() < 1e-70);
}
