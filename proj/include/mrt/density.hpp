#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mrt/real.hpp"

namespace mrt::density {

using num::Real;

struct Vertex {
  Real x1;
  Real x2;
};

// Sup norms of the partial derivatives up to second order over [0,1]^2.
// Absent for members that are not C^2.
struct DerivativeNorms {
  double f10 = 0, f01 = 0, f20 = 0, f11 = 0, f02 = 0;
};

// One density kind. Implementations are immutable; `eval` is only called for
// points inside the closed unit square.
class Model {
 public:
  virtual ~Model() = default;
  virtual std::string id() const = 0;
  virtual Real eval(const Real& x1, const Real& x2) const = 0;
  virtual Real moment(int a, int b) const = 0;
  virtual bool closed_form_moments() const = 0;
  virtual std::optional<DerivativeNorms> derivative_norms() const = 0;
  // Degree of the polynomial pieces between kink lines, or -1 when the
  // density is not piecewise polynomial. Along a line each piece is then a
  // polynomial of at most this degree in the chord parameter.
  virtual int polynomial_degree() const = 0;
  // Interior lines x1 = c and x2 = c across which the density has kinks.
  virtual std::vector<Real> kink_lines_x1() const { return {}; }
  virtual std::vector<Real> kink_lines_x2() const { return {}; }
};

// Handle to an immutable density on [0,1]^2 with an optional mass scaling.
class Density {
 public:
  explicit Density(std::shared_ptr<const Model> model, bool normalize = false);

  const std::string& id() const noexcept { return id_; }
  // 0 outside the closed unit square.
  Real eval(const Real& x1, const Real& x2) const;
  // Same but assumes the point lies in the square.
  Real eval_inside(const Real& x1, const Real& x2) const;
  Real true_moment(int a, int b) const;
  Real mass() const { return true_moment(0, 0); }
  bool closed_form_moments() const { return model_->closed_form_moments(); }
  std::optional<DerivativeNorms> derivative_norms() const;
  int polynomial_degree() const { return model_->polynomial_degree(); }
  bool normalized() const noexcept { return normalize_; }

  // Corners of the square plus any grid nodes: the points whose projections
  // break the smoothness of Rf(theta, .).
  std::vector<Vertex> vertices() const;
  const std::vector<Real>& kink_lines_x1() const { return kinks_x1_; }
  const std::vector<Real>& kink_lines_x2() const { return kinks_x2_; }

 private:
  std::shared_ptr<const Model> model_;
  bool normalize_;
  std::string id_;
  Real scale_;
  std::vector<Real> kinks_x1_;
  std::vector<Real> kinks_x2_;
};

// Registry ids: "uniform", "xy", "x", "x2y", "monomial:a,b", "poly-demo",
// "poly:i,j,c;i,j,c;...", "smooth-bump", "grid-demo", "grid:<csv path>".
// A "+normalized" suffix divides by the mass. Unknown ids throw
// ValidationError.
Density make_density(const std::string& id);

// The built-in members, used by property tests.
std::vector<std::string> registry_ids();

// Bilinear grid density from a CSV with header x1,x2,value on a uniform grid.
Density load_grid_csv(const std::filesystem::path& path);

// gamma_{a,b} for all a+b <= K, stored row by row of total order.
class MomentTriangle {
 public:
  MomentTriangle() = default;
  explicit MomentTriangle(int max_order);

  int max_order() const noexcept { return max_order_; }
  bool contains(int a, int b) const noexcept {
    return a >= 0 && b >= 0 && a + b <= max_order_;
  }
  const Real& at(int a, int b) const;
  Real& at(int a, int b);

 private:
  static std::size_t index(int a, int b) {
    const auto k = static_cast<std::size_t>(a + b);
    return k * (k + 1) / 2 + static_cast<std::size_t>(b);
  }
  int max_order_ = -1;
  std::vector<Real> values_;
};

MomentTriangle moment_triangle(const Density& d, int max_order);

}  // namespace mrt::density
