#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "mrt/numerics.hpp"

namespace mrt::num {

using ScalarIntegrand = std::function<Real(const Real&)>;
// Writes dim values for abscissa x into out (already sized).
using VectorIntegrand = std::function<void(const Real& x, std::vector<Real>& out)>;

// n-point Gauss-Legendre rule on [-1, 1], nodes ascending.
struct GaussRule {
  std::vector<Real> nodes;
  std::vector<Real> weights;
};

// Cached per (n, working precision); thread-safe.
const GaussRule& gauss_legendre(int n);

struct QuadratureOptions {
  int order = 15;       // Gauss points per panel
  int max_depth = 48;   // bisection levels before giving up
};

// A frozen set of nodes and weights. The adaptive integrators can export the
// accepted panels so other integrands can reuse the same partition.
struct QuadratureRule {
  std::vector<Real> nodes;
  std::vector<Real> weights;
};

// Adaptive Gauss-Legendre with bisection. A panel is accepted when the one-panel
// estimate and the two-half estimate agree to the panel's share of `tol`
// (absolute), floored at working precision. Panels are visited depth-first,
// left to right, so the summation order is fixed.
Real integrate_1d(const ScalarIntegrand& f, const Interval& iv, const Real& tol,
                  const QuadratureOptions& opts = {});

// As above over consecutive pieces [b0,b1], [b1,b2], ...; breakpoints ascending.
Real integrate_1d(const ScalarIntegrand& f, std::span<const Real> breakpoints, const Real& tol,
                  const QuadratureOptions& opts = {});

std::vector<Real> integrate_1d(const VectorIntegrand& f, std::size_t dim,
                               std::span<const Real> breakpoints, const Real& tol,
                               const QuadratureOptions& opts = {},
                               QuadratureRule* accepted_rule = nullptr);

// Tanh-sinh (double exponential) rule with level doubling. Suited to
// integrands that are analytic inside the interval but flat or singular at the
// ends, such as mollifier kernels.
Real integrate_tanh_sinh(const ScalarIntegrand& f, const Interval& iv, const Real& tol,
                         int max_level = 12);

std::vector<Real> integrate_tanh_sinh(const VectorIntegrand& f, std::size_t dim,
                                      const Interval& iv, const Real& tol, int max_level = 12);

// Relative floor on every accepted panel: 2^(-P+16) times sum |w f|.
Real tolerance_floor();

// Absolute tolerance used by the simulation and moment integrals:
// 2^-(P-32) unless a process-wide override is set (pipeline configs may
// set one). Passing nullopt clears the override.
Real default_tolerance();
void set_default_tolerance(const std::optional<Real>& tol);

}  // namespace mrt::num
