#pragma once

#include <memory>
#include <string>
#include <vector>

#include "mrt/density.hpp"
#include "mrt/parallel.hpp"
#include "mrt/radon.hpp"

namespace mrt::mollifier {

using num::Real;

enum class Family { bump, truncated_gaussian };

std::string family_name(Family f);
Family parse_family(const std::string& name);

// phi_h(t) = phi(t/h)/h for a symmetric base phi supported on [-1, 1]:
//   bump:               A exp(-1/(1-x^2))
//   truncated-gaussian: A exp(-x^2/(2 s^2)), s = 1/3, cut at |x| = 1
// A makes the base integrate to one. The moments c_j = (-1)^j gamma_j(phi_h)
// are computed eagerly up to `cached_order` at construction.
class MollifierSpec {
 public:
  MollifierSpec(Family family, const Real& h, int cached_order = 64);
  static MollifierSpec from_descriptor(const radon::MollifierDescriptor& d, int cached_order = 64);

  Family family() const noexcept { return family_; }
  const Real& h() const noexcept { return h_; }
  const Real& normalization() const noexcept { return a_; }
  radon::MollifierDescriptor descriptor() const;

  Real base_eval(const Real& x) const;
  Real eval(const Real& t) const;
  Real moment(int j) const;
  // gamma_j(phi_h) = (-1)^j c_j
  Real raw_moment(int j) const;
  // sigma^2 = int t^2 phi(t) dt of the base (h = 1)
  Real base_variance() const;

 private:
  Real compute_moment(int j) const;

  Family family_;
  Real h_;
  Real a_;
  Real peak_;  // phi(0) before normalization, for the flush threshold
  std::vector<Real> moments_;
};

Real mollifier_eval(const MollifierSpec& m, const Real& t);
Real mollifier_moment(const MollifierSpec& m, int j);

// (Rf(theta, .) * phi_h)(p) by quadrature over tau in [-h, h].
Real modified_radon_eval(const density::Density& d, const MollifierSpec& m, const Real& theta,
                         const Real& p);

// Per-angle discrete convolution in p on the stored grid. The sampled kernel
// is scaled to unit sum so the zeroth moment is preserved exactly and h below
// the grid spacing gives the identity.
radon::Sinogram mollify_sinogram(const radon::Sinogram& s, const MollifierSpec& m,
                                 Execution mode = Execution::parallel);

}  // namespace mrt::mollifier
