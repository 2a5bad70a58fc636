#pragma once

#include "mrt/real.hpp"

namespace mrt::num {

// Closed interval [lo, hi] with lo <= hi.
class Interval {
 public:
  Interval(Real lo, Real hi);

  const Real& lo() const noexcept { return lo_; }
  const Real& hi() const noexcept { return hi_; }
  Real length() const { return hi_ - lo_; }
  bool contains(const Real& x) const { return lo_ <= x && x <= hi_; }

 private:
  Real lo_;
  Real hi_;
};

// k!/(j!(k-j)!) computed exactly in integers, then rounded once.
Real binomial(int k, int j);
Real factorial(int n);

}  // namespace mrt::num
