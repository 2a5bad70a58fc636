#include "mrt/numerics.hpp"

#include <gmp.h>

#include <string>

#include "mrt/errors.hpp"

namespace mrt::num {

Interval::Interval(Real lo, Real hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
  if (!(lo_ <= hi_)) {
    throw DomainError("interval requires lo <= hi, got [" + lo_.str(17) + ", " + hi_.str(17) + "]");
  }
}

Real binomial(int k, int j) {
  if (k < 0 || j < 0 || j > k) {
    throw DomainError("binomial(" + std::to_string(k) + ", " + std::to_string(j) +
                      ") requires 0 <= j <= k");
  }
  mpz_t z;
  mpz_init(z);
  mpz_bin_uiui(z, static_cast<unsigned long>(k), static_cast<unsigned long>(j));
  Real r;
  mpfr_set_z(r.raw(), z, MPFR_RNDN);
  mpz_clear(z);
  return r;
}

Real factorial(int n) {
  if (n < 0) throw DomainError("factorial of a negative integer");
  Real r;
  mpfr_fac_ui(r.raw(), static_cast<unsigned long>(n), MPFR_RNDN);
  return r;
}

}  // namespace mrt::num
