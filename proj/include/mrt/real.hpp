#pragma once

#include <mpfr.h>

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

namespace mrt::num {

// Working precision in bits. It is process-wide (not thread-local) so that
// values created inside OpenMP workers match the ones created by the caller.
int working_precision() noexcept;
void set_working_precision(int bits);

// Decimal digits that make a decimal round trip exact at `bits`.
int decimal_digits_for(int bits) noexcept;

// Sets the working precision for the lifetime of the scope.
class PrecisionScope {
 public:
  explicit PrecisionScope(int bits);
  ~PrecisionScope();
  PrecisionScope(const PrecisionScope&) = delete;
  PrecisionScope& operator=(const PrecisionScope&) = delete;

 private:
  int previous_;
};

// Arbitrary-precision real backed by MPFR, rounding to nearest.
//
// A value keeps the precision it was created with. Binary operations between
// values of different precision throw PrecisionError.
class Real {
 public:
  Real();
  Real(int v);
  Real(long v);
  Real(long long v);
  Real(unsigned long v);
  Real(double v);
  Real(const Real& other);
  Real(Real&& other) noexcept;
  ~Real();

  Real& operator=(const Real& other);
  Real& operator=(Real&& other) noexcept;

  static Real from_string(std::string_view decimal);
  static Real with_precision(int bits);

  int precision() const noexcept;
  mpfr_ptr raw() noexcept { return value_; }
  mpfr_srcptr raw() const noexcept { return value_; }

  double to_double() const;
  long to_long_floor() const;
  // Scientific notation with `digits` significant digits; 0 selects the
  // round-trip digit count for this value's precision.
  std::string str(int digits = 0) const;

  bool is_zero() const noexcept;
  bool is_finite() const noexcept;
  int sign() const noexcept;

  Real& operator+=(const Real& rhs);
  Real& operator-=(const Real& rhs);
  Real& operator*=(const Real& rhs);
  Real& operator/=(const Real& rhs);
  Real& operator*=(long rhs);
  Real& operator/=(long rhs);

  // this += a * b with a single rounding.
  Real& add_product(const Real& a, const Real& b);
  // this -= a * b with a single rounding.
  Real& sub_product(const Real& a, const Real& b);

  Real operator-() const;

 private:
  void check_same(const Real& other) const;

  mpfr_t value_;
};

Real operator+(Real lhs, const Real& rhs);
Real operator-(Real lhs, const Real& rhs);
Real operator*(Real lhs, const Real& rhs);
Real operator/(Real lhs, const Real& rhs);

bool operator==(const Real& a, const Real& b);
std::partial_ordering operator<=>(const Real& a, const Real& b);

Real abs(const Real& x);
Real sqrt(const Real& x);
Real exp(const Real& x);
Real log(const Real& x);
Real sin(const Real& x);
Real cos(const Real& x);
Real floor(const Real& x);
Real pow(const Real& x, unsigned long n);
Real pow(const Real& x, const Real& y);
Real ldexp(const Real& x, long e);
Real min(const Real& a, const Real& b);
Real max(const Real& a, const Real& b);
Real pi();

// 2^-bits at working precision; the "eps" used for tolerance floors.
Real epsilon_pow2(int bits);

std::ostream& operator<<(std::ostream& os, const Real& x);

}  // namespace mrt::num
