#include "mrt/real.hpp"

#include <atomic>
#include <cmath>
#include <cstring>
#include <ostream>

#include "mrt/errors.hpp"

namespace mrt::num {

namespace {

std::atomic<int> g_precision{256};

constexpr mpfr_rnd_t kRound = MPFR_RNDN;

}  // namespace

int working_precision() noexcept { return g_precision.load(std::memory_order_relaxed); }

void set_working_precision(int bits) {
  if (bits < 32 || bits > (1 << 20)) {
    throw ValidationError("working precision must lie in [32, 2^20] bits, got " +
                          std::to_string(bits));
  }
  g_precision.store(bits, std::memory_order_relaxed);
}

int decimal_digits_for(int bits) noexcept {
  return static_cast<int>(std::ceil(bits * std::log10(2.0))) + 2;
}

PrecisionScope::PrecisionScope(int bits) : previous_(working_precision()) {
  set_working_precision(bits);
}

PrecisionScope::~PrecisionScope() { g_precision.store(previous_, std::memory_order_relaxed); }

Real::Real() {
  mpfr_init2(value_, working_precision());
  mpfr_set_zero(value_, 1);
}

Real::Real(int v) : Real(static_cast<long>(v)) {}

Real::Real(long v) {
  mpfr_init2(value_, working_precision());
  mpfr_set_si(value_, v, kRound);
}

Real::Real(long long v) {
  mpfr_init2(value_, working_precision());
  mpfr_set_si(value_, static_cast<long>(v), kRound);
}

Real::Real(unsigned long v) {
  mpfr_init2(value_, working_precision());
  mpfr_set_ui(value_, v, kRound);
}

Real::Real(double v) {
  mpfr_init2(value_, working_precision());
  mpfr_set_d(value_, v, kRound);
}

Real::Real(const Real& other) {
  mpfr_init2(value_, mpfr_get_prec(other.value_));
  mpfr_set(value_, other.value_, kRound);
}

Real::Real(Real&& other) noexcept {
  std::memcpy(value_, other.value_, sizeof(mpfr_t));
  other.value_->_mpfr_d = nullptr;
}

Real::~Real() {
  if (value_->_mpfr_d != nullptr) mpfr_clear(value_);
}

Real& Real::operator=(const Real& other) {
  if (this == &other) return *this;
  if (value_->_mpfr_d == nullptr) {
    mpfr_init2(value_, mpfr_get_prec(other.value_));
  } else if (mpfr_get_prec(value_) != mpfr_get_prec(other.value_)) {
    mpfr_set_prec(value_, mpfr_get_prec(other.value_));
  }
  mpfr_set(value_, other.value_, kRound);
  return *this;
}

Real& Real::operator=(Real&& other) noexcept {
  if (this != &other) {
    if (value_->_mpfr_d != nullptr) mpfr_clear(value_);
    std::memcpy(value_, other.value_, sizeof(mpfr_t));
    other.value_->_mpfr_d = nullptr;
  }
  return *this;
}

Real Real::from_string(std::string_view decimal) {
  Real r;
  std::string s(decimal);
  if (s.empty() || mpfr_set_str(r.value_, s.c_str(), 10, kRound) != 0) {
    throw ValidationError("not a decimal real: '" + s + "'");
  }
  return r;
}

Real Real::with_precision(int bits) {
  PrecisionScope scope(bits);
  return Real();
}

int Real::precision() const noexcept { return static_cast<int>(mpfr_get_prec(value_)); }

double Real::to_double() const { return mpfr_get_d(value_, kRound); }

long Real::to_long_floor() const { return mpfr_get_si(value_, MPFR_RNDD); }

std::string Real::str(int digits) const {
  if (mpfr_zero_p(value_)) return "0";
  if (!mpfr_number_p(value_)) return mpfr_nan_p(value_) ? "nan" : (sign() > 0 ? "inf" : "-inf");
  if (digits <= 0) digits = decimal_digits_for(precision());
  mpfr_exp_t exponent = 0;
  char* raw_digits = mpfr_get_str(nullptr, &exponent, 10, static_cast<size_t>(digits), value_, kRound);
  std::string mantissa(raw_digits);
  mpfr_free_str(raw_digits);
  std::string out;
  std::size_t pos = 0;
  if (mantissa[0] == '-') {
    out.push_back('-');
    pos = 1;
  }
  out.push_back(mantissa[pos]);
  out.push_back('.');
  out.append(mantissa, pos + 1, std::string::npos);
  out.push_back('e');
  long e10 = static_cast<long>(exponent) - 1;
  out.push_back(e10 < 0 ? '-' : '+');
  std::string e = std::to_string(e10 < 0 ? -e10 : e10);
  if (e.size() < 2) e.insert(0, "0");
  out += e;
  return out;
}

bool Real::is_zero() const noexcept { return mpfr_zero_p(value_) != 0; }
bool Real::is_finite() const noexcept { return mpfr_number_p(value_) != 0; }
int Real::sign() const noexcept { return mpfr_sgn(value_); }

void Real::check_same(const Real& other) const {
  if (mpfr_get_prec(value_) != mpfr_get_prec(other.value_)) {
    throw PrecisionError("mixed-precision operation: " + std::to_string(precision()) + " vs " +
                         std::to_string(other.precision()) + " bits");
  }
}

Real& Real::operator+=(const Real& rhs) {
  check_same(rhs);
  mpfr_add(value_, value_, rhs.value_, kRound);
  return *this;
}

Real& Real::operator-=(const Real& rhs) {
  check_same(rhs);
  mpfr_sub(value_, value_, rhs.value_, kRound);
  return *this;
}

Real& Real::operator*=(const Real& rhs) {
  check_same(rhs);
  mpfr_mul(value_, value_, rhs.value_, kRound);
  return *this;
}

Real& Real::operator/=(const Real& rhs) {
  check_same(rhs);
  mpfr_div(value_, value_, rhs.value_, kRound);
  return *this;
}

Real& Real::operator*=(long rhs) {
  mpfr_mul_si(value_, value_, rhs, kRound);
  return *this;
}

Real& Real::operator/=(long rhs) {
  mpfr_div_si(value_, value_, rhs, kRound);
  return *this;
}

Real& Real::add_product(const Real& a, const Real& b) {
  check_same(a);
  check_same(b);
  mpfr_fma(value_, a.value_, b.value_, value_, kRound);
  return *this;
}

Real& Real::sub_product(const Real& a, const Real& b) {
  check_same(a);
  check_same(b);
  mpfr_fms(value_, a.value_, b.value_, value_, kRound);
  mpfr_neg(value_, value_, kRound);
  return *this;
}

Real Real::operator-() const {
  Real r(*this);
  mpfr_neg(r.value_, r.value_, kRound);
  return r;
}

Real operator+(Real lhs, const Real& rhs) { return lhs += rhs; }
Real operator-(Real lhs, const Real& rhs) { return lhs -= rhs; }
Real operator*(Real lhs, const Real& rhs) { return lhs *= rhs; }
Real operator/(Real lhs, const Real& rhs) { return lhs /= rhs; }

bool operator==(const Real& a, const Real& b) { return mpfr_equal_p(a.raw(), b.raw()) != 0; }

std::partial_ordering operator<=>(const Real& a, const Real& b) {
  if (mpfr_unordered_p(a.raw(), b.raw())) return std::partial_ordering::unordered;
  int c = mpfr_cmp(a.raw(), b.raw());
  if (c < 0) return std::partial_ordering::less;
  if (c > 0) return std::partial_ordering::greater;
  return std::partial_ordering::equivalent;
}

namespace {

template <typename Fn>
Real unary(const Real& x, Fn fn) {
  Real r = Real::with_precision(x.precision());
  fn(r.raw(), x.raw(), kRound);
  return r;
}

}  // namespace

Real abs(const Real& x) { return unary(x, mpfr_abs); }
Real sqrt(const Real& x) { return unary(x, mpfr_sqrt); }
Real exp(const Real& x) { return unary(x, mpfr_exp); }
Real log(const Real& x) { return unary(x, mpfr_log); }
Real sin(const Real& x) { return unary(x, mpfr_sin); }
Real cos(const Real& x) { return unary(x, mpfr_cos); }

Real floor(const Real& x) {
  Real r = Real::with_precision(x.precision());
  mpfr_floor(r.raw(), x.raw());
  return r;
}

Real pow(const Real& x, unsigned long n) {
  Real r = Real::with_precision(x.precision());
  mpfr_pow_ui(r.raw(), x.raw(), n, kRound);
  return r;
}

Real pow(const Real& x, const Real& y) {
  if (x.precision() != y.precision()) throw PrecisionError("mixed-precision pow");
  Real r = Real::with_precision(x.precision());
  mpfr_pow(r.raw(), x.raw(), y.raw(), kRound);
  return r;
}

Real ldexp(const Real& x, long e) {
  Real r(x);
  mpfr_mul_2si(r.raw(), r.raw(), e, kRound);
  return r;
}

Real min(const Real& a, const Real& b) { return b < a ? b : a; }
Real max(const Real& a, const Real& b) { return a < b ? b : a; }

Real pi() {
  Real r;
  mpfr_const_pi(r.raw(), kRound);
  return r;
}

Real epsilon_pow2(int bits) {
  Real r(1);
  mpfr_mul_2si(r.raw(), r.raw(), -bits, kRound);
  return r;
}

std::ostream& operator<<(std::ostream& os, const Real& x) {
  auto p = os.precision();
  return os << x.str(p > 0 ? static_cast<int>(p) : 17);
}

}  // namespace mrt::num
