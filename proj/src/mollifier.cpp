#include "mrt/mollifier.hpp"

#include <map>
#include <mutex>

#include "mrt/errors.hpp"
#include "mrt/quadrature.hpp"

namespace mrt::mollifier {

namespace {

using num::Real;

// Unnormalized base profile on |x| < 1.
Real profile(Family f, const Real& x) {
  Real q = Real(1) - x * x;
  if (q.sign() <= 0) return Real(0);
  if (f == Family::bump) return num::exp(-(Real(1) / q));
  // s = 1/3: x^2 / (2 s^2) = 4.5 x^2
  return num::exp(-(x * x * Real(4.5)));
}

Real base_tolerance() { return num::epsilon_pow2(num::working_precision() - 32); }

// Integral of the unnormalized profile over [-1, 1], shared per family and
// precision.
Real profile_mass(Family f) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, Real> cache;
  const auto key = std::make_pair(static_cast<int>(f), num::working_precision());
  {
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  // tanh-sinh suits the flat ends of the profile
  Real mass = num::integrate_tanh_sinh([f](const Real& x) { return profile(f, x); },
                                       num::Interval(Real(-1), Real(1)), base_tolerance());
  std::lock_guard<std::mutex> lock(mutex);
  cache.emplace(key, mass);
  return mass;
}

}  // namespace

std::string family_name(Family f) { return f == Family::bump ? "bump" : "truncated-gaussian"; }

Family parse_family(const std::string& name) {
  if (name == "bump") return Family::bump;
  if (name == "truncated-gaussian") return Family::truncated_gaussian;
  throw ValidationError("unknown mollifier family '" + name + "'");
}

MollifierSpec::MollifierSpec(Family family, const Real& h, int cached_order)
    : family_(family), h_(h) {
  if (!(h_ > Real(0)) || !h_.is_finite()) throw ValidationError("mollifier bandwidth h must be positive");
  a_ = Real(1) / profile_mass(family_);
  peak_ = profile(family_, Real(0));
  for (int j = 0; j <= cached_order; ++j) moments_.push_back(compute_moment(j));
}

MollifierSpec MollifierSpec::from_descriptor(const radon::MollifierDescriptor& d, int cached_order) {
  return MollifierSpec(parse_family(d.family), d.h, cached_order);
}

radon::MollifierDescriptor MollifierSpec::descriptor() const { return {family_name(family_), h_}; }

Real MollifierSpec::base_eval(const Real& x) const {
  Real v = profile(family_, x);
  // values below 2^-P of the peak are flushed so the tails are exactly zero
  if (v < peak_ * num::epsilon_pow2(num::working_precision())) return Real(0);
  return v * a_;
}

Real MollifierSpec::eval(const Real& t) const {
  if (!(num::abs(t) < h_)) return Real(0);
  return base_eval(t / h_) / h_;
}

Real MollifierSpec::compute_moment(int j) const {
  if (j % 2 == 1) return Real(0);
  if (j == 0) return Real(1);
  // Direct integral over [-h, h]; the tolerance follows the h^j size of the
  // result so small bandwidths keep full relative accuracy.
  const auto e = static_cast<unsigned long>(j);
  Real tol = base_tolerance() * num::pow(h_, e);
  return num::integrate_tanh_sinh([this, e](const Real& t) { return num::pow(t, e) * eval(t); },
                                  num::Interval(-h_, h_), tol);
}

Real MollifierSpec::moment(int j) const {
  if (j < 0) throw DomainError("mollifier moment order must be nonnegative");
  if (static_cast<std::size_t>(j) < moments_.size()) return moments_[static_cast<std::size_t>(j)];
  return compute_moment(j);
}

Real MollifierSpec::raw_moment(int j) const {
  // odd moments vanish, so the sign flip never matters
  return moment(j);
}

Real MollifierSpec::base_variance() const { return moment(2) / (h_ * h_); }

Real mollifier_eval(const MollifierSpec& m, const Real& t) { return m.eval(t); }
Real mollifier_moment(const MollifierSpec& m, int j) { return m.moment(j); }

Real modified_radon_eval(const density::Density& d, const MollifierSpec& m, const Real& theta,
                         const Real& p) {
  const Real c = num::cos(theta);
  const Real s = num::sin(theta);
  const Real& h = m.h();
  // Rf(theta, p - tau) has kinks where p - tau hits a vertex projection.
  std::vector<Real> cuts{-h};
  auto verts = radon::profile_breakpoints(d, c, s);
  for (auto it = verts.rbegin(); it != verts.rend(); ++it) {
    Real tau = p - *it;
    if (-h < tau && tau < h) cuts.push_back(tau);
  }
  cuts.push_back(h);
  const Real tol = radon::default_chord_tolerance();
  auto f = [&](const Real& tau) {
    Real w = m.eval(tau);
    if (w.is_zero()) return w;
    return w * radon::radon_eval_dir(d, c, s, p - tau, tol);
  };
  return num::integrate_1d(num::ScalarIntegrand(f), std::span<const Real>(cuts), tol);
}

radon::Sinogram mollify_sinogram(const radon::Sinogram& s, const MollifierSpec& m, Execution mode) {
  if (s.meta.mollifier) throw StateError("sinogram is already mollified");
  if (m.h() > s.meta.pad) {
    throw SupportOverflowError("mollifier bandwidth h = " + m.h().str(17) + " exceeds pad " +
                               s.meta.pad.str(17));
  }
  const Real dp = s.spacing();
  const long half = (m.h() / dp).to_long_floor();
  std::vector<Real> kernel(static_cast<std::size_t>(2 * half + 1));
  Real sum(0);
  for (long l = -half; l <= half; ++l) {
    Real v = m.eval(dp * Real(l)) * dp;
    sum += v;
    kernel[static_cast<std::size_t>(l + half)] = std::move(v);
  }
  if (sum.is_zero()) {
    kernel.assign(1, Real(1));
  } else {
    for (auto& k : kernel) k /= sum;
  }
  const long centre = static_cast<long>(kernel.size() / 2);

  radon::Sinogram out = s;
  out.meta.mollifier = m.descriptor();
  const std::size_t na = s.angles.size();
  const auto np = static_cast<long>(s.offsets.size());
  for_each_index(na * static_cast<std::size_t>(np), mode, [&](std::size_t cell) {
    const std::size_t i = cell / static_cast<std::size_t>(np);
    const long j = static_cast<long>(cell % static_cast<std::size_t>(np));
    Real acc(0);
    for (long l = -centre; l <= centre; ++l) {
      const long k = j - l;
      if (k < 0 || k >= np) continue;
      acc.add_product(kernel[static_cast<std::size_t>(l + centre)], s.values[i][static_cast<std::size_t>(k)]);
    }
    out.values[i][static_cast<std::size_t>(j)] = std::move(acc);
  });
  return out;
}

}  // namespace mrt::mollifier
