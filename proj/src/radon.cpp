#include "mrt/radon.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "mrt/errors.hpp"
#include "mrt/quadrature.hpp"

namespace mrt::radon {

namespace {

using num::Real;

bool less(const Real& a, const Real& b) { return a < b; }

constexpr int kSmoothChordOrder = 40;

// Chord parameter range of the line inside [0,1]^2, or nullopt if it misses.
std::optional<std::pair<Real, Real>> clip(const Real& c, const Real& s, const Real& p) {
  // x1(t) = p c - t s, x2(t) = p s + t c
  Real lo, hi;
  bool bounded = false;
  auto narrow = [&](const Real& base, const Real& slope) -> bool {
    // 0 <= base + slope t <= 1
    if (slope.is_zero()) return base.sign() >= 0 && base <= Real(1);
    Real a = (Real(0) - base) / slope;
    Real b = (Real(1) - base) / slope;
    if (b < a) std::swap(a, b);
    if (!bounded) {
      lo = a;
      hi = b;
      bounded = true;
    } else {
      lo = num::max(lo, a);
      hi = num::min(hi, b);
    }
    return true;
  };
  Real pc = p * c;
  Real ps = p * s;
  if (!narrow(pc, -s)) return std::nullopt;
  if (!narrow(ps, c)) return std::nullopt;
  if (!bounded || !(lo < hi)) return std::nullopt;
  return std::make_pair(lo, hi);
}

Real box_muller(std::mt19937_64& rng) {
  // uniform doubles in (0,1) from the top 53 bits
  auto uniform = [&rng]() { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53; };
  double u1 = uniform();
  double u2 = uniform();
  return Real(std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2));
}

const char* kind_name(NoiseSpec::Kind k) {
  switch (k) {
    case NoiseSpec::Kind::none: return "none";
    case NoiseSpec::Kind::gaussian: return "gaussian";
    case NoiseSpec::Kind::uniform: return "uniform";
    case NoiseSpec::Kind::sinusoidal: return "sinusoidal";
  }
  return "none";
}

}  // namespace

Real default_chord_tolerance() { return num::default_tolerance(); }

Real radon_eval(const density::Density& d, const Real& theta, const Real& p) {
  return radon_eval_dir(d, num::cos(theta), num::sin(theta), p, default_chord_tolerance());
}

Real radon_eval_dir(const density::Density& d, const Real& c, const Real& s, const Real& p,
                    const Real& tol) {
  auto range = clip(c, s, p);
  if (!range) return Real(0);
  const Real& t0 = range->first;
  const Real& t1 = range->second;

  std::vector<Real> cuts{t0};
  // crossings with interior kink lines
  Real pc = p * c;
  Real ps = p * s;
  if (!s.is_zero()) {
    for (const auto& g : d.kink_lines_x1()) {
      Real t = (pc - g) / s;
      if (t0 < t && t < t1) cuts.push_back(t);
    }
  }
  if (!c.is_zero()) {
    for (const auto& g : d.kink_lines_x2()) {
      Real t = (g - ps) / c;
      if (t0 < t && t < t1) cuts.push_back(t);
    }
  }
  cuts.push_back(t1);
  std::sort(cuts.begin(), cuts.end(), less);

  auto f = [&](const Real& t) {
    Real x1 = pc;
    x1.sub_product(t, s);
    Real x2 = ps;
    x2.add_product(t, c);
    // clamp roundoff just outside the square
    x1 = num::min(num::max(x1, Real(0)), Real(1));
    x2 = num::min(num::max(x2, Real(0)), Real(1));
    return d.eval_inside(x1, x2);
  };

  const int degree = d.polynomial_degree();
  if (degree >= 0) {
    // Each piece is a polynomial of known degree: one Gauss panel is exact.
    const auto& rule = num::gauss_legendre(degree / 2 + 1);
    Real total(0);
    for (std::size_t k = 1; k < cuts.size(); ++k) {
      Real half = (cuts[k] - cuts[k - 1]) / Real(2);
      if (half.is_zero()) continue;
      Real mid = (cuts[k] + cuts[k - 1]) / Real(2);
      Real piece(0);
      for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
        Real t = mid;
        t.add_product(half, rule.nodes[q]);
        piece.add_product(rule.weights[q], f(t));
      }
      total.add_product(piece, half);
    }
    return total;
  }
  // Smooth pieces: a high-order rule keeps the bisection shallow at tight tolerances.
  num::QuadratureOptions opts;
  opts.order = kSmoothChordOrder;
  return num::integrate_1d(num::ScalarIntegrand(f), std::span<const Real>(cuts), tol, opts);
}

std::vector<Real> profile_breakpoints(const density::Density& d, const Real& c, const Real& s) {
  std::vector<Real> out;
  for (const auto& v : d.vertices()) {
    Real p = v.x1 * c;
    p.add_product(v.x2, s);
    out.push_back(std::move(p));
  }
  std::sort(out.begin(), out.end(), less);
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

io::json NoiseSpec::to_json() const {
  io::json j;
  j["model"] = kind_name(kind);
  if (kind == Kind::gaussian) j["sigma"] = amplitude;
  if (kind == Kind::uniform || kind == Kind::sinusoidal) j["amplitude"] = amplitude;
  if (kind == Kind::sinusoidal) j["frequency"] = frequency;
  if (kind != Kind::none) j["seed"] = seed;
  return j;
}

NoiseSpec NoiseSpec::from_json(const io::json& j) {
  NoiseSpec n;
  if (j.is_null()) return n;
  if (!j.is_object() || !j.contains("model")) throw ValidationError("noise descriptor needs a model");
  const auto model = j["model"].get<std::string>();
  if (model == "none") return n;
  if (model == "gaussian") {
    n.kind = Kind::gaussian;
    n.amplitude = j.value("sigma", 0.0);
  } else if (model == "uniform") {
    n.kind = Kind::uniform;
    n.amplitude = j.value("amplitude", 0.0);
  } else if (model == "sinusoidal") {
    n.kind = Kind::sinusoidal;
    n.amplitude = j.value("amplitude", 0.0);
    n.frequency = j.value("frequency", 0.0);
  } else {
    throw ValidationError("unknown noise model '" + model + "'");
  }
  n.seed = j.value("seed", std::uint64_t{0});
  return n;
}

io::json MollifierDescriptor::to_json() const {
  io::json j;
  j["family"] = family;
  j["h"] = io::to_json(h);
  return j;
}

MollifierDescriptor MollifierDescriptor::from_json(const io::json& j) {
  if (!j.is_object() || !j.contains("family") || !j.contains("h")) {
    throw ValidationError("mollifier descriptor needs family and h");
  }
  return {j["family"].get<std::string>(), io::real_from_json(j["h"], "mollifier h")};
}

std::vector<Real> default_angles(int count) {
  if (count < 1) throw ValidationError("need at least one angle");
  std::vector<Real> out;
  const Real pi = num::pi();
  for (int i = 0; i < count; ++i) out.push_back((Real(i) + Real(0.5)) * pi / Real(count));
  return out;
}

void validate_angles(const std::vector<Real>& angles) {
  if (angles.empty()) throw ValidationError("angle list is empty");
  const Real pi = num::pi();
  for (std::size_t i = 0; i < angles.size(); ++i) {
    if (!(angles[i] > Real(0) && angles[i] < pi)) {
      throw ValidationError("angle " + angles[i].str(17) + " lies outside (0, pi)");
    }
    if (i > 0 && !(angles[i - 1] < angles[i])) {
      throw ValidationError(angles[i] == angles[i - 1]
                                ? "duplicate angle " + angles[i].str(17)
                                : "angles must be strictly increasing");
    }
  }
}

std::vector<Real> offset_grid(int count, const Real& pad) {
  if (count < 2) throw ValidationError("need at least two offsets");
  if (pad.sign() < 0) throw ValidationError("pad must be nonnegative");
  Real half = num::sqrt(Real(2)) + pad;
  std::vector<Real> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int j = 0; j < count; ++j) {
    out.push_back(-half + Real(2) * half * Real(j) / Real(count - 1));
  }
  return out;
}

Sinogram make_sinogram(const density::Density& d, const std::vector<Real>& angles, int offsets,
                       const Real& pad, Execution mode) {
  validate_angles(angles);
  Sinogram s;
  s.angles = angles;
  s.offsets = offset_grid(offsets, pad);
  s.meta.source = d.id();
  s.meta.pad = pad;
  const std::size_t na = angles.size();
  const std::size_t np = s.offsets.size();
  std::vector<Real> cs(na), sn(na);
  for (std::size_t i = 0; i < na; ++i) {
    cs[i] = num::cos(angles[i]);
    sn[i] = num::sin(angles[i]);
  }
  s.values.assign(na, std::vector<Real>(np));
  const Real tol = default_chord_tolerance();
  for_each_index(na * np, mode, [&](std::size_t cell) {
    const std::size_t i = cell / np;
    const std::size_t j = cell % np;
    s.values[i][j] = radon_eval_dir(d, cs[i], sn[i], s.offsets[j], tol);
  });
  return s;
}

Sinogram add_noise(const Sinogram& s, const NoiseSpec& noise) {
  if (noise.amplitude < 0 || !std::isfinite(noise.amplitude)) {
    throw ValidationError("noise amplitude must be finite and nonnegative");
  }
  if (s.meta.noise.kind != NoiseSpec::Kind::none) throw StateError("sinogram already carries noise");
  if (s.meta.mollifier) throw StateError("noise must be added before mollification");
  Sinogram out = s;
  out.meta.noise = noise;
  std::mt19937_64 rng(noise.seed);
  const Real amp(noise.amplitude);
  for (std::size_t i = 0; i < out.angles.size(); ++i) {
    for (std::size_t j = 0; j < out.offsets.size(); ++j) {
      Real& v = out.values[i][j];
      switch (noise.kind) {
        case NoiseSpec::Kind::none:
          break;
        case NoiseSpec::Kind::gaussian:
          v.add_product(amp, box_muller(rng));
          break;
        case NoiseSpec::Kind::uniform: {
          double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
          v.add_product(amp, Real(2.0 * u - 1.0));
          break;
        }
        case NoiseSpec::Kind::sinusoidal:
          v.add_product(amp, num::sin(Real(noise.frequency) * out.offsets[j]));
          break;
      }
    }
  }
  return out;
}

std::vector<Real> trapezoid_weights(std::size_t count, const Real& dp) {
  std::vector<Real> w(count, dp);
  if (count > 0) {
    w.front() = dp / Real(2);
    w.back() = dp / Real(2);
  }
  return w;
}

Real l1_norm(const Sinogram& s) {
  // Each angle owns the arc between the midpoints to its neighbours, with
  // 0 and pi closing the ends.
  const std::size_t na = s.angles.size();
  const Real pi = num::pi();
  auto w = trapezoid_weights(s.offsets.size(), s.spacing());
  Real total(0);
  for (std::size_t i = 0; i < na; ++i) {
    Real left = i == 0 ? Real(0) : (s.angles[i - 1] + s.angles[i]) / Real(2);
    Real right = i + 1 == na ? pi : (s.angles[i] + s.angles[i + 1]) / Real(2);
    Real row(0);
    for (std::size_t j = 0; j < s.offsets.size(); ++j) row.add_product(w[j], num::abs(s.values[i][j]));
    total.add_product(right - left, row);
  }
  return total * Real(2);
}

void write_sinogram(const Sinogram& s, const std::filesystem::path& csv) {
  std::string text = "theta,p,value\n";
  for (std::size_t i = 0; i < s.angles.size(); ++i) {
    const std::string theta = s.angles[i].str();
    for (std::size_t j = 0; j < s.offsets.size(); ++j) {
      text += theta;
      text += ',';
      text += s.offsets[j].str();
      text += ',';
      text += s.values[i][j].str();
      text += '\n';
    }
  }
  io::write_text(csv, text);

  io::json meta;
  meta["schema"] = kSinogramSchema;
  meta["precision_bits"] = num::working_precision();
  meta["source"] = s.meta.source;
  meta["angle_placement"] = s.meta.angle_placement;
  meta["pad"] = io::to_json(s.meta.pad);
  meta["noise"] = s.meta.noise.to_json();
  meta["mollifier"] = s.meta.mollifier ? s.meta.mollifier->to_json() : io::json(nullptr);
  meta["angles"] = io::to_json(s.angles);
  meta["offsets"] = io::to_json(s.offsets);
  io::write_json(io::sidecar_path(csv), meta);
}

Sinogram read_sinogram(const std::filesystem::path& csv) {
  const auto meta = io::read_json(io::sidecar_path(csv));
  if (meta.value("schema", std::string()) != kSinogramSchema) {
    throw ValidationError("sidecar of " + csv.string() + " is not a " + kSinogramSchema + " file");
  }
  io::check_precision(meta, csv);
  Sinogram s;
  s.meta.source = meta.value("source", std::string("external"));
  s.meta.angle_placement = meta.value("angle_placement", std::string("explicit"));
  s.meta.pad = io::real_from_json(meta.at("pad"), "pad");
  s.meta.noise = NoiseSpec::from_json(meta.value("noise", io::json(nullptr)));
  if (meta.contains("mollifier") && !meta["mollifier"].is_null()) {
    s.meta.mollifier = MollifierDescriptor::from_json(meta["mollifier"]);
  }
  s.angles = io::reals_from_json(meta.at("angles"), "angles");
  s.offsets = io::reals_from_json(meta.at("offsets"), "offsets");
  validate_angles(s.angles);
  if (s.offsets.size() < 2) throw ValidationError("sinogram needs at least two offsets");

  std::ifstream in(csv);
  if (!in) throw IoError("cannot open " + csv.string());
  std::string line;
  std::getline(in, line);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "theta,p,value") throw ValidationError(csv.string() + ": header must be theta,p,value");
  const std::size_t na = s.angles.size();
  const std::size_t np = s.offsets.size();
  s.values.assign(na, std::vector<Real>(np));
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (row >= na * np) throw ValidationError(csv.string() + " has more rows than its sidecar grid");
    auto c1 = line.find(',');
    auto c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) {
      throw ValidationError(csv.string() + ": malformed row '" + line + "'");
    }
    const std::size_t i = row / np;
    const std::size_t j = row % np;
    if (!(Real::from_string(line.substr(0, c1)) == s.angles[i]) ||
        !(Real::from_string(line.substr(c1 + 1, c2 - c1 - 1)) == s.offsets[j])) {
      throw ValidationError(csv.string() + ": row " + std::to_string(row + 2) +
                            " does not match the sidecar grid");
    }
    s.values[i][j] = Real::from_string(line.substr(c2 + 1));
    ++row;
  }
  if (row != na * np) throw ValidationError(csv.string() + " is missing rows");
  return s;
}

}  // namespace mrt::radon
