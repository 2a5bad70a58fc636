#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mrt/density.hpp"
#include "mrt/io.hpp"
#include "mrt/parallel.hpp"

namespace mrt::radon {

using num::Real;

// Absolute tolerance for chord integrals of non-polynomial densities
// (num::default_tolerance()).
Real default_chord_tolerance();

// Rf(theta, p): integral of d along x(t) = p w + t w_perp with
// w = (cos theta, sin theta), w_perp = (-sin theta, cos theta). Any theta is
// accepted. Lines that miss the square or only touch a corner give 0.
Real radon_eval(const density::Density& d, const Real& theta, const Real& p);

// Same for a precomputed direction (c, s) = (cos theta, sin theta).
Real radon_eval_dir(const density::Density& d, const Real& c, const Real& s, const Real& p,
                    const Real& tol);

// Sorted distinct projections of the density's vertices onto w. Rf(theta, .)
// is smooth between consecutive entries and vanishes outside the first/last.
std::vector<Real> profile_breakpoints(const density::Density& d, const Real& c, const Real& s);

struct NoiseSpec {
  enum class Kind { none, gaussian, uniform, sinusoidal };
  Kind kind = Kind::none;
  double amplitude = 0;   // sigma for gaussian, epsilon otherwise
  double frequency = 0;   // sinusoidal only
  std::uint64_t seed = 0;

  io::json to_json() const;
  static NoiseSpec from_json(const io::json& j);
};

struct MollifierDescriptor {
  std::string family;
  Real h;

  io::json to_json() const;
  static MollifierDescriptor from_json(const io::json& j);
};

struct SinogramMeta {
  std::string source = "external";     // density id, or "external"
  std::string angle_placement = "explicit";
  NoiseSpec noise;
  std::optional<MollifierDescriptor> mollifier;
  Real pad;
};

struct Sinogram {
  std::vector<Real> angles;
  std::vector<Real> offsets;
  std::vector<std::vector<Real>> values;  // [angle][offset]
  SinogramMeta meta;

  Real spacing() const { return offsets[1] - offsets[0]; }
  std::size_t angle_count() const { return angles.size(); }
  std::size_t offset_count() const { return offsets.size(); }
};

// theta_i = (i + 1/2) pi / N, open in (0, pi).
std::vector<Real> default_angles(int count);

// Throws ValidationError unless angles are strictly increasing in (0, pi).
void validate_angles(const std::vector<Real>& angles);

// p_j = -L + j 2L/(M-1) with L = sqrt(2) + pad.
std::vector<Real> offset_grid(int count, const Real& pad);

Sinogram make_sinogram(const density::Density& d, const std::vector<Real>& angles, int offsets,
                       const Real& pad, Execution mode = Execution::parallel);

// Deterministic for a fixed seed. Gaussian draws use Box-Muller on
// mt19937_64 so the stream does not depend on the standard library.
Sinogram add_noise(const Sinogram& s, const NoiseSpec& noise);

// Quadrature estimate of ||Rf||_{L1([0,2pi] x R)} from the half-range data,
// using evenness: twice the integral over (0, pi).
Real l1_norm(const Sinogram& s);

// Trapezoid weights on a uniform grid of `count` points with spacing dp.
std::vector<Real> trapezoid_weights(std::size_t count, const Real& dp);

// CSV theta,p,value plus <name>.meta.json.
void write_sinogram(const Sinogram& s, const std::filesystem::path& csv);
Sinogram read_sinogram(const std::filesystem::path& csv);

inline constexpr const char* kSinogramSchema = "mrt.sinogram/1";

}  // namespace mrt::radon
