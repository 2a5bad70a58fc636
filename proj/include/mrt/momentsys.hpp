#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mrt/density.hpp"
#include "mrt/linalg.hpp"
#include "mrt/mollifier.hpp"
#include "mrt/parallel.hpp"
#include "mrt/radon.hpp"

namespace mrt::momentsys {

using num::Real;

// b^(k)(theta_i) (raw) or the moments of the mollified transform.
struct MomentSet {
  enum class Kind { raw, mollified };
  Kind kind = Kind::raw;
  int max_order = 0;
  std::vector<Real> angles;
  std::vector<std::vector<Real>> values;  // [k][i]
  // set for mollified sets so files can be inverted without extra flags
  std::optional<radon::MollifierDescriptor> mollifier;
};

std::string kind_name(MomentSet::Kind k);

// Trapezoid moments on the stored offset grid. The kind follows the
// sinogram's mollifier state. Throws TruncationError when a row does not
// decay at the ends of the grid (|edge| > 1e-3 max|values|).
MomentSet sinogram_moments(const radon::Sinogram& s, int max_order,
                           Execution mode = Execution::parallel);

// Moments from the continuous transform of a known density. The offset
// integral is adaptive Gauss-Legendre between vertex projections; with a
// mollifier the convolution variable is integrated by tanh-sinh over
// [-h, h], reusing the same offset nodes.
MomentSet continuous_moments(const density::Density& d, const std::vector<Real>& angles,
                             int max_order, const mollifier::MollifierSpec* m,
                             Execution mode = Execution::parallel);

enum class MomentQuadrature { automatic, grid, continuous };
MomentQuadrature parse_moment_quadrature(const std::string& name);
std::string moment_quadrature_name(MomentQuadrature q);

// True when `automatic` would take the continuous path: the sinogram names a
// registry density and carries no noise.
bool continuous_available(const radon::Sinogram& s);

MomentSet extract_moments(const radon::Sinogram& s, int max_order, MomentQuadrature q,
                          Execution mode = Execution::parallel);

// (k+1)x(k+1) lower triangular, entry [r][r-j] = C(r,j) c_j.
num::Matrix build_C(int k, const mollifier::MollifierSpec& m);

MomentSet hatb_to_b(const MomentSet& hatb, const mollifier::MollifierSpec& m);
// Forward transfer: hat-b^(k) = sum_j C(k,j) c_j b^(k-j).
MomentSet b_to_hatb(const MomentSet& b, const mollifier::MollifierSpec& m);

// Entry [i][j] = C(k,j) cos^j(theta_i) sin^(k-j)(theta_i).
num::Matrix build_A(int k, std::span<const Real> angles);
// prod_i sin^k(theta_i) prod_j C(k,j) prod_{i<l} (cot theta_l - cot theta_i)
Real vandermonde_determinant(int k, std::span<const Real> angles);

enum class SolveMode { square, least_squares };

struct OrderSolution {
  std::vector<Real> gamma;   // gamma_{j,k-j}, j = 0..k
  Real condition;            // 1-norm condition of the solved system
  std::vector<std::size_t> angle_indices;
  SolveMode mode = SolveMode::square;
};

// Angle indices floor(i N / (k+1)), i = 0..k.
std::vector<std::size_t> spread_indices(std::size_t n, int k);

OrderSolution solve_order(const MomentSet& ms, int k, SolveMode mode,
                          const std::vector<std::size_t>* subset = nullptr);

struct Recovery {
  density::MomentTriangle triangle;
  std::vector<Real> conditions;  // per order k
};

Recovery recover_triangle(const MomentSet& ms, int max_order, SolveMode mode = SolveMode::square,
                          Execution exec = Execution::parallel);

enum class SynthesisForm {
  // the double/triple sum as written, with cos^j sin^(k-j) on the inner term
  literal,
  // inner term weighted by cos^(j+l) sin^(k-j+n), from expanding
  // (x.w + tau)^k in both coordinates
  directional,
};

Real synthesis_residual(const density::MomentTriangle& t, const mollifier::MollifierSpec& m,
                        const Real& theta, int k, SynthesisForm form = SynthesisForm::literal);

// ||A x - b|| / ||b|| for the least-squares fit of b^(k) over every angle.
Real homogeneity_residual(const MomentSet& ms, int k);

io::json to_json(const MomentSet& ms);
MomentSet moment_set_from_json(const io::json& j);
io::json to_json(const density::MomentTriangle& t);
density::MomentTriangle triangle_from_json(const io::json& j);

void write_moment_set(const MomentSet& ms, const std::filesystem::path& path);
MomentSet read_moment_set(const std::filesystem::path& path);
void write_triangle(const density::MomentTriangle& t, const std::filesystem::path& path);
density::MomentTriangle read_triangle(const std::filesystem::path& path);

inline constexpr const char* kMomentSetSchema = "mrt.moments/1";
inline constexpr const char* kTriangleSchema = "mrt.triangle/1";

}  // namespace mrt::momentsys
