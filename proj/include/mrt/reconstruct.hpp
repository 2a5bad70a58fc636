#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mrt/density.hpp"
#include "mrt/io.hpp"
#include "mrt/parallel.hpp"

namespace mrt::reconstruct {

using num::Real;

struct MlValue {
  Real value;
  // Largest |term| in the alternating sum, prefactor included. The ratio to
  // |value| shows how many digits cancelled.
  Real max_term;
};

// The moment-based approximation at x in [0,1]^2:
//   (m+1)!(n+1)! / ([m x1]! [n x2]!) *
//   sum_{a1 <= m-[m x1]} sum_{a2 <= n-[n x2]}
//     (-1)^(a1+a2) gamma_{a1+[m x1], a2+[n x2]} / (a1! a2! (m-[m x1]-a1)! (n-[n x2]-a2)!)
// with [.] the floor. Needs every gamma_{a,b} with a <= m, b <= n.
MlValue ml_value(const density::MomentTriangle& t, int m, int n, const Real& x1, const Real& x2);

// Integral of f against the product of beta densities
// beta(t; [m x1]+1, m-[m x1]+1) beta(s; [n x2]+1, n-[n x2]+1). The density is
// sampled once on a tensor Gauss grid and reused for every x.
class BetaKernelOracle {
 public:
  BetaKernelOracle(const density::Density& d, int m, int n);
  Real value(const Real& x1, const Real& x2) const;

 private:
  struct Axis {
    std::vector<Real> nodes;
    std::vector<Real> weights;
  };
  Axis axis_for(const density::Density& d, int order_needed, const std::vector<Real>& kinks) const;

  int m_;
  int n_;
  Axis a1_;
  Axis a2_;
  std::vector<std::vector<Real>> f_;  // [i][j] = f(t_i, s_j)
};

Real beta_kernel_value(const density::Density& d, int m, int n, const Real& x1, const Real& x2);

struct ReconstructionGrid {
  std::vector<Real> x1;  // node coordinates, ascending
  std::vector<Real> x2;
  std::vector<std::vector<Real>> values;  // [i][j] at (x1[i], x2[j])
  int m = 0;
  int n = 0;
  std::string source = "unknown";
  std::optional<Real> h;
  Real max_term;        // worst cancellation-monitor term over the grid
  Real digits_lost;     // log10(max_term / max|value|)
};

// Nodes i/(G-1); a single node sits at 1.
std::vector<Real> grid_nodes(int count);

ReconstructionGrid reconstruct_grid(const density::MomentTriangle& t, int m, int n, int g1, int g2,
                                    Execution mode = Execution::parallel);

Real sup_error(const ReconstructionGrid& g, const density::Density& d);

// sqrt((C / C1) / (n + 2))
Real choose_h(int n, double c, double c1);

// 2(|f10|+|f01|) + (|f20|+|f11|+|f02|)/2
double rate_constant(const density::DerivativeNorms& norms);
// (sigma^2/2)(|f20|+|f11|+|f02|): second-order smoothing error of a shift
// along a direction w, which mixes both coordinates.
double smoothing_constant(const density::DerivativeNorms& norms, double sigma2);

// Least-squares slope of log(error) against log(n).
double fit_loglog_slope(const std::vector<int>& orders, const std::vector<double>& errors);

void write_grid(const ReconstructionGrid& g, const std::filesystem::path& csv);
ReconstructionGrid read_grid(const std::filesystem::path& csv);

inline constexpr const char* kGridSchema = "mrt.grid/1";

}  // namespace mrt::reconstruct
