#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mrt/real.hpp"

namespace mrt::num {

// Dense row-major matrix of Reals.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols);

  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  Real& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const Real& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Real> data_;
};

std::vector<Real> multiply(const Matrix& a, std::span<const Real> x);
Matrix multiply(const Matrix& a, const Matrix& b);

Real max_abs(std::span<const Real> v);
Real max_abs(const Matrix& a);
Real norm_1(const Matrix& a);

// Forward substitution. Throws SingularityError on a zero diagonal entry.
std::vector<Real> solve_lower_triangular(const Matrix& lower, std::span<const Real> y);

// LU with partial pivoting. A pivot below 2^(-P+8) * max|A| is treated as
// singular.
class LuFactorization {
 public:
  explicit LuFactorization(const Matrix& a);

  std::vector<Real> solve(std::span<const Real> y) const;
  Matrix inverse() const;
  Real determinant() const;
  // ||A||_1 * ||A^-1||_1
  Real condition_1() const;

 private:
  Matrix lu_;
  std::vector<std::size_t> perm_;
  int swaps_ = 0;
  Real norm_1_;
};

std::vector<Real> solve_dense(const Matrix& a, std::span<const Real> y);

struct LeastSquaresSolution {
  std::vector<Real> x;
  Real condition;        // ||R||_1 * ||R^-1||_1 of the triangular factor
  Real residual_norm;    // ||Ax - y||_2
};

// Householder QR least squares for rows >= cols.
LeastSquaresSolution solve_least_squares(const Matrix& a, std::span<const Real> y);

}  // namespace mrt::num
