#include "mrt/linalg.hpp"

#include <string>
#include <utility>

#include "mrt/errors.hpp"

namespace mrt::num {

Matrix::Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = Real(1);
  return m;
}

std::vector<Real> multiply(const Matrix& a, std::span<const Real> x) {
  if (a.cols() != x.size()) throw DomainError("matrix-vector size mismatch");
  std::vector<Real> out(a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < a.cols(); ++c) out[r].add_product(a(r, c), x[c]);
  }
  return out;
}

Matrix multiply(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw DomainError("matrix-matrix size mismatch");
  Matrix out(a.rows(), b.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      for (std::size_t c = 0; c < b.cols(); ++c) out(r, c).add_product(a(r, k), b(k, c));
    }
  }
  return out;
}

Real max_abs(std::span<const Real> v) {
  Real m(0);
  for (const auto& x : v) m = max(m, abs(x));
  return m;
}

Real max_abs(const Matrix& a) {
  Real m(0);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < a.cols(); ++c) m = max(m, abs(a(r, c)));
  }
  return m;
}

Real norm_1(const Matrix& a) {
  Real best(0);
  for (std::size_t c = 0; c < a.cols(); ++c) {
    Real col(0);
    for (std::size_t r = 0; r < a.rows(); ++r) col += abs(a(r, c));
    best = max(best, col);
  }
  return best;
}

std::vector<Real> solve_lower_triangular(const Matrix& lower, std::span<const Real> y) {
  const std::size_t n = lower.rows();
  if (lower.cols() != n || y.size() != n) throw DomainError("triangular solve size mismatch");
  std::vector<Real> x(n);
  for (std::size_t r = 0; r < n; ++r) {
    if (lower(r, r).is_zero()) {
      throw SingularityError("zero diagonal entry at row " + std::to_string(r), 0.0);
    }
    Real acc = y[r];
    for (std::size_t c = 0; c < r; ++c) acc.sub_product(lower(r, c), x[c]);
    x[r] = acc / lower(r, r);
  }
  return x;
}

LuFactorization::LuFactorization(const Matrix& a) : lu_(a), perm_(a.rows()) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw DomainError("LU factorization needs a square matrix");
  norm_1_ = norm_1(a);
  for (std::size_t i = 0; i < n; ++i) perm_[i] = i;
  const Real scale = max_abs(a);
  const Real threshold = scale * epsilon_pow2(working_precision() - 8);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t pivot = k;
    Real best = abs(lu_(k, k));
    for (std::size_t r = k + 1; r < n; ++r) {
      Real v = abs(lu_(r, k));
      if (v > best) {
        best = std::move(v);
        pivot = r;
      }
    }
    if (best <= threshold || scale.is_zero()) {
      double rel = scale.is_zero() ? 0.0 : (best / scale).to_double();
      throw SingularityError("matrix is numerically singular: pivot " + best.str(6) +
                                 " at column " + std::to_string(k),
                             rel);
    }
    if (pivot != k) {
      for (std::size_t c = 0; c < n; ++c) std::swap(lu_(k, c), lu_(pivot, c));
      std::swap(perm_[k], perm_[pivot]);
      ++swaps_;
    }
    for (std::size_t r = k + 1; r < n; ++r) {
      Real factor = lu_(r, k) / lu_(k, k);
      for (std::size_t c = k + 1; c < n; ++c) lu_(r, c).sub_product(factor, lu_(k, c));
      lu_(r, k) = std::move(factor);
    }
  }
}

std::vector<Real> LuFactorization::solve(std::span<const Real> y) const {
  const std::size_t n = lu_.rows();
  if (y.size() != n) throw DomainError("LU solve size mismatch");
  std::vector<Real> x(n);
  for (std::size_t r = 0; r < n; ++r) {
    Real acc = y[perm_[r]];
    for (std::size_t c = 0; c < r; ++c) acc.sub_product(lu_(r, c), x[c]);
    x[r] = std::move(acc);
  }
  for (std::size_t r = n; r-- > 0;) {
    Real acc = x[r];
    for (std::size_t c = r + 1; c < n; ++c) acc.sub_product(lu_(r, c), x[c]);
    x[r] = acc / lu_(r, r);
  }
  return x;
}

Matrix LuFactorization::inverse() const {
  const std::size_t n = lu_.rows();
  Matrix inv(n, n);
  std::vector<Real> e(n);
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t r = 0; r < n; ++r) e[r] = Real(r == c ? 1 : 0);
    auto col = solve(e);
    for (std::size_t r = 0; r < n; ++r) inv(r, c) = std::move(col[r]);
  }
  return inv;
}

Real LuFactorization::determinant() const {
  Real det(swaps_ % 2 == 0 ? 1 : -1);
  for (std::size_t i = 0; i < lu_.rows(); ++i) det *= lu_(i, i);
  return det;
}

Real LuFactorization::condition_1() const { return norm_1_ * norm_1(inverse()); }

std::vector<Real> solve_dense(const Matrix& a, std::span<const Real> y) {
  return LuFactorization(a).solve(y);
}

LeastSquaresSolution solve_least_squares(const Matrix& a, std::span<const Real> y) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  if (m < n) throw DomainError("least squares needs at least as many rows as columns");
  if (y.size() != m) throw DomainError("least squares size mismatch");
  Matrix r = a;
  std::vector<Real> rhs(y.begin(), y.end());
  const Real scale = max_abs(a);
  const Real threshold = scale * epsilon_pow2(working_precision() - 8);
  for (std::size_t k = 0; k < n; ++k) {
    Real norm(0);
    for (std::size_t i = k; i < m; ++i) norm.add_product(r(i, k), r(i, k));
    norm = sqrt(norm);
    if (norm <= threshold || scale.is_zero()) {
      throw SingularityError("least-squares matrix is rank deficient at column " +
                                 std::to_string(k),
                             scale.is_zero() ? 0.0 : (norm / scale).to_double());
    }
    Real alpha = r(k, k).sign() > 0 ? -norm : norm;
    std::vector<Real> v(m - k);
    for (std::size_t i = k; i < m; ++i) v[i - k] = r(i, k);
    v[0] -= alpha;
    Real vnorm2(0);
    for (const auto& vi : v) vnorm2.add_product(vi, vi);
    if (vnorm2.is_zero()) continue;
    for (std::size_t c = k; c < n; ++c) {
      Real dot(0);
      for (std::size_t i = k; i < m; ++i) dot.add_product(v[i - k], r(i, c));
      Real f = Real(2) * dot / vnorm2;
      for (std::size_t i = k; i < m; ++i) r(i, c).sub_product(f, v[i - k]);
    }
    Real dot(0);
    for (std::size_t i = k; i < m; ++i) dot.add_product(v[i - k], rhs[i]);
    Real f = Real(2) * dot / vnorm2;
    for (std::size_t i = k; i < m; ++i) rhs[i].sub_product(f, v[i - k]);
  }
  Matrix upper(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = i; c < n; ++c) upper(i, c) = r(i, c);
  }
  std::vector<Real> x(n);
  for (std::size_t i = n; i-- > 0;) {
    Real acc = rhs[i];
    for (std::size_t c = i + 1; c < n; ++c) acc.sub_product(upper(i, c), x[c]);
    x[i] = acc / upper(i, i);
  }
  Real residual2(0);
  for (std::size_t i = n; i < m; ++i) residual2.add_product(rhs[i], rhs[i]);

  // Condition of R via its explicit inverse (back substitution per column).
  Matrix inv(n, n);
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t i = n; i-- > 0;) {
      Real acc(i == c ? 1 : 0);
      for (std::size_t j = i + 1; j < n; ++j) acc.sub_product(upper(i, j), inv(j, c));
      inv(i, c) = acc / upper(i, i);
    }
  }
  return {std::move(x), norm_1(upper) * norm_1(inv), sqrt(residual2)};
}

}  // namespace mrt::num
