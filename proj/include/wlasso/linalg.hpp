#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "wlasso/errors.hpp"

namespace wlasso {

/// Dense real matrix, row-major storage.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries);

  static DenseMatrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  const std::vector<double>& entries() const { return data_; }

  bool all_finite() const;
  double trace() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

DenseMatrix transpose(const DenseMatrix& a);
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
std::vector<double> matvec(const DenseMatrix& a, std::span<const double> x);
DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix subtract(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix scale(const DenseMatrix& a, double s);

/// Max absolute entry.
double max_abs(const DenseMatrix& a);
double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b);
/// Induced infinity norm: max absolute row sum.
double infinity_norm(const DenseMatrix& a);

/// Symmetric Toeplitz matrix stored by its first row (r0 ... r_{q-1}), r0 > 0.
class SymmetricToeplitz {
 public:
  explicit SymmetricToeplitz(std::vector<double> first_row);

  std::size_t dim() const { return first_row_.size(); }
  const std::vector<double>& first_row() const { return first_row_; }
  double at(std::size_t i, std::size_t j) const {
    return first_row_[i > j ? i - j : j - i];
  }
  DenseMatrix materialize() const;

 private:
  std::vector<double> first_row_;
};

/// Implicit Kronecker product left (q x q) (x) right (n x p).
/// Matrix-vector products go through the vec identity
/// (A (x) B) vec(M) = vec(B M A'), so the full operator is never formed.
struct KroneckerOperator {
  DenseMatrix left;
  DenseMatrix right;

  std::size_t out_dim() const { return left.rows() * right.rows(); }
  std::size_t in_dim() const { return left.cols() * right.cols(); }

  std::vector<double> apply(std::span<const double> v) const;
  std::vector<double> apply_transpose(std::span<const double> w) const;

  /// Dense materialization; test/small-size use only.
  DenseMatrix materialize() const;
};

/// Lower Cholesky factor L with L L' = S. Pivot tolerance is
/// 1e-12 * trace(S)/dim; a pivot at or below it raises NotPositiveDefinite.
/// Only the lower triangle of S is read.
DenseMatrix cholesky_lower(const DenseMatrix& s);

/// Solve (L L') x = b given the lower factor L.
std::vector<double> cholesky_solve(const DenseMatrix& l, std::span<const double> b);
DenseMatrix cholesky_solve_matrix(const DenseMatrix& l, const DenseMatrix& b);

/// Inverse of a symmetric positive-definite matrix via its Cholesky factor.
DenseMatrix spd_inverse(const DenseMatrix& s);

/// Orthogonal projector onto the complement of col(X):
/// Pi = I - X (X'X)^{-1} X', computed with Cholesky solves and symmetrized.
DenseMatrix projection_complement(const DenseMatrix& x);

/// Gaussian elimination with partial pivoting. Throws SingularSystem.
std::vector<double> solve_linear(DenseMatrix a, std::vector<double> b);

/// Eigenvalues of a symmetric matrix (cyclic Jacobi), ascending order.
std::vector<double> symmetric_eigenvalues(const DenseMatrix& s);

// column-major vectorization: vec(M)[k*rows + r] = M(r, k)
std::vector<double> vec_colmajor(const DenseMatrix& m);
DenseMatrix unvec_colmajor(std::span<const double> v, std::size_t rows, std::size_t cols);

}  // namespace wlasso
