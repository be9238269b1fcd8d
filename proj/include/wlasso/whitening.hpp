#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "wlasso/covariance.hpp"
#include "wlasso/linalg.hpp"

namespace wlasso {

struct ProblemShape {
  std::size_t n = 0;
  std::size_t p = 0;
  std::size_t q = 0;
};

/// Coordinate decomposition j = p*k + r (0-based): r indexes the predictor
/// (row of B), k the response (column of B). vec stacks columns.
struct CoordIndex {
  std::size_t r;
  std::size_t k;
};

inline CoordIndex coord_of(std::size_t j, std::size_t p) { return {j % p, j / p}; }

/// Vectorized whitened problem. The design (half' (x) X) stays implicit;
/// solver quantities come from the Kronecker Gram factors
/// gram_left (x) gram_right = design' * design.
struct VectorizedProblem {
  ProblemShape shape;
  KroneckerOperator design_op;   // left = half', right = X
  std::vector<double> y_vec;     // vec(Y * half), length nq
  DenseMatrix gram_left;         // half * half' = Sigma^{-1}, q x q
  DenseMatrix gram_right;        // X'X, p x p
  std::vector<double> xty;       // vec(X' Y half half'), length pq
  double y_sqnorm = 0.0;
};

VectorizedProblem build_problem(const DenseMatrix& y, const DenseMatrix& x,
                                const PrecisionFactor& factor);

/// y_vec - design * beta through the Kronecker operator.
std::vector<double> residual_vector(const VectorizedProblem& prob,
                                    std::span<const double> beta);

/// Squared loss ||y_vec - design*beta||^2 via the operator path.
double quadratic_loss(const VectorizedProblem& prob, std::span<const double> beta);

/// Full-shrinkage threshold 2*||xty||_inf.
double lambda_max(const VectorizedProblem& prob);

}  // namespace wlasso
