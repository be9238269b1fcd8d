#include "wlasso/whitening.hpp"

#include <algorithm>
#include <cmath>

namespace wlasso {

VectorizedProblem build_problem(const DenseMatrix& y, const DenseMatrix& x,
                                const PrecisionFactor& factor) {
  std::size_t n = y.rows(), q = y.cols(), p = x.cols();
  if (x.rows() != n) throw DimensionMismatch("build_problem: X and Y row counts differ");
  if (factor.dim() != q) throw DimensionMismatch("build_problem: factor dim != q");
  if (n == 0 || p == 0 || q == 0) throw DimensionMismatch("build_problem: empty dimension");

  VectorizedProblem prob;
  prob.shape = {n, p, q};
  prob.design_op = {transpose(factor.half), x};

  DenseMatrix y_white = matmul(y, factor.half);  // n x q
  prob.y_vec = vec_colmajor(y_white);

  prob.gram_left = matmul(factor.half, transpose(factor.half));
  prob.gram_right = matmul(transpose(x), x);

  // X' Y half half' = (X' Y_white) half'
  DenseMatrix xtyw = matmul(transpose(x), y_white);            // p x q
  prob.xty = vec_colmajor(matmul(xtyw, transpose(factor.half)));  // p x q

  prob.y_sqnorm = 0.0;
  for (double v : prob.y_vec) prob.y_sqnorm += v * v;
  return prob;
}

std::vector<double> residual_vector(const VectorizedProblem& prob,
                                    std::span<const double> beta) {
  if (beta.size() != prob.shape.p * prob.shape.q)
    throw DimensionMismatch("residual_vector: beta length != pq");
  std::vector<double> r = prob.design_op.apply(beta);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = prob.y_vec[i] - r[i];
  return r;
}

double quadratic_loss(const VectorizedProblem& prob, std::span<const double> beta) {
  std::vector<double> r = residual_vector(prob, beta);
  double s = 0.0;
  for (double v : r) s += v * v;
  return s;
}

double lambda_max(const VectorizedProblem& prob) {
  double m = 0.0;
  for (double v : prob.xty) m = std::max(m, std::abs(v));
  return 2.0 * m;
}

}  // namespace wlasso
