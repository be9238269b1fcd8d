#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "wlasso/whitening.hpp"

namespace wlasso {

/// Objective convention: ||y_vec - design*beta||_2^2 + lambda*||beta||_1,
/// squared loss without 1/(2n) scaling, so lambda_max = 2*||xty||_inf.
struct LassoConfig {
  std::size_t n_lambda = 100;
  double lambda_min_ratio = 1e-3;
  /// Per-sweep sup-norm convergence tolerance; <= 0 means the default
  /// 0.5e-9 * lambda_max of the problem at hand.
  double tol = 0.0;
  std::size_t max_sweeps = 20000;
  /// Assert the objective is non-increasing across sweeps (always on in
  /// debug builds).
  bool verify_objective = false;

  void validate() const;
  /// Log-spaced descending grid from lambda_max down to
  /// lambda_max * lambda_min_ratio.
  std::vector<double> grid(double lam_max) const;
};

struct LassoPath {
  std::vector<double> lambdas;
  std::vector<std::vector<double>> betas;
  std::vector<std::size_t> sweeps_used;
  std::vector<double> kkt_residuals;

  std::size_t size() const { return lambdas.size(); }
};

/// Support set J with per-index signs, 0-based indices into vec(B).
struct SupportSpec {
  std::vector<std::size_t> indices;  // sorted, distinct
  std::vector<int> signs;            // +1 / -1, aligned with indices

  static SupportSpec from_beta(std::span<const double> beta);
  void validate(std::size_t pq) const;
  std::size_t size() const { return indices.size(); }
  /// Dense sign vector of length pq with entries in {-1, 0, +1}.
  std::vector<int> dense_signs(std::size_t pq) const;
};

struct RecoveryOutcome {
  bool any_lambda = false;
  std::optional<double> best_lambda;
};

std::vector<double> solve_lasso(const VectorizedProblem& prob, double lambda,
                                std::span<const double> init, const LassoConfig& cfg);

LassoPath solve_path(const VectorizedProblem& prob, const LassoConfig& cfg);

/// Exact sign match (support and signs) at some grid point; best_lambda is
/// the largest matching lambda.
RecoveryOutcome sign_recovered(const LassoPath& path, const SupportSpec& truth);

/// Gradient 2*(xty - (gram_left (x) gram_right) beta) through the Kronecker
/// Gram factors, never forming the design.
std::vector<double> gram_gradient(const VectorizedProblem& prob, std::span<const double> beta);

/// Max KKT violation of beta at penalty lambda.
double kkt_residual(const VectorizedProblem& prob, std::span<const double> beta, double lambda);

}  // namespace wlasso
