#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "wlasso/lasso.hpp"
#include "wlasso/whitening.hpp"

namespace wlasso {

/// Strong Irrepresentable Condition report:
/// lhs_j = |(S_{Jc,J} (S_{J,J})^{-1} sign(B_J))_j| over j in J^c,
/// with S = gram_left (x) gram_right extracted entrywise.
struct ICReport {
  std::vector<double> lhs;  // ascending order of the J^c indices
  double max_lhs = 0.0;
  double eta = 1.0;  // 1 - max_lhs
  bool holds = true;
};

struct LambdaWindow {
  double lo = 0.0;
  double hi = 0.0;
  bool heuristic = true;
};

/// Finite-sample scalars backing the sufficient conditions; the asymptotic
/// conditions themselves are not decidable at fixed n, so the window is
/// reported as a heuristic.
struct AssumptionAudit {
  double m1_bound = 0.0;        // max_j (1/n) ||design col j||^2
  double m2_bound = 0.0;        // lambda_min(S_{J,J}) / n
  double c1 = 0.0;
  double c2 = 0.0;
  double min_beta_scaled = 0.0;  // q^{c2} min_J |B_j| (NaN if magnitudes unknown)
  double sparsity_ratio = 0.0;   // |J| / q^{c1}
  double x_orth_defect = 0.0;    // ||X'X - nu*I||_inf / nu, nu = mean diagonal
  LambdaWindow lambda_window;
  bool ar1_placement = false;
};

ICReport check_ic(const VectorizedProblem& prob, const SupportSpec& truth);

/// Closed-form AR(1) bound |phi1| / (1 + phi1^2 - |phi1|); requires |phi1| < 1.
double ar1_ic_bound(double phi1);

AssumptionAudit audit_assumptions(const VectorizedProblem& prob, const SupportSpec& truth,
                                  double c1, double c2,
                                  std::span<const double> beta = {});

/// ||A^{-1}||_inf <= 1 / min_k (a_kk - sum_{j != k} |a_kj|) for strictly
/// diagonally dominant A with positive diagonal.
double varah_bound(const DenseMatrix& a);

/// Support placement hypothesis of the AR(1) sufficient condition:
/// every j in J is interior (j > p and j < pq - p, 1-based) and no index has
/// both its p-neighbours in J (equivalently, no two elements of J are
/// exactly 2p apart).
bool ar1_placement_ok(const SupportSpec& support, std::size_t p, std::size_t q);

}  // namespace wlasso
