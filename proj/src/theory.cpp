#include "wlasso/theory.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>

namespace wlasso {

namespace {

// (gram_left (x) gram_right) entry at coordinates a, b
inline double gram_entry(const VectorizedProblem& prob, std::size_t a, std::size_t b) {
  std::size_t p = prob.shape.p;
  return prob.gram_left(a / p, b / p) * prob.gram_right(a % p, b % p);
}

}  // namespace

ICReport check_ic(const VectorizedProblem& prob, const SupportSpec& truth) {
  std::size_t p = prob.shape.p, q = prob.shape.q;
  std::size_t pq = p * q;
  truth.validate(pq);
  std::size_t s = truth.size();

  std::vector<double> w(s, 0.0);
  if (s > 0) {
    DenseMatrix sub(s, s);
    for (std::size_t a = 0; a < s; ++a)
      for (std::size_t b = 0; b < s; ++b)
        sub(a, b) = gram_entry(prob, truth.indices[a], truth.indices[b]);
    DenseMatrix l;
    try {
      l = cholesky_lower(sub);
    } catch (const NotPositiveDefinite&) {
      throw SingularSubGram("check_ic: (X'X)_{J,J} singular within tolerance");
    }
    std::vector<double> sgn(s);
    for (std::size_t a = 0; a < s; ++a) sgn[a] = truth.signs[a];
    w = cholesky_solve(l, sgn);
  }

  std::vector<bool> in_j(pq, false);
  for (std::size_t idx : truth.indices) in_j[idx] = true;

  ICReport rep;
  rep.lhs.reserve(pq - s);
  for (std::size_t j = 0; j < pq; ++j) {
    if (in_j[j]) continue;
    double acc = 0.0;
    for (std::size_t a = 0; a < s; ++a) acc += gram_entry(prob, j, truth.indices[a]) * w[a];
    rep.lhs.push_back(std::abs(acc));
  }
  rep.max_lhs = 0.0;
  for (double v : rep.lhs) rep.max_lhs = std::max(rep.max_lhs, v);
  rep.eta = 1.0 - rep.max_lhs;
  rep.holds = rep.max_lhs < 1.0;
  return rep;
}

double ar1_ic_bound(double phi1) {
  assert(std::abs(phi1) < 1.0);
  double a = std::abs(phi1);
  return a / (1.0 + phi1 * phi1 - a);
}

AssumptionAudit audit_assumptions(const VectorizedProblem& prob, const SupportSpec& truth,
                                  double c1, double c2, std::span<const double> beta) {
  if (!(c1 > 0.0) || !(c2 > 0.0) || !(c1 + c2 < 0.5))
    throw InvalidExponents("audit: requires 0 < c1 + c2 < 1/2");
  std::size_t p = prob.shape.p, q = prob.shape.q;
  std::size_t pq = p * q;
  double n = static_cast<double>(prob.shape.n);
  truth.validate(pq);
  if (!beta.empty() && beta.size() != pq)
    throw DimensionMismatch("audit: beta length != pq");

  AssumptionAudit audit;
  audit.c1 = c1;
  audit.c2 = c2;

  double m1 = 0.0;
  for (std::size_t k = 0; k < q; ++k)
    for (std::size_t r = 0; r < p; ++r)
      m1 = std::max(m1, prob.gram_left(k, k) * prob.gram_right(r, r));
  audit.m1_bound = m1 / n;

  std::size_t s = truth.size();
  if (s > 0) {
    DenseMatrix sub(s, s);
    for (std::size_t a = 0; a < s; ++a)
      for (std::size_t b = 0; b < s; ++b)
        sub(a, b) = gram_entry(prob, truth.indices[a], truth.indices[b]);
    audit.m2_bound = symmetric_eigenvalues(sub).front() / n;
  } else {
    audit.m2_bound = 0.0;
  }

  double qd = static_cast<double>(q);
  if (beta.empty()) {
    audit.min_beta_scaled = std::numeric_limits<double>::quiet_NaN();
  } else if (s == 0) {
    audit.min_beta_scaled = 0.0;
  } else {
    double mn = std::numeric_limits<double>::infinity();
    for (std::size_t idx : truth.indices) mn = std::min(mn, std::abs(beta[idx]));
    audit.min_beta_scaled = std::pow(qd, c2) * mn;
  }

  audit.sparsity_ratio = static_cast<double>(s) / std::pow(qd, c1);

  double nu = prob.gram_right.trace() / static_cast<double>(p);
  DenseMatrix defect = subtract(prob.gram_right, scale(DenseMatrix::identity(p), nu));
  audit.x_orth_defect = nu > 0.0 ? infinity_norm(defect) / nu
                                 : std::numeric_limits<double>::infinity();

  audit.lambda_window.lo = std::sqrt(n) * std::log(n);
  audit.lambda_window.hi = n * std::pow(qd, -(c1 + c2));
  audit.lambda_window.heuristic = true;

  audit.ar1_placement = ar1_placement_ok(truth, p, q);
  return audit;
}

double varah_bound(const DenseMatrix& a) {
  if (a.rows() != a.cols()) throw DimensionMismatch("varah_bound: matrix not square");
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < a.rows(); ++k) {
    double d = a(k, k);
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (j != k) d -= std::abs(a(k, j));
    if (!(d > 0.0))
      throw NotDiagonallyDominant("varah_bound: row " + std::to_string(k) +
                                  " not strictly dominant");
    worst = std::min(worst, d);
  }
  return 1.0 / worst;
}

bool ar1_placement_ok(const SupportSpec& support, std::size_t p, std::size_t q) {
  std::size_t pq = p * q;
  support.validate(pq);
  // 1-based: j > p and j < pq - p
  for (std::size_t j : support.indices) {
    std::size_t one_based = j + 1;
    if (!(one_based > p && one_based < pq - p)) return false;
  }
  // no two support elements exactly 2p apart
  std::vector<bool> in_j(pq, false);
  for (std::size_t j : support.indices) in_j[j] = true;
  for (std::size_t j : support.indices)
    if (j + 2 * p < pq && in_j[j + 2 * p]) return false;
  return true;
}

}  // namespace wlasso
