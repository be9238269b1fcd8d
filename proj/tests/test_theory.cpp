#include <cmath>

#include "doctest.h"
#include "wlasso/covariance.hpp"
#include "wlasso/rng.hpp"
#include "wlasso/simulate.hpp"
#include "wlasso/theory.hpp"

using namespace wlasso;

namespace {

VectorizedProblem anova_problem(std::size_t n, std::size_t q, double phi) {
  RngStream unused(0);
  DenseMatrix x = gen_design({DesignKind::BalancedAnova2, 0.5, 2, 0.0}, n, unused);
  DenseMatrix y(n, q, 0.0);
  PrecisionFactor f = phi == 0.0 ? PrecisionFactor::identity(q)
                                 : build_precision(CovarianceModel::ar1(phi, 1.0, q));
  return build_problem(y, x, f);
}

// dense reference for the IC left-hand side
std::vector<double> dense_ic_lhs(const VectorizedProblem& prob, const SupportSpec& truth) {
  DenseMatrix design = prob.design_op.materialize();
  DenseMatrix s = matmul(transpose(design), design);
  std::size_t pq = s.rows();
  std::vector<bool> in_j(pq, false);
  for (std::size_t j : truth.indices) in_j[j] = true;
  std::size_t m = truth.size();
  DenseMatrix sub(m, m);
  std::vector<double> sgn(m);
  for (std::size_t a = 0; a < m; ++a) {
    sgn[a] = truth.signs[a];
    for (std::size_t b = 0; b < m; ++b) sub(a, b) = s(truth.indices[a], truth.indices[b]);
  }
  std::vector<double> w = solve_linear(sub, sgn);
  std::vector<double> lhs;
  for (std::size_t j = 0; j < pq; ++j) {
    if (in_j[j]) continue;
    double acc = 0.0;
    for (std::size_t a = 0; a < m; ++a) acc += s(j, truth.indices[a]) * w[a];
    lhs.push_back(std::abs(acc));
  }
  return lhs;
}

SupportSpec random_spaced_support(std::size_t p, std::size_t q, std::size_t size, RngStream& rng) {
  SignalSpec spec;
  spec.support_size_override = size;
  auto [beta, truth] = gen_signal(spec, {4, p, q}, rng);
  (void)beta;
  return truth;
}

}  // namespace

TEST_CASE("check_ic: diagonal Gram gives zero lhs") {
  VectorizedProblem prob = anova_problem(4, 3, 0.0);
  SupportSpec truth;
  truth.indices = {2};
  truth.signs = {1};
  ICReport rep = check_ic(prob, truth);
  CHECK(rep.max_lhs == doctest::Approx(0.0));
  CHECK(rep.eta == doctest::Approx(1.0));
  CHECK(rep.holds);
  CHECK(rep.lhs.size() == 5);
}

TEST_CASE("check_ic: AR(1) balanced ANOVA respects the closed-form bound") {
  for (double phi : {0.5, 0.95}) {
    VectorizedProblem prob = anova_problem(8, 6, phi);
    RngStream rng(42);
    for (int rep = 0; rep < 10; ++rep) {
      SupportSpec truth = random_spaced_support(2, 6, 2, rng);
      ICReport ic = check_ic(prob, truth);
      double bound = ar1_ic_bound(phi);
      CHECK(ic.max_lhs <= bound + 1e-12);
      CHECK(ic.eta == 1.0 - ic.max_lhs);  // exact by construction

      std::vector<double> dense = dense_ic_lhs(prob, truth);
      REQUIRE(dense.size() == ic.lhs.size());
      for (std::size_t i = 0; i < dense.size(); ++i)
        CHECK(std::abs(dense[i] - ic.lhs[i]) < 1e-9);
    }
  }
}

TEST_CASE("check_ic: closed-form values for the two reference parameters") {
  CHECK(ar1_ic_bound(0.5) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(ar1_ic_bound(0.95) == doctest::Approx(0.95 / (1.0 + 0.9025 - 0.95)).epsilon(1e-12));
  CHECK(ar1_ic_bound(0.95) < 0.99738 + 1e-5);
}

TEST_CASE("ar1_ic_bound: examples and symmetry") {
  CHECK(ar1_ic_bound(0.0) == 0.0);
  CHECK(ar1_ic_bound(0.5) == doctest::Approx(2.0 / 3.0));
  CHECK(ar1_ic_bound(-0.5) == doctest::Approx(2.0 / 3.0));
  for (double phi : {0.1, 0.5, 0.9, 0.99}) CHECK(ar1_ic_bound(phi) < 1.0);
}

TEST_CASE("check_ic: singular sub-Gram raises") {
  // duplicated design column makes (X'X)_{J,J} singular when J spans both
  DenseMatrix x(4, 2, {1, 1, 1, 1, 1, 1, 1, 1});
  DenseMatrix y(4, 2, 0.0);
  VectorizedProblem prob = build_problem(y, x, PrecisionFactor::identity(2));
  SupportSpec truth;
  truth.indices = {0, 1};
  truth.signs = {1, 1};
  CHECK_THROWS_AS(check_ic(prob, truth), SingularSubGram);
}

TEST_CASE("audit_assumptions: orthogonal design with identity covariance") {
  // columns of squared norm n, so the normalized bounds are exactly one
  DenseMatrix x = scale(DenseMatrix::identity(4), 2.0);
  DenseMatrix y(4, 3, 0.0);
  VectorizedProblem prob = build_problem(y, x, PrecisionFactor::identity(3));
  SupportSpec truth;
  truth.indices = {5};
  truth.signs = {-1};
  std::vector<double> beta(12, 0.0);
  beta[5] = -0.7;
  AssumptionAudit audit = audit_assumptions(prob, truth, 0.125, 0.125, beta);
  CHECK(audit.m1_bound == doctest::Approx(1.0));
  CHECK(audit.m2_bound == doctest::Approx(1.0));
  CHECK(audit.x_orth_defect == doctest::Approx(0.0));
  CHECK(audit.min_beta_scaled == doctest::Approx(std::pow(3.0, 0.125) * 0.7));
  CHECK(audit.sparsity_ratio == doctest::Approx(1.0 / std::pow(3.0, 0.125)));
  CHECK(audit.lambda_window.heuristic);
  CHECK(audit.lambda_window.lo == doctest::Approx(2.0 * std::log(4.0)));
  CHECK(audit.lambda_window.hi == doctest::Approx(4.0 * std::pow(3.0, -0.25)));
}

TEST_CASE("audit_assumptions: balanced ANOVA column scaling") {
  VectorizedProblem prob = anova_problem(8, 4, 0.0);
  SupportSpec truth;
  truth.indices = {4};
  truth.signs = {1};
  AssumptionAudit audit = audit_assumptions(prob, truth, 0.1, 0.1);
  CHECK(audit.m1_bound == doctest::Approx(0.5));  // n/2 observations per column
  CHECK(std::isnan(audit.min_beta_scaled));       // magnitudes not supplied
  CHECK(audit.x_orth_defect == doctest::Approx(0.0));
  CHECK(audit.ar1_placement);
}

TEST_CASE("audit_assumptions: exponent guard") {
  VectorizedProblem prob = anova_problem(4, 3, 0.0);
  SupportSpec truth;
  CHECK_THROWS_AS(audit_assumptions(prob, truth, 0.3, 0.3), InvalidExponents);
  CHECK_THROWS_AS(audit_assumptions(prob, truth, 0.0, 0.1), InvalidExponents);
}

TEST_CASE("ar1_placement_ok: boundary and spacing rules") {
  std::size_t p = 2, q = 6;  // pq = 12, interior 1-based range (2, 10)
  SupportSpec ok;
  ok.indices = {4, 5};
  ok.signs = {1, -1};
  CHECK(ar1_placement_ok(ok, p, q));

  SupportSpec low;
  low.indices = {1};  // 1-based 2, not > p
  low.signs = {1};
  CHECK_FALSE(ar1_placement_ok(low, p, q));

  SupportSpec high;
  high.indices = {9};  // 1-based 10, not < pq - p = 10
  high.signs = {1};
  CHECK_FALSE(ar1_placement_ok(high, p, q));

  SupportSpec paired;  // distance exactly 2p: both neighbours of their midpoint
  paired.indices = {3, 7};
  paired.signs = {1, 1};
  CHECK_FALSE(ar1_placement_ok(paired, p, q));
}

TEST_CASE("check_ic: paired support at distance 2p can exceed the bound") {
  // shows why the placement rule forbids pairs exactly 2p apart
  double phi = 0.95;
  VectorizedProblem prob = anova_problem(8, 8, phi);
  SupportSpec truth;
  truth.indices = {4, 8};  // same predictor, responses k=2 and k=4
  truth.signs = {1, 1};
  ICReport ic = check_ic(prob, truth);
  CHECK(ic.max_lhs > ar1_ic_bound(phi));
  CHECK_FALSE(ar1_placement_ok(truth, 2, 8));
}

TEST_CASE("ar1_ic_bound dominates check_ic on Prop-4 instances") {
  RngStream rng(2024);
  int done = 0;
  while (done < 200) {
    double phi = rng.uniform() < 0.5 ? 0.5 : 0.95;
    std::size_t q = 5 + rng.uniform_index(10);
    std::size_t n = 8;
    std::size_t max_support = std::min<std::size_t>(3, q / 3);
    if (max_support == 0) continue;
    std::size_t size = 1 + rng.uniform_index(max_support);
    VectorizedProblem prob = anova_problem(n, q, phi);
    SupportSpec truth;
    try {
      truth = random_spaced_support(2, q, size, rng);
    } catch (const PlacementInfeasible&) {
      continue;
    }
    REQUIRE(ar1_placement_ok(truth, 2, q));
    ICReport ic = check_ic(prob, truth);
    CHECK(ic.max_lhs <= ar1_ic_bound(phi) + 1e-12);
    ++done;
  }
}

TEST_CASE("varah_bound: examples") {
  CHECK(varah_bound(DenseMatrix::identity(3)) == doctest::Approx(1.0));
  DenseMatrix a(2, 2, {2.0, -1.0, -1.0, 2.0});
  CHECK(varah_bound(a) == doctest::Approx(1.0));
  // exact ||A^{-1}||_inf is 1 here: A^{-1} = [[2/3,1/3],[1/3,2/3]]
  DenseMatrix inv = spd_inverse(a);
  CHECK(infinity_norm(inv) == doctest::Approx(1.0).epsilon(1e-12));

  DenseMatrix bad(2, 2, {1.0, -2.0, 0.0, 1.0});
  CHECK_THROWS_AS(varah_bound(bad), NotDiagonallyDominant);
}

TEST_CASE("varah_bound: never underestimates the true norm") {
  RngStream rng(515);
  for (int rep = 0; rep < 100; ++rep) {
    std::size_t n = 2 + rng.uniform_index(5);
    DenseMatrix a(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      double off = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        a(i, j) = rng.normal();
        off += std::abs(a(i, j));
      }
      a(i, i) = off + 0.1 + rng.uniform();
    }
    double bound = varah_bound(a);
    DenseMatrix inv(n, n);
    for (std::size_t j = 0; j < n; ++j) {
      std::vector<double> e(n, 0.0);
      e[j] = 1.0;
      std::vector<double> col = solve_linear(a, e);
      for (std::size_t i = 0; i < n; ++i) inv(i, j) = col[i];
    }
    CHECK(infinity_norm(inv) <= bound * (1.0 + 1e-10));
  }
}

TEST_CASE("varah_bound: AR(1) sub-Gram instance") {
  double phi = 0.6;
  VectorizedProblem prob = anova_problem(8, 7, phi);
  RngStream rng(9);
  SupportSpec truth = random_spaced_support(2, 7, 2, rng);
  std::size_t s = truth.size();
  DenseMatrix sub(s, s);
  for (std::size_t a = 0; a < s; ++a)
    for (std::size_t b = 0; b < s; ++b) {
      std::size_t ja = truth.indices[a], jb = truth.indices[b];
      sub(a, b) = prob.gram_left(ja / 2, jb / 2) * prob.gram_right(ja % 2, jb % 2);
    }
  double bound = varah_bound(sub);
  DenseMatrix inv = spd_inverse(sub);
  CHECK(infinity_norm(inv) <= bound * (1.0 + 1e-10));
}
