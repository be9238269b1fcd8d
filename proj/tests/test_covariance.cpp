#include <cmath>

#include "doctest.h"
#include "wlasso/covariance.hpp"
#include "wlasso/rng.hpp"
#include "wlasso/simulate.hpp"

using namespace wlasso;

namespace {

DenseMatrix balanced_anova(std::size_t n) {
  RngStream unused(0);
  return gen_design({DesignKind::BalancedAnova2, 0.5, 2, 0.0}, n, unused);
}

}  // namespace

TEST_CASE("extract_residuals: noiseless fit gives zero residuals") {
  DenseMatrix x = balanced_anova(6);
  DenseMatrix b(2, 3, {1.0, -2.0, 0.5, 3.0, 0.0, -1.0});
  DenseMatrix y = matmul(x, b);
  ResidualEstimate res = extract_residuals(y, x);
  CHECK(max_abs(res.e_hat) < 1e-12);
  CHECK(res.projector_trace == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("extract_residuals: equals dense projector multiply and kills X B0") {
  RngStream rng(5);
  std::size_t n = 9, p = 3, q = 4;
  DenseMatrix x(n, p), y(n, q), b0(p, q);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < p; ++j) x(i, j) = rng.normal();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < q; ++j) y(i, j) = rng.normal();
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < q; ++j) b0(i, j) = rng.normal();

  ResidualEstimate res = extract_residuals(y, x);
  DenseMatrix pi = projection_complement(x);
  CHECK(max_abs_diff(res.e_hat, matmul(pi, y)) < 1e-12);
  CHECK(max_abs(matmul(transpose(x), res.e_hat)) < 1e-8);

  ResidualEstimate shifted = extract_residuals(add(y, matmul(x, b0)), x);
  CHECK(max_abs_diff(shifted.e_hat, res.e_hat) < 1e-10);
  CHECK(estimate_phi1(shifted) == doctest::Approx(estimate_phi1(res)).epsilon(1e-9));
}

TEST_CASE("estimate_phi1: forced examples") {
  ResidualEstimate ones{DenseMatrix(1, 3, {1.0, 1.0, 1.0}), 1.0};
  CHECK(estimate_phi1(ones) == doctest::Approx(1.0 - 1e-6));

  ResidualEstimate spike{DenseMatrix(1, 3, {1.0, 0.0, 0.0}), 1.0};
  CHECK(estimate_phi1(spike) == doctest::Approx(0.0));

  ResidualEstimate flat{DenseMatrix(2, 3, 0.0), 1.0};
  CHECK_THROWS_AS(estimate_phi1(flat), DegenerateResiduals);
}

TEST_CASE("estimate_phi1: Monte Carlo accuracy at n=200 q=100" * doctest::timeout(120)) {
  std::size_t n = 200, q = 100;
  DenseMatrix x = balanced_anova(n);
  DenseMatrix pi = projection_complement(x);
  auto model = CovarianceModel::ar1(0.5, 1.0, q);
  int hits = 0;
  const int reps = 500;
  for (int rep = 0; rep < reps; ++rep) {
    RngStream rng = RngStream::derive(20250801, 0, rep);
    DenseMatrix e = gen_noise(model, n, rng);
    double phi = estimate_phi1(extract_residuals_with_projector(e, pi));
    if (std::abs(phi - 0.5) < 0.05) ++hits;
  }
  CHECK(hits >= static_cast<int>(0.95 * reps));
}

TEST_CASE("estimate_arm: white noise gives near-zero coefficient") {
  std::size_t n = 200, q = 200;
  DenseMatrix x = balanced_anova(n);
  DenseMatrix pi = projection_complement(x);
  auto white = CovarianceModel::ar1(0.0, 1.0, q);
  int hits = 0;
  const int reps = 100;
  for (int rep = 0; rep < reps; ++rep) {
    RngStream rng = RngStream::derive(77, 1, rep);
    DenseMatrix e = gen_noise(white, n, rng);
    CovarianceModel fit = estimate_arm(extract_residuals_with_projector(e, pi), 1);
    if (std::abs(fit.phi[0]) < 0.05) ++hits;
  }
  CHECK(hits >= static_cast<int>(0.95 * reps));
}

TEST_CASE("estimate_arm: order 1 tracks estimate_phi1") {
  std::size_t n = 100, q = 60;
  DenseMatrix x = balanced_anova(n);
  DenseMatrix pi = projection_complement(x);
  auto model = CovarianceModel::ar1(0.5, 1.0, q);
  for (int rep = 0; rep < 5; ++rep) {
    RngStream rng = RngStream::derive(31, 2, rep);
    ResidualEstimate res = extract_residuals_with_projector(gen_noise(model, n, rng), pi);
    double direct = estimate_phi1(res);
    CovarianceModel fit = estimate_arm(res, 1);
    CHECK(std::abs(direct - fit.phi[0]) < 10.0 / std::sqrt(static_cast<double>(n * q)));
  }
}

TEST_CASE("yule_walker_solve: exact AR(2) autocovariances recover coefficients") {
  std::vector<double> phi{0.5, -0.25};
  std::vector<double> gamma = arm_autocovariances(phi, 1.0, 3);
  // hand oracle for the 2x2 system
  double det = gamma[0] * gamma[0] - gamma[1] * gamma[1];
  double phi1 = (gamma[0] * gamma[1] - gamma[1] * gamma[2]) / det;
  double phi2 = (gamma[0] * gamma[2] - gamma[1] * gamma[1]) / det;
  CHECK(phi1 == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(phi2 == doctest::Approx(-0.25).epsilon(1e-10));

  std::vector<double> solved = yule_walker_solve(gamma, 2);
  CHECK(std::abs(solved[0] - 0.5) < 1e-8);
  CHECK(std::abs(solved[1] + 0.25) < 1e-8);
}

TEST_CASE("ar_stationary: step-down criterion") {
  CHECK(ar_stationary(std::vector<double>{0.9}));
  CHECK_FALSE(ar_stationary(std::vector<double>{1.2}));
  CHECK(ar_stationary(std::vector<double>{0.5, -0.25}));
  CHECK_FALSE(ar_stationary(std::vector<double>{0.6, 0.6}));
  // margin pushes a borderline model out
  CHECK(ar_stationary(std::vector<double>{0.99}, 1.0));
  CHECK_FALSE(ar_stationary(std::vector<double>{0.9995}, 1.001));
}

TEST_CASE("materialize_sigma: AR(1) closed form") {
  auto white = CovarianceModel::ar1(0.0, 1.0, 2);
  SymmetricToeplitz s0 = materialize_sigma(white);
  CHECK(s0.first_row()[0] == doctest::Approx(1.0));
  CHECK(s0.first_row()[1] == doctest::Approx(0.0));

  auto m = CovarianceModel::ar1(0.5, 1.0, 3);
  SymmetricToeplitz s = materialize_sigma(m);
  CHECK(s.first_row()[0] == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
  CHECK(s.first_row()[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(s.first_row()[2] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("materialize_sigma: AR(1) against long-simulation sample moments") {
  auto model = CovarianceModel::ar1(0.5, 1.0, 4);
  SymmetricToeplitz s = materialize_sigma(model);
  RngStream rng(4242);
  DenseMatrix e = gen_noise(CovarianceModel::ar1(0.5, 1.0, 1000), 1000, rng);  // 1e6 draws
  double m0 = 0.0, m1 = 0.0;
  std::size_t c0 = 0, c1 = 0;
  for (std::size_t i = 0; i < e.rows(); ++i)
    for (std::size_t t = 0; t < e.cols(); ++t) {
      m0 += e(i, t) * e(i, t);
      ++c0;
      if (t + 1 < e.cols()) {
        m1 += e(i, t) * e(i, t + 1);
        ++c1;
      }
    }
  m0 /= c0;
  m1 /= c1;
  CHECK(std::abs(m0 - s.first_row()[0]) < 0.02 * s.first_row()[0]);
  CHECK(std::abs(m1 - s.first_row()[1]) < 0.02 * s.first_row()[0]);
}

TEST_CASE("materialize_sigma: AR(2) recursion against simulation") {
  std::vector<double> phi{0.5, -0.25};
  auto model = CovarianceModel::arm(phi, 1.0, 5);
  SymmetricToeplitz s = materialize_sigma(model);
  // recursion oracle: gamma_k = phi1 gamma_{k-1} + phi2 gamma_{k-2} for k > 2
  const auto& g = s.first_row();
  for (std::size_t k = 3; k < g.size(); ++k)
    CHECK(g[k] == doctest::Approx(phi[0] * g[k - 1] + phi[1] * g[k - 2]).epsilon(1e-12));

  RngStream rng(888);
  DenseMatrix e = gen_noise(CovarianceModel::arm(phi, 1.0, 1000), 1000, rng);
  double m0 = 0.0, m1 = 0.0, m2 = 0.0;
  std::size_t c = 0;
  for (std::size_t i = 0; i < e.rows(); ++i)
    for (std::size_t t = 0; t + 2 < e.cols(); ++t) {
      m0 += e(i, t) * e(i, t);
      m1 += e(i, t) * e(i, t + 1);
      m2 += e(i, t) * e(i, t + 2);
      ++c;
    }
  m0 /= c;
  m1 /= c;
  m2 /= c;
  CHECK(std::abs(m0 - g[0]) < 0.03 * g[0]);
  CHECK(std::abs(m1 - g[1]) < 0.03 * g[0]);
  CHECK(std::abs(m2 - g[2]) < 0.03 * g[0]);
}

TEST_CASE("build_precision: independent responses give identity") {
  PrecisionFactor f = build_precision(CovarianceModel::ar1(0.0, 1.0, 3));
  CHECK(max_abs_diff(f.sigma_inv, DenseMatrix::identity(3)) < 1e-14);
  CHECK(max_abs_diff(f.half, DenseMatrix::identity(3)) < 1e-14);
}

TEST_CASE("build_precision: AR(1) tridiagonal values") {
  PrecisionFactor f = build_precision(CovarianceModel::ar1(0.5, 1.0, 3));
  DenseMatrix want(3, 3, {1.0, -0.5, 0.0, -0.5, 1.25, -0.5, 0.0, -0.5, 1.0});
  CHECK(max_abs_diff(f.sigma_inv, want) < 1e-12);
  // oracle: dense inverse of the materialized covariance
  DenseMatrix sigma = materialize_sigma(CovarianceModel::ar1(0.5, 1.0, 3)).materialize();
  CHECK(max_abs_diff(f.sigma_inv, spd_inverse(sigma)) < 1e-10);
}

TEST_CASE("build_precision: whitening identity across model kinds") {
  std::vector<CovarianceModel> models;
  models.push_back(CovarianceModel::ar1(0.5, 1.0, 16));
  models.push_back(CovarianceModel::ar1(-0.8, 2.0, 9));
  models.push_back(CovarianceModel::ar1(0.95, 1.0, 64));
  models.push_back(CovarianceModel::arm({0.4, 0.2, 0.1}, 1.5, 20));
  models.push_back(CovarianceModel::explicit_toeplitz({2.0, 0.6, 0.2, 0.05}));
  for (const auto& m : models) {
    PrecisionFactor f = build_precision(m);
    DenseMatrix sigma = materialize_sigma(m).materialize();
    CHECK(max_abs_diff(matmul(f.half, transpose(f.half)), f.sigma_inv) < 1e-10);
    DenseMatrix w = matmul(matmul(transpose(f.half), sigma), f.half);
    CHECK(max_abs_diff(w, DenseMatrix::identity(m.dim)) < 1e-10);
  }
}

TEST_CASE("build_precision: tridiagonal matches dense inverse up to q=64") {
  for (std::size_t q : {2ul, 5ul, 17ul, 64ul}) {
    for (double phi : {0.3, 0.9}) {
      auto model = CovarianceModel::ar1(phi, 1.0, q);
      PrecisionFactor f = build_precision(model);
      DenseMatrix dense_inv = spd_inverse(materialize_sigma(model).materialize());
      CHECK(max_abs_diff(f.sigma_inv, dense_inv) < 1e-8);
    }
  }
}

TEST_CASE("covariance model validation") {
  CHECK_THROWS_AS(CovarianceModel::ar1(1.0, 1.0, 4), NonStationaryFit);
  CHECK_THROWS_AS(CovarianceModel::arm({0.6, 0.6}, 1.0, 8), NonStationaryFit);
  CHECK_THROWS_AS(CovarianceModel::ar1(0.5, 0.0, 4), Error);
}
