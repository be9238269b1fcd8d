#include "wlasso/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace wlasso {

namespace {

constexpr double kPhiClamp = 1e-6;

}  // namespace

CovarianceModel CovarianceModel::ar1(double phi1, double sigma2, std::size_t q) {
  if (!(std::abs(phi1) < 1.0)) throw NonStationaryFit("ar1: |phi1| must be < 1");
  if (!(sigma2 > 0.0)) throw Error("ar1: sigma2 must be positive");
  CovarianceModel m;
  m.kind = CovKind::Ar1;
  m.dim = q;
  m.phi = {phi1};
  m.sigma2 = sigma2;
  return m;
}

CovarianceModel CovarianceModel::arm(std::vector<double> phi, double sigma2, std::size_t q) {
  if (phi.empty()) throw Error("arm: needs at least one coefficient");
  if (!(sigma2 > 0.0)) throw Error("arm: sigma2 must be positive");
  if (!ar_stationary(phi)) throw NonStationaryFit("arm: coefficients not stationary");
  CovarianceModel m;
  m.kind = CovKind::Arm;
  m.dim = q;
  m.phi = std::move(phi);
  m.sigma2 = sigma2;
  return m;
}

CovarianceModel CovarianceModel::explicit_toeplitz(std::vector<double> first_row) {
  CovarianceModel m;
  m.kind = CovKind::ExplicitToeplitz;
  m.dim = first_row.size();
  m.toeplitz_row = std::move(first_row);
  if (m.toeplitz_row.empty() || !(m.toeplitz_row[0] > 0.0))
    throw NotPositiveDefinite("explicit_toeplitz: r0 must be positive");
  return m;
}

CovarianceModel CovarianceModel::unit_variance() const {
  CovarianceModel m = *this;
  if (kind != CovKind::ExplicitToeplitz) m.sigma2 = 1.0;
  return m;
}

PrecisionFactor PrecisionFactor::identity(std::size_t q) {
  return {DenseMatrix::identity(q), DenseMatrix::identity(q)};
}

ResidualEstimate extract_residuals(const DenseMatrix& y, const DenseMatrix& x) {
  if (y.rows() != x.rows()) throw DimensionMismatch("extract_residuals: row counts differ");
  if (x.cols() >= x.rows()) throw RankDeficient("extract_residuals: requires p < n");
  DenseMatrix pi = projection_complement(x);
  return extract_residuals_with_projector(y, pi);
}

ResidualEstimate extract_residuals_with_projector(const DenseMatrix& y,
                                                  const DenseMatrix& projector) {
  if (projector.rows() != y.rows())
    throw DimensionMismatch("extract_residuals: projector size mismatch");
  return {matmul(projector, y), projector.trace()};
}

double estimate_phi1(const ResidualEstimate& res) {
  const DenseMatrix& e = res.e_hat;
  std::size_t n = e.rows(), q = e.cols();
  if (q < 2) throw DegenerateResiduals("estimate_phi1: needs q >= 2");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t l = 1; l < q; ++l) num += e(i, l) * e(i, l - 1);
    for (std::size_t l = 0; l + 1 < q; ++l) den += e(i, l) * e(i, l);
  }
  if (den < 1e-14 * static_cast<double>(n) * static_cast<double>(q))
    throw DegenerateResiduals("estimate_phi1: residual energy too small");
  double phi = num / den;
  return std::clamp(phi, -1.0 + kPhiClamp, 1.0 - kPhiClamp);
}

std::vector<double> yule_walker_solve(std::span<const double> autocov, std::size_t m) {
  if (autocov.size() < m + 1) throw DimensionMismatch("yule_walker: needs gamma_0..gamma_m");
  DenseMatrix r(m, m);
  std::vector<double> rhs(m);
  for (std::size_t i = 0; i < m; ++i) {
    rhs[i] = autocov[i + 1];
    for (std::size_t j = 0; j < m; ++j) r(i, j) = autocov[i > j ? i - j : j - i];
  }
  return solve_linear(std::move(r), std::move(rhs));
}

bool ar_stationary(std::span<const double> phi, double radius) {
  // rescale so that "roots outside radius" becomes "roots outside 1"
  std::vector<double> a(phi.begin(), phi.end());
  if (radius != 1.0) {
    double f = radius;
    for (std::size_t j = 0; j < a.size(); ++j) {
      a[j] *= f;
      f *= radius;
    }
  }
  // step-down recursion: stationary iff every reflection coefficient < 1
  for (std::size_t m = a.size(); m >= 1; --m) {
    double k = a[m - 1];
    if (!(std::abs(k) < 1.0)) return false;
    if (m == 1) break;
    std::vector<double> prev(m - 1);
    double denom = 1.0 - k * k;
    for (std::size_t j = 0; j + 1 < m; ++j) prev[j] = (a[j] + k * a[m - 2 - j]) / denom;
    a = std::move(prev);
  }
  return true;
}

CovarianceModel estimate_arm(const ResidualEstimate& res, std::size_t m) {
  const DenseMatrix& e = res.e_hat;
  std::size_t n = e.rows(), q = e.cols();
  if (m < 1) throw Error("estimate_arm: order must be >= 1");
  if (q <= 2 * m) throw DegenerateResiduals("estimate_arm: needs q > 2m");

  std::vector<double> phi_sum(m, 0.0);
  std::vector<double> gamma_sum(m + 1, 0.0);
  std::vector<double> gamma(m + 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t h = 0; h <= m; ++h) {
      double acc = 0.0;
      for (std::size_t l = 0; l + h < q; ++l) acc += e(i, l) * e(i, l + h);
      gamma[h] = acc / static_cast<double>(q);
      gamma_sum[h] += gamma[h];
    }
    if (gamma[0] < 1e-14) throw DegenerateResiduals("estimate_arm: flat residual row");
    std::vector<double> phi_i;
    try {
      phi_i = yule_walker_solve(gamma, m);
    } catch (const SingularSystem&) {
      throw DegenerateResiduals("estimate_arm: singular Yule-Walker system");
    }
    for (std::size_t j = 0; j < m; ++j) phi_sum[j] += phi_i[j];
  }

  std::vector<double> phi(m);
  for (std::size_t j = 0; j < m; ++j) phi[j] = phi_sum[j] / static_cast<double>(n);

  // averaging stationary fits need not be stationary; shrink uniformly until
  // all roots clear radius 1.001
  const double margin = 1.001;
  if (!ar_stationary(phi, margin)) {
    double lo = 0.0, hi = 1.0;  // t=0 is stationary, t=1 is not
    while (hi - lo > 1e-6) {
      double t = 0.5 * (lo + hi);
      std::vector<double> scaled(phi);
      for (double& c : scaled) c *= t;
      if (ar_stationary(scaled, margin))
        lo = t;
      else
        hi = t;
    }
    for (double& c : phi) c *= lo;
    if (!ar_stationary(phi, 1.0))
      throw NonStationaryFit("estimate_arm: stationarity projection failed");
  }

  // innovation variance from pooled autocovariances, for diagnostics
  double g0 = gamma_sum[0] / static_cast<double>(n);
  double s2 = g0;
  for (std::size_t j = 0; j < m; ++j) s2 -= phi[j] * gamma_sum[j + 1] / static_cast<double>(n);
  if (!(s2 > 0.0)) s2 = 1e-12;

  return CovarianceModel::arm(std::move(phi), s2, q);
}

SymmetricToeplitz materialize_sigma(const CovarianceModel& model) {
  switch (model.kind) {
    case CovKind::Ar1: {
      double phi = model.phi[0];
      double g0 = model.sigma2 / (1.0 - phi * phi);
      std::vector<double> row(model.dim);
      double v = g0;
      for (std::size_t h = 0; h < model.dim; ++h) {
        row[h] = v;
        v *= phi;
      }
      return SymmetricToeplitz(std::move(row));
    }
    case CovKind::Arm:
      return SymmetricToeplitz(arm_autocovariances(model.phi, model.sigma2, model.dim));
    case CovKind::ExplicitToeplitz:
      return SymmetricToeplitz(model.toeplitz_row);
  }
  throw Error("materialize_sigma: unknown kind");
}

std::vector<double> arm_autocovariances(std::span<const double> phi, double sigma2,
                                        std::size_t count) {
  std::size_t m = phi.size();
  // solve for gamma_0..gamma_m from the Yule-Walker moment equations
  // gamma_k - sum_j phi_j gamma_{|k-j|} = sigma2 * [k == 0]
  DenseMatrix a(m + 1, m + 1);
  std::vector<double> b(m + 1, 0.0);
  b[0] = sigma2;
  for (std::size_t k = 0; k <= m; ++k) {
    a(k, k) += 1.0;
    for (std::size_t j = 1; j <= m; ++j) {
      std::size_t lag = k >= j ? k - j : j - k;
      a(k, lag) -= phi[j - 1];
    }
  }
  std::vector<double> head;
  try {
    head = solve_linear(std::move(a), std::move(b));
  } catch (const SingularSystem&) {
    throw NonStationaryFit("arm_autocovariances: moment system singular");
  }
  std::vector<double> gamma(std::max<std::size_t>(count, m + 1));
  for (std::size_t k = 0; k <= m && k < gamma.size(); ++k) gamma[k] = head[k];
  for (std::size_t k = m + 1; k < gamma.size(); ++k) {
    double acc = 0.0;
    for (std::size_t j = 1; j <= m; ++j) acc += phi[j - 1] * gamma[k - j];
    gamma[k] = acc;
  }
  gamma.resize(count);
  return gamma;
}

PrecisionFactor build_precision(const CovarianceModel& model) {
  std::size_t q = model.dim;
  if (q == 0) throw DimensionMismatch("build_precision: empty model");
  DenseMatrix sigma_inv;
  if (model.kind == CovKind::Ar1) {
    // closed-form tridiagonal inverse of the AR(1) covariance
    double phi = model.phi[0];
    sigma_inv = DenseMatrix(q, q);
    double s = 1.0 / model.sigma2;
    for (std::size_t i = 0; i < q; ++i) {
      bool interior = (i > 0 && i + 1 < q);
      sigma_inv(i, i) = s * (interior ? 1.0 + phi * phi : 1.0);
      if (i + 1 < q) {
        sigma_inv(i, i + 1) = -s * phi;
        sigma_inv(i + 1, i) = -s * phi;
      }
    }
    if (q == 1) sigma_inv(0, 0) = s * (1.0 - phi * phi);
  } else {
    DenseMatrix sigma = materialize_sigma(model).materialize();
    sigma_inv = spd_inverse(sigma);
  }
  DenseMatrix half = cholesky_lower(sigma_inv);
  return {std::move(sigma_inv), std::move(half)};
}

}  // namespace wlasso
