#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "wlasso/linalg.hpp"

namespace wlasso {

enum class CovKind { Ar1, Arm, ExplicitToeplitz };

/// Response-covariance model: AR(1), AR(m) or an explicit symmetric
/// Toeplitz first row. AR models must be stationary at construction.
struct CovarianceModel {
  CovKind kind = CovKind::Ar1;
  std::size_t dim = 0;            // q
  std::vector<double> phi;        // AR coefficients, empty for explicit
  double sigma2 = 1.0;            // innovation variance
  std::vector<double> toeplitz_row;  // explicit case only

  static CovarianceModel ar1(double phi1, double sigma2, std::size_t q);
  static CovarianceModel arm(std::vector<double> phi, double sigma2, std::size_t q);
  static CovarianceModel explicit_toeplitz(std::vector<double> first_row);
  static CovarianceModel independent(std::size_t q) { return ar1(0.0, 1.0, q); }

  std::size_t order() const { return phi.size(); }
  /// Same coefficients with unit innovation variance (whitening convention).
  CovarianceModel unit_variance() const;
};

/// Precision matrix with its square-root factor, convention
/// sigma_inv = half * half' with half lower-triangular.
struct PrecisionFactor {
  DenseMatrix sigma_inv;  // q x q
  DenseMatrix half;       // q x q, lower-triangular

  std::size_t dim() const { return sigma_inv.rows(); }
  static PrecisionFactor identity(std::size_t q);
};

/// Residual matrix E_hat = Pi * Y with columns orthogonal to col(X).
struct ResidualEstimate {
  DenseMatrix e_hat;       // n x q
  double projector_trace;  // n - p
};

ResidualEstimate extract_residuals(const DenseMatrix& y, const DenseMatrix& x);
/// Variant reusing a precomputed complement projector (same contract).
ResidualEstimate extract_residuals_with_projector(const DenseMatrix& y,
                                                  const DenseMatrix& projector);

/// Lag-1 AR coefficient estimate: ratio of pooled lag-1 cross-products to
/// pooled squared residuals, clamped to [-1+1e-6, 1-1e-6].
double estimate_phi1(const ResidualEstimate& res);

/// AR(m) fit: per-row Yule-Walker on biased sample autocovariances
/// (denominator q), coefficients averaged over rows, then projected to
/// stationarity if the averaged polynomial has a root inside radius 1.001.
CovarianceModel estimate_arm(const ResidualEstimate& res, std::size_t m);

PrecisionFactor build_precision(const CovarianceModel& model);
SymmetricToeplitz materialize_sigma(const CovarianceModel& model);

/// Theoretical autocovariances gamma_0..gamma_{count-1} of a stationary
/// AR(phi) process with innovation variance sigma2.
std::vector<double> arm_autocovariances(std::span<const double> phi, double sigma2,
                                        std::size_t count);

/// Solve the order-m Yule-Walker system given gamma_0..gamma_m.
std::vector<double> yule_walker_solve(std::span<const double> autocov, std::size_t m);

/// All roots of 1 - phi_1 z - ... - phi_m z^m outside |z| > radius,
/// decided by the step-down (reverse Levinson) recursion.
bool ar_stationary(std::span<const double> phi, double radius = 1.0);

}  // namespace wlasso
