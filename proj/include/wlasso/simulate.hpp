#pragma once

#include <atomic>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wlasso/covariance.hpp"
#include "wlasso/lasso.hpp"
#include "wlasso/rng.hpp"
#include "wlasso/whitening.hpp"

namespace wlasso {

enum class DesignKind { BalancedAnova2, UnbalancedAnova2, CorrelatedRegression };

struct DesignSpec {
  DesignKind kind = DesignKind::BalancedAnova2;
  double r = 0.5;      // group-1 fraction, unbalanced ANOVA
  std::size_t p = 9;   // predictors, correlated regression
  double rho = 0.0;    // feature correlation, correlated regression

  std::size_t predictors() const {
    return kind == DesignKind::CorrelatedRegression ? p : 2;
  }
};

enum class Placement { SpacedInterior, UniformRandom };

/// Sparse signal scheme: |J| = floor(q^c1) entries of magnitude exactly
/// m3 * q^{-c2}, signs uniform, placement per scheme.
struct SignalSpec {
  double c1 = 0.125;
  double c2 = 0.125;
  double m3 = 1.0;
  Placement placement = Placement::SpacedInterior;
  std::optional<std::size_t> support_size_override;

  static SignalSpec from_k(double k);

  std::size_t support_size(std::size_t q) const;
  double min_magnitude(std::size_t q) const;
  double k_value() const { return 1.0 / (2.0 * (c1 + c2)); }
};

enum class EstimatorKind { Oracle, Whitened, Raw };

const char* estimator_name(EstimatorKind e);

struct NoiseSpec {
  struct Variant {
    std::vector<double> phi;  // size 1 -> AR(1), size m -> AR(m)
  };
  std::vector<Variant> variants = {{{0.5}}};
  double sigma2 = 1.0;
};

struct DesignGrid {
  DesignKind kind = DesignKind::BalancedAnova2;
  std::vector<double> r = {0.5};    // unbalanced only
  std::size_t p = 9;                // regression only
  std::vector<double> rho = {0.0};  // regression only

  std::vector<DesignSpec> variants() const;
};

struct ExperimentConfig {
  std::vector<std::size_t> n_values;
  std::vector<std::size_t> q_values;
  NoiseSpec noise;
  DesignGrid design;
  SignalSpec signal;
  std::vector<EstimatorKind> estimators = {EstimatorKind::Oracle, EstimatorKind::Whitened,
                                           EstimatorKind::Raw};
  std::size_t replicates = 1000;
  std::uint64_t seed = 0;
  LassoConfig lasso;

  void validate() const;
};

struct ReplicateRow {
  std::size_t cell_id = 0;
  EstimatorKind estimator = EstimatorKind::Oracle;
  std::size_t n = 0, q = 0;
  double k_value = 0.0;
  std::string noise_label;
  double phi1 = std::numeric_limits<double>::quiet_NaN();       // AR(1) parameter
  std::size_t arm_order = 0;                                    // 0 unless AR(m)
  double design_r = std::numeric_limits<double>::quiet_NaN();   // unbalanced only
  double design_rho = std::numeric_limits<double>::quiet_NaN(); // regression only
  std::size_t replicate = 0;
  int recovered = 0;
  bool converged = true;
  std::optional<double> best_lambda;
  std::optional<double> phi1_hat;
};

struct CellSummary {
  std::size_t cell_id = 0;
  EstimatorKind estimator = EstimatorKind::Oracle;
  std::size_t n = 0, q = 0;
  double k_value = 0.0;
  std::string noise_label;
  double phi1 = std::numeric_limits<double>::quiet_NaN();
  std::size_t arm_order = 0;
  double design_r = std::numeric_limits<double>::quiet_NaN();
  double design_rho = std::numeric_limits<double>::quiet_NaN();
  std::size_t replicates = 0;
  double frequency = 0.0;
};

struct RecoveryReport {
  std::vector<ReplicateRow> rows;
  bool complete = true;

  std::vector<CellSummary> aggregate() const;
};

DenseMatrix gen_design(const DesignSpec& spec, std::size_t n, RngStream& rng);

std::pair<std::vector<double>, SupportSpec> gen_signal(const SignalSpec& spec,
                                                       const ProblemShape& shape,
                                                       RngStream& rng);

/// Rows are independent AR paths started exactly from the stationary law
/// (Cholesky of the leading autocovariance block).
DenseMatrix gen_noise(const CovarianceModel& model, std::size_t n, RngStream& rng);

/// threads = 0: WLASSO_THREADS env var, then hardware concurrency.
/// interrupt, when set, stops scheduling new replicates; finished rows are
/// kept and the report is marked incomplete.
RecoveryReport run_experiment(const ExperimentConfig& cfg, std::size_t threads = 0,
                              const std::atomic<bool>* interrupt = nullptr);

std::size_t resolve_threads(std::size_t requested);

}  // namespace wlasso
