#include "wlasso/lasso.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <string>

namespace wlasso {

void LassoConfig::validate() const {
  if (n_lambda == 0) throw Error("lasso config: n_lambda must be >= 1");
  if (!(lambda_min_ratio > 0.0 && lambda_min_ratio < 1.0))
    throw Error("lasso config: lambda_min_ratio must be in (0,1)");
  if (max_sweeps == 0) throw Error("lasso config: max_sweeps must be >= 1");
}

std::vector<double> LassoConfig::grid(double lam_max) const {
  validate();
  std::vector<double> g(n_lambda);
  if (!(lam_max > 0.0)) return g;  // degenerate problem, all-zero grid
  if (n_lambda == 1) {
    g[0] = lam_max;
    return g;
  }
  double log_max = std::log(lam_max);
  double log_min = std::log(lam_max * lambda_min_ratio);
  for (std::size_t i = 0; i < n_lambda; ++i) {
    double f = static_cast<double>(i) / static_cast<double>(n_lambda - 1);
    g[i] = std::exp(log_max + f * (log_min - log_max));
  }
  g[0] = lam_max;  // exact endpoints
  g[n_lambda - 1] = lam_max * lambda_min_ratio;
  return g;
}

SupportSpec SupportSpec::from_beta(std::span<const double> beta) {
  SupportSpec s;
  for (std::size_t j = 0; j < beta.size(); ++j) {
    if (beta[j] != 0.0) {
      s.indices.push_back(j);
      s.signs.push_back(beta[j] > 0.0 ? 1 : -1);
    }
  }
  return s;
}

void SupportSpec::validate(std::size_t pq) const {
  if (indices.size() != signs.size()) throw Error("support: indices/signs length mismatch");
  for (std::size_t a = 0; a < indices.size(); ++a) {
    if (indices[a] >= pq) throw Error("support: index out of range");
    if (a > 0 && indices[a] <= indices[a - 1]) throw Error("support: indices not sorted/distinct");
    if (signs[a] != 1 && signs[a] != -1) throw Error("support: signs must be +1/-1");
  }
}

std::vector<int> SupportSpec::dense_signs(std::size_t pq) const {
  std::vector<int> s(pq, 0);
  for (std::size_t a = 0; a < indices.size(); ++a) s[indices[a]] = signs[a];
  return s;
}

namespace {

inline double soft_threshold(double z, double a) {
  if (z > a) return z - a;
  if (z < -a) return z + a;
  return 0.0;  // ties activate nothing
}

/// Coordinate-descent state over the Kronecker Gram. Maintains
/// U = gram_right * B so that (G beta)_{r,k} = (U * gram_left)(r,k); a single
/// coordinate update touches one column of U.
class CdState {
 public:
  CdState(const VectorizedProblem& prob, std::span<const double> init)
      : prob_(prob),
        p_(prob.shape.p),
        q_(prob.shape.q),
        beta_(init.begin(), init.end()),
        u_(p_ * q_, 0.0) {
    if (beta_.empty()) beta_.assign(p_ * q_, 0.0);
    if (beta_.size() != p_ * q_) throw DimensionMismatch("solve_lasso: init length != pq");
    for (std::size_t k = 0; k < q_; ++k)
      for (std::size_t r = 0; r < p_; ++r)
        if (beta_[k * p_ + r] != 0.0) bump(r, k, beta_[k * p_ + r]);
  }

  // (G beta) at coordinate (r, k)
  double gram_beta(std::size_t r, std::size_t k) const {
    const double* gl = prob_.gram_left.data() + k * q_;  // column k == row k (symmetric)
    const double* ur = u_.data() + r * q_;
    double acc = 0.0;
    for (std::size_t kk = 0; kk < q_; ++kk) acc += ur[kk] * gl[kk];
    return acc;
  }

  double sweep(double lambda, std::span<const std::size_t> coords) {
    double max_change = 0.0;
    for (std::size_t j : coords) {
      std::size_t r = j % p_, k = j / p_;
      double gjj = prob_.gram_left(k, k) * prob_.gram_right(r, r);
      double bj = beta_[j];
      double next;
      if (gjj > 0.0) {
        double c = prob_.xty[j] - gram_beta(r, k) + gjj * bj;
        next = soft_threshold(c, 0.5 * lambda) / gjj;
      } else {
        next = 0.0;  // degenerate coordinate stays out
      }
      double delta = next - bj;
      if (delta != 0.0) {
        beta_[j] = next;
        bump(r, k, delta);
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    return max_change;
  }

  double sweep_all(double lambda) {
    if (all_coords_.empty()) {
      all_coords_.resize(p_ * q_);
      for (std::size_t j = 0; j < all_coords_.size(); ++j) all_coords_[j] = j;
    }
    return sweep(lambda, all_coords_);
  }

  std::vector<std::size_t> nonzero_coords() const {
    std::vector<std::size_t> a;
    for (std::size_t j = 0; j < beta_.size(); ++j)
      if (beta_[j] != 0.0) a.push_back(j);
    return a;
  }

  double kkt(double lambda) const {
    double worst = 0.0;
    for (std::size_t j = 0; j < beta_.size(); ++j) {
      std::size_t r = j % p_, k = j / p_;
      double g = 2.0 * (prob_.xty[j] - gram_beta(r, k));
      double viol;
      if (beta_[j] != 0.0)
        viol = std::abs(g - lambda * (beta_[j] > 0.0 ? 1.0 : -1.0));
      else
        viol = std::max(0.0, std::abs(g) - lambda);
      worst = std::max(worst, viol);
    }
    return worst;
  }

  double objective(double lambda) const {
    double quad = prob_.y_sqnorm;
    for (std::size_t j = 0; j < beta_.size(); ++j) {
      std::size_t r = j % p_, k = j / p_;
      quad += beta_[j] * (gram_beta(r, k) - 2.0 * prob_.xty[j]);
    }
    double l1 = 0.0;
    for (double b : beta_) l1 += std::abs(b);
    return quad + lambda * l1;
  }

  const std::vector<double>& beta() const { return beta_; }
  std::vector<double> take_beta() { return std::move(beta_); }

 private:
  void bump(std::size_t r, std::size_t k, double delta) {
    // B(r,k) += delta  =>  U(:,k) += delta * gram_right(:,r)
    const double* gr = prob_.gram_right.data() + r * p_;  // row r == column r
    for (std::size_t rr = 0; rr < p_; ++rr) u_[rr * q_ + k] += delta * gr[rr];
  }

  const VectorizedProblem& prob_;
  std::size_t p_, q_;
  std::vector<double> beta_;
  std::vector<double> u_;  // p x q row-major: gram_right * B
  std::vector<std::size_t> all_coords_;
};

struct SolveResult {
  std::vector<double> beta;
  std::size_t sweeps = 0;
  double kkt = 0.0;
};

SolveResult solve_detail(const VectorizedProblem& prob, double lambda,
                         std::span<const double> init, const LassoConfig& cfg) {
  if (lambda < 0.0) throw Error("solve_lasso: lambda must be >= 0");
  cfg.validate();
  double lam_max = lambda_max(prob);
  double tol = cfg.tol > 0.0 ? cfg.tol : 0.5e-9 * lam_max;
  double tol_kkt = 1e-6 * lam_max;
  bool check_objective = cfg.verify_objective;
#ifndef NDEBUG
  check_objective = true;
#endif

  CdState state(prob, init);
  double prev_obj = check_objective ? state.objective(lambda) : 0.0;
  std::size_t sweeps = 0;

  auto run_sweep = [&](std::span<const std::size_t> coords, bool full) {
    double change = full ? state.sweep_all(lambda) : state.sweep(lambda, coords);
    ++sweeps;
    if (check_objective) {
      double obj = state.objective(lambda);
      double slack = 1e-9 * (std::abs(prev_obj) + 1.0);
      if (obj > prev_obj + slack)
        throw Error("solve_lasso: objective increased across a sweep");
      prev_obj = obj;
    }
    return change;
  };

  while (sweeps < cfg.max_sweeps) {
    double full_change = run_sweep({}, true);
    if (full_change <= tol) {
      double res = state.kkt(lambda);
      if (res <= tol_kkt) return {state.take_beta(), sweeps, res};
      continue;  // rare: KKT slack not met yet, keep sweeping
    }
    if (sweeps >= 2) {
      std::vector<std::size_t> active = state.nonzero_coords();
      while (sweeps < cfg.max_sweeps) {
        double change = run_sweep(active, false);
        if (change <= tol) break;
      }
    }
  }
  throw NotConverged("solve_lasso: exceeded " + std::to_string(cfg.max_sweeps) + " sweeps",
                     state.take_beta(), state.kkt(lambda));
}

}  // namespace

std::vector<double> solve_lasso(const VectorizedProblem& prob, double lambda,
                                std::span<const double> init, const LassoConfig& cfg) {
  return solve_detail(prob, lambda, init, cfg).beta;
}

LassoPath solve_path(const VectorizedProblem& prob, const LassoConfig& cfg) {
  std::vector<double> grid = cfg.grid(lambda_max(prob));
  LassoPath path;
  path.lambdas.reserve(grid.size());
  std::vector<double> warm(prob.shape.p * prob.shape.q, 0.0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    SolveResult res;
    try {
      res = solve_detail(prob, grid[i], warm, cfg);
    } catch (NotConverged& e) {
      e.lambda_index = i;
      throw;
    }
    warm = res.beta;
    path.lambdas.push_back(grid[i]);
    path.betas.push_back(std::move(res.beta));
    path.sweeps_used.push_back(res.sweeps);
    path.kkt_residuals.push_back(res.kkt);
  }
  return path;
}

RecoveryOutcome sign_recovered(const LassoPath& path, const SupportSpec& truth) {
  if (path.size() == 0) throw Error("sign_recovered: empty path");
  std::size_t pq = path.betas[0].size();
  truth.validate(pq);
  std::vector<int> want = truth.dense_signs(pq);
  for (std::size_t i = 0; i < path.size(); ++i) {
    const std::vector<double>& b = path.betas[i];
    bool match = true;
    for (std::size_t j = 0; j < pq; ++j) {
      int got = b[j] > 0.0 ? 1 : (b[j] < 0.0 ? -1 : 0);
      if (got != want[j]) {
        match = false;
        break;
      }
    }
    if (match) return {true, path.lambdas[i]};  // grid is descending
  }
  return {false, std::nullopt};
}

std::vector<double> gram_gradient(const VectorizedProblem& prob, std::span<const double> beta) {
  std::size_t p = prob.shape.p, q = prob.shape.q;
  if (beta.size() != p * q) throw DimensionMismatch("gram_gradient: beta length != pq");
  DenseMatrix b = unvec_colmajor(beta, p, q);
  DenseMatrix v = matmul(matmul(prob.gram_right, b), prob.gram_left);  // p x q
  std::vector<double> g(p * q);
  for (std::size_t k = 0; k < q; ++k)
    for (std::size_t r = 0; r < p; ++r)
      g[k * p + r] = 2.0 * (prob.xty[k * p + r] - v(r, k));
  return g;
}

double kkt_residual(const VectorizedProblem& prob, std::span<const double> beta, double lambda) {
  std::vector<double> g = gram_gradient(prob, beta);
  double worst = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) {
    double viol;
    if (beta[j] != 0.0)
      viol = std::abs(g[j] - lambda * (beta[j] > 0.0 ? 1.0 : -1.0));
    else
      viol = std::max(0.0, std::abs(g[j]) - lambda);
    worst = std::max(worst, viol);
  }
  return worst;
}

}  // namespace wlasso
