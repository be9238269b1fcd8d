#include "wlasso/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <thread>

namespace wlasso {

SignalSpec SignalSpec::from_k(double k) {
  if (!(k > 0.0)) throw Error("signal: k must be positive");
  SignalSpec s;
  s.c1 = s.c2 = 1.0 / (4.0 * k);
  return s;
}

std::size_t SignalSpec::support_size(std::size_t q) const {
  if (support_size_override) return *support_size_override;
  return static_cast<std::size_t>(std::floor(std::pow(static_cast<double>(q), c1)));
}

double SignalSpec::min_magnitude(std::size_t q) const {
  return m3 * std::pow(static_cast<double>(q), -c2);
}

const char* estimator_name(EstimatorKind e) {
  switch (e) {
    case EstimatorKind::Oracle: return "oracle";
    case EstimatorKind::Whitened: return "whitened";
    case EstimatorKind::Raw: return "raw";
  }
  return "?";
}

std::vector<DesignSpec> DesignGrid::variants() const {
  std::vector<DesignSpec> out;
  switch (kind) {
    case DesignKind::BalancedAnova2:
      out.push_back({kind, 0.5, 2, 0.0});
      break;
    case DesignKind::UnbalancedAnova2:
      for (double rv : r) out.push_back({kind, rv, 2, 0.0});
      break;
    case DesignKind::CorrelatedRegression:
      for (double rhov : rho) out.push_back({kind, 0.5, p, rhov});
      break;
  }
  if (out.empty()) throw Error("design: no variants");
  return out;
}

void ExperimentConfig::validate() const {
  if (n_values.empty() || q_values.empty()) throw Error("config: n and q grids must be nonempty");
  if (replicates == 0) throw Error("config: replicates must be >= 1");
  if (estimators.empty()) throw Error("config: estimators must be nonempty");
  if (noise.variants.empty()) throw Error("config: noise variants must be nonempty");
  if (!(noise.sigma2 > 0.0)) throw Error("config: sigma2 must be positive");
  if (!(signal.c1 > 0.0 && signal.c2 > 0.0)) throw Error("config: c1, c2 must be positive");
  if (!(signal.m3 > 0.0)) throw Error("config: m3 must be positive");
  lasso.validate();
  for (const auto& v : noise.variants) {
    if (v.phi.empty()) throw Error("config: empty AR coefficient list");
    if (!ar_stationary(v.phi)) throw NonStationaryFit("config: noise model not stationary");
  }
  design.variants();  // throws on bad grids
  if (design.kind == DesignKind::UnbalancedAnova2)
    for (double rv : design.r)
      if (!(rv > 0.0 && rv < 1.0)) throw Error("config: r must be in (0,1)");
  if (design.kind == DesignKind::CorrelatedRegression)
    for (double rhov : design.rho)
      if (!(rhov >= 0.0 && rhov < 1.0)) throw Error("config: rho must be in [0,1)");

  bool whitened = false;
  for (EstimatorKind e : estimators) whitened = whitened || e == EstimatorKind::Whitened;
  if (whitened) {
    std::size_t p = design.kind == DesignKind::CorrelatedRegression ? design.p : 2;
    for (std::size_t n : n_values)
      if (n <= p) throw Error("config: whitened estimator needs n > p for residual fitting");
    for (const auto& v : noise.variants)
      if (v.phi.size() > 1)
        for (std::size_t q : q_values)
          if (q <= 2 * v.phi.size())
            throw Error("config: AR(m) estimation needs q > 2m");
  }
}

DenseMatrix gen_design(const DesignSpec& spec, std::size_t n, RngStream& rng) {
  switch (spec.kind) {
    case DesignKind::BalancedAnova2: {
      if (n < 2 || n % 2 != 0) throw IncompatibleSize("balanced ANOVA needs even n >= 2");
      DenseMatrix x(n, 2);
      for (std::size_t i = 0; i < n; ++i) x(i, i < n / 2 ? 0 : 1) = 1.0;
      return x;
    }
    case DesignKind::UnbalancedAnova2: {
      if (!(spec.r > 0.0 && spec.r < 1.0)) throw IncompatibleSize("unbalanced ANOVA: r in (0,1)");
      auto n1 = static_cast<std::size_t>(std::ceil(spec.r * static_cast<double>(n)));
      if (n1 == 0 || n1 >= n) throw IncompatibleSize("unbalanced ANOVA: empty group");
      DenseMatrix x(n, 2);
      for (std::size_t i = 0; i < n; ++i) x(i, i < n1 ? 0 : 1) = 1.0;
      return x;
    }
    case DesignKind::CorrelatedRegression: {
      if (!(spec.rho >= 0.0 && spec.rho < 1.0)) throw IncompatibleSize("regression: rho in [0,1)");
      std::size_t p = spec.p;
      if (p == 0) throw IncompatibleSize("regression: p must be >= 1");
      DenseMatrix sigma_x(p, p, spec.rho);
      for (std::size_t i = 0; i < p; ++i) sigma_x(i, i) = 1.0;
      DenseMatrix l = cholesky_lower(sigma_x);
      DenseMatrix x(n, p);
      std::vector<double> z(p);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p; ++j) z[j] = rng.normal();
        for (std::size_t j = 0; j < p; ++j) {
          double acc = 0.0;
          for (std::size_t k = 0; k <= j; ++k) acc += l(j, k) * z[k];
          x(i, j) = acc;
        }
      }
      return x;
    }
  }
  throw Error("gen_design: unknown kind");
}

std::pair<std::vector<double>, SupportSpec> gen_signal(const SignalSpec& spec,
                                                       const ProblemShape& shape,
                                                       RngStream& rng) {
  std::size_t p = shape.p, q = shape.q, pq = p * q;
  std::size_t s = spec.support_size(q);
  if (s > pq) throw PlacementInfeasible("gen_signal: support larger than pq");
  std::vector<double> beta(pq, 0.0);
  if (s == 0) return {std::move(beta), SupportSpec{}};

  std::vector<bool> taken(pq, false);
  std::vector<std::size_t> chosen;
  chosen.reserve(s);

  if (spec.placement == Placement::UniformRandom) {
    while (chosen.size() < s) {
      std::size_t j = rng.uniform_index(pq);
      if (!taken[j]) {
        taken[j] = true;
        chosen.push_back(j);
      }
    }
  } else {
    // interior range (1-based j > p and j < pq-p), no pair exactly 2p apart
    if (pq < 2 * p + 2) throw PlacementInfeasible("gen_signal: no interior coordinates");
    std::size_t lo = p, hi = pq - p - 2;  // inclusive 0-based bounds
    std::size_t span = hi - lo + 1;
    // capacity: chains along step 2p admit every other element
    std::size_t cap = 0;
    for (std::size_t start = lo; start < lo + std::min<std::size_t>(2 * p, span); ++start) {
      std::size_t len = (hi - start) / (2 * p) + 1;
      cap += (len + 1) / 2;
    }
    if (s > cap) throw PlacementInfeasible("gen_signal: support too large for placement rule");
    std::size_t attempts = 0, max_attempts = 10000 + 1000 * s;
    while (chosen.size() < s) {
      if (++attempts > max_attempts)
        throw PlacementInfeasible("gen_signal: placement sampling stalled");
      std::size_t j = lo + rng.uniform_index(span);
      if (taken[j]) continue;
      if (j >= 2 * p && taken[j - 2 * p]) continue;
      if (j + 2 * p < pq && taken[j + 2 * p]) continue;
      taken[j] = true;
      chosen.push_back(j);
    }
  }

  std::sort(chosen.begin(), chosen.end());
  double mag = spec.min_magnitude(q);
  SupportSpec truth;
  truth.indices = chosen;
  truth.signs.reserve(s);
  for (std::size_t j : chosen) {
    int sg = rng.sign();
    truth.signs.push_back(sg);
    beta[j] = sg * mag;
  }
  return {std::move(beta), std::move(truth)};
}

DenseMatrix gen_noise(const CovarianceModel& model, std::size_t n, RngStream& rng) {
  std::size_t q = model.dim;
  DenseMatrix e(n, q);
  if (model.kind == CovKind::ExplicitToeplitz) {
    DenseMatrix l = cholesky_lower(materialize_sigma(model).materialize());
    std::vector<double> z(q);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t t = 0; t < q; ++t) z[t] = rng.normal();
      for (std::size_t t = 0; t < q; ++t) {
        double acc = 0.0;
        for (std::size_t k = 0; k <= t; ++k) acc += l(t, k) * z[k];
        e(i, t) = acc;
      }
    }
    return e;
  }

  std::size_t m = std::min(model.order(), q);
  std::vector<double> gamma = arm_autocovariances(model.phi, model.sigma2, std::max<std::size_t>(m, 1));
  DenseMatrix block(m, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) block(i, j) = gamma[i > j ? i - j : j - i];
  DenseMatrix l = m > 0 ? cholesky_lower(block) : DenseMatrix();
  double sd = std::sqrt(model.sigma2);

  std::vector<double> z(m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < m; ++t) z[t] = rng.normal();
    for (std::size_t t = 0; t < m; ++t) {
      double acc = 0.0;
      for (std::size_t k = 0; k <= t; ++k) acc += l(t, k) * z[k];
      e(i, t) = acc;
    }
    for (std::size_t t = m; t < q; ++t) {
      double acc = sd * rng.normal();
      for (std::size_t j = 0; j < model.order(); ++j) acc += model.phi[j] * e(i, t - 1 - j);
      e(i, t) = acc;
    }
  }
  return e;
}

std::size_t resolve_threads(std::size_t requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("WLASSO_THREADS")) {
    char* end = nullptr;
    unsigned long v = std::strtoul(env, &end, 10);
    if (end && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? hc : 1;
}

namespace {

struct Cell {
  std::size_t cell_id = 0;
  std::size_t n = 0, q = 0;
  CovarianceModel noise;
  DesignSpec design;
  std::string noise_label;
  double phi1 = std::numeric_limits<double>::quiet_NaN();
  std::size_t arm_order = 0;
  double design_r = std::numeric_limits<double>::quiet_NaN();
  double design_rho = std::numeric_limits<double>::quiet_NaN();

  // fixed per-cell state (deterministic designs)
  DenseMatrix x_fixed;
  DenseMatrix projector_fixed;
  PrecisionFactor oracle_factor;
  PrecisionFactor raw_factor;
};

std::string noise_label_for(const NoiseSpec::Variant& v) {
  if (v.phi.size() == 1) {
    std::string s = "ar1(";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v.phi[0]);
    return s + buf + ")";
  }
  return "ar" + std::to_string(v.phi.size());
}

}  // namespace

std::vector<CellSummary> RecoveryReport::aggregate() const {
  std::vector<CellSummary> out;
  // rows arrive grouped by (cell, replicate, estimator); aggregate by
  // (cell_id, estimator) preserving first-appearance order
  for (const ReplicateRow& row : rows) {
    CellSummary* slot = nullptr;
    for (CellSummary& c : out)
      if (c.cell_id == row.cell_id && c.estimator == row.estimator) {
        slot = &c;
        break;
      }
    if (!slot) {
      CellSummary c;
      c.cell_id = row.cell_id;
      c.estimator = row.estimator;
      c.n = row.n;
      c.q = row.q;
      c.k_value = row.k_value;
      c.noise_label = row.noise_label;
      c.phi1 = row.phi1;
      c.arm_order = row.arm_order;
      c.design_r = row.design_r;
      c.design_rho = row.design_rho;
      out.push_back(std::move(c));
      slot = &out.back();
    }
    slot->replicates += 1;
    slot->frequency += row.recovered;
  }
  for (CellSummary& c : out)
    if (c.replicates > 0) c.frequency /= static_cast<double>(c.replicates);
  return out;
}

RecoveryReport run_experiment(const ExperimentConfig& cfg, std::size_t threads,
                              const std::atomic<bool>* interrupt) {
  cfg.validate();

  std::vector<DesignSpec> design_variants = cfg.design.variants();
  std::vector<Cell> cells;
  std::size_t cell_id = 0;
  RngStream dummy(0);
  for (std::size_t q : cfg.q_values)
    for (std::size_t n : cfg.n_values)
      for (const auto& nv : cfg.noise.variants)
        for (const DesignSpec& ds : design_variants) {
          Cell c;
          c.cell_id = cell_id++;
          c.n = n;
          c.q = q;
          c.design = ds;
          c.noise = nv.phi.size() == 1 ? CovarianceModel::ar1(nv.phi[0], cfg.noise.sigma2, q)
                                       : CovarianceModel::arm(nv.phi, cfg.noise.sigma2, q);
          c.noise_label = noise_label_for(nv);
          if (nv.phi.size() == 1)
            c.phi1 = nv.phi[0];
          else
            c.arm_order = nv.phi.size();
          if (ds.kind == DesignKind::UnbalancedAnova2) c.design_r = ds.r;
          if (ds.kind == DesignKind::CorrelatedRegression) c.design_rho = ds.rho;

          if (ds.kind != DesignKind::CorrelatedRegression) {
            c.x_fixed = gen_design(ds, n, dummy);
            c.projector_fixed = projection_complement(c.x_fixed);
          }
          c.oracle_factor = build_precision(c.noise.unit_variance());
          c.raw_factor = PrecisionFactor::identity(q);
          cells.push_back(std::move(c));
        }

  std::size_t n_est = cfg.estimators.size();
  std::size_t n_tasks = cells.size() * cfg.replicates;
  std::vector<ReplicateRow> slots(n_tasks * n_est);
  std::vector<char> filled(n_tasks, 0);

  auto run_task = [&](std::size_t task) {
    std::size_t ci = task / cfg.replicates;
    std::size_t rep = task % cfg.replicates;
    const Cell& cell = cells[ci];
    RngStream rng = RngStream::derive(cfg.seed, cell.cell_id, rep);

    DenseMatrix x = cell.design.kind == DesignKind::CorrelatedRegression
                        ? gen_design(cell.design, cell.n, rng)
                        : cell.x_fixed;
    ProblemShape shape{cell.n, x.cols(), cell.q};
    auto [beta_true, truth] = gen_signal(cfg.signal, shape, rng);
    DenseMatrix e = gen_noise(cell.noise, cell.n, rng);
    DenseMatrix b = unvec_colmajor(beta_true, shape.p, shape.q);
    DenseMatrix y = add(matmul(x, b), e);

    for (std::size_t ei = 0; ei < n_est; ++ei) {
      EstimatorKind est = cfg.estimators[ei];
      ReplicateRow row;
      row.cell_id = cell.cell_id;
      row.estimator = est;
      row.n = cell.n;
      row.q = cell.q;
      row.k_value = cfg.signal.k_value();
      row.noise_label = cell.noise_label;
      row.phi1 = cell.phi1;
      row.arm_order = cell.arm_order;
      row.design_r = cell.design_r;
      row.design_rho = cell.design_rho;
      row.replicate = rep;
      try {
        PrecisionFactor factor;
        switch (est) {
          case EstimatorKind::Oracle:
            factor = cell.oracle_factor;
            break;
          case EstimatorKind::Whitened: {
            ResidualEstimate res =
                cell.design.kind == DesignKind::CorrelatedRegression
                    ? extract_residuals(y, x)
                    : extract_residuals_with_projector(y, cell.projector_fixed);
            if (cell.noise.kind == CovKind::Ar1) {
              double phi_hat = estimate_phi1(res);
              row.phi1_hat = phi_hat;
              factor = build_precision(CovarianceModel::ar1(phi_hat, 1.0, cell.q));
            } else {
              CovarianceModel fit = estimate_arm(res, cell.noise.order());
              factor = build_precision(fit.unit_variance());
            }
            break;
          }
          case EstimatorKind::Raw:
            factor = cell.raw_factor;
            break;
        }
        VectorizedProblem prob = build_problem(y, x, factor);
        LassoPath path = solve_path(prob, cfg.lasso);
        RecoveryOutcome rec = sign_recovered(path, truth);
        row.recovered = rec.any_lambda ? 1 : 0;
        row.best_lambda = rec.best_lambda;
      } catch (const NotConverged&) {
        row.recovered = 0;
        row.converged = false;
        row.best_lambda = std::nullopt;
      }
      slots[task * n_est + ei] = std::move(row);
    }
    filled[task] = 1;
  };

  std::size_t n_threads = std::min(resolve_threads(threads), std::max<std::size_t>(n_tasks, 1));
  if (n_threads <= 1) {
    for (std::size_t t = 0; t < n_tasks; ++t) {
      if (interrupt && interrupt->load(std::memory_order_relaxed)) break;
      run_task(t);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (std::size_t w = 0; w < n_threads; ++w)
      pool.emplace_back([&] {
        for (;;) {
          if (interrupt && interrupt->load(std::memory_order_relaxed)) return;
          std::size_t t = next.fetch_add(1, std::memory_order_relaxed);
          if (t >= n_tasks) return;
          run_task(t);
        }
      });
    for (std::thread& th : pool) th.join();
  }

  RecoveryReport report;
  report.rows.reserve(n_tasks * n_est);
  report.complete = true;
  for (std::size_t t = 0; t < n_tasks; ++t) {
    if (!filled[t]) {
      report.complete = false;
      continue;
    }
    for (std::size_t ei = 0; ei < n_est; ++ei) report.rows.push_back(std::move(slots[t * n_est + ei]));
  }
  return report;
}

}  // namespace wlasso
