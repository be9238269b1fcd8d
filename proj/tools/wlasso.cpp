// Command-line surface: fit CSV data, run simulation campaigns, audit the
// sign-consistency conditions. Exit codes: 0 ok, 2 input error,
// 3 convergence failure, 4 numerical singularity.

#include <atomic>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "wlasso/config.hpp"
#include "wlasso/covariance.hpp"
#include "wlasso/csv.hpp"
#include "wlasso/lasso.hpp"
#include "wlasso/simulate.hpp"
#include "wlasso/theory.hpp"
#include "wlasso/whitening.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace wlasso;

namespace {

constexpr const char* kVersion = "0.1.0";

std::atomic<bool> g_interrupt{false};

void handle_sigint(int) { g_interrupt.store(true); }

std::string out_path(const std::string& dir, const std::string& name) {
  fs::create_directories(dir);
  return (fs::path(dir) / name).string();
}

std::string opt_field(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

std::string nan_field(double v) { return std::isnan(v) ? std::string() : format_double(v); }

struct CovChoice {
  enum class Kind { Identity, Ar1, Arm } kind = Kind::Ar1;
  std::size_t order = 1;
};

CovChoice parse_cov_flag(const std::string& s) {
  if (s == "identity") return {CovChoice::Kind::Identity, 0};
  if (s == "ar1") return {CovChoice::Kind::Ar1, 1};
  if (s.size() > 2 && s.rfind("ar", 0) == 0) {
    std::size_t m = 0;
    for (char c : s.substr(2)) {
      if (!std::isdigit(static_cast<unsigned char>(c)))
        throw ConfigError("--cov: expected identity, ar1 or ar<m>, got '" + s + "'");
      m = m * 10 + static_cast<std::size_t>(c - '0');
    }
    if (m == 0) throw ConfigError("--cov: AR order must be >= 1");
    return {m == 1 ? CovChoice::Kind::Ar1 : CovChoice::Kind::Arm, m};
  }
  throw ConfigError("--cov: expected identity, ar1 or ar<m>, got '" + s + "'");
}

// ---------------------------------------------------------------------------
// fit

int cmd_fit(const std::string& y_path, const std::string& x_path, const std::string& cov_flag,
            std::size_t n_lambda, double lambda_min_ratio, const std::string& select,
            double fixed_lambda, const std::string& out_dir) {
  Manifest manifest;
  manifest.command = "fit";
  manifest.tool_version = kVersion;
  manifest.started_utc = utc_timestamp_now();

  DenseMatrix y = load_matrix_csv(y_path);
  DenseMatrix x = load_matrix_csv(x_path);
  if (y.rows() != x.rows())
    throw CsvError("fit: Y has " + std::to_string(y.rows()) + " rows but X has " +
                   std::to_string(x.rows()));
  if (x.cols() >= x.rows()) throw CsvError("fit: requires p < n");
  if (select != "exists" && select != "fixed")
    throw ConfigError("--select: expected 'exists' or 'fixed'");
  if (select == "fixed" && !(fixed_lambda > 0.0))
    throw ConfigError("--select fixed requires --lambda > 0");

  CovChoice cov = parse_cov_flag(cov_flag);
  std::size_t n = y.rows(), p = x.cols(), q = y.cols();

  json cov_json;
  PrecisionFactor factor;
  if (cov.kind == CovChoice::Kind::Identity) {
    factor = PrecisionFactor::identity(q);
    cov_json["kind"] = "identity";
    cov_json["q"] = q;
  } else {
    ResidualEstimate res = extract_residuals(y, x);
    if (cov.kind == CovChoice::Kind::Ar1) {
      double phi_hat = estimate_phi1(res);
      factor = build_precision(CovarianceModel::ar1(phi_hat, 1.0, q));
      double gamma0 = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t l = 0; l < q; ++l) gamma0 += res.e_hat(i, l) * res.e_hat(i, l);
      gamma0 /= static_cast<double>(n * q);
      cov_json["kind"] = "ar1";
      cov_json["q"] = q;
      cov_json["phi"] = {phi_hat};
      cov_json["sigma2_hat"] = gamma0 * (1.0 - phi_hat * phi_hat);
    } else {
      CovarianceModel fit = estimate_arm(res, cov.order);
      factor = build_precision(fit.unit_variance());
      cov_json["kind"] = "arm";
      cov_json["q"] = q;
      cov_json["phi"] = fit.phi;
      cov_json["sigma2_hat"] = fit.sigma2;
    }
  }

  VectorizedProblem prob = build_problem(y, x, factor);
  LassoConfig lcfg;
  lcfg.n_lambda = n_lambda;
  lcfg.lambda_min_ratio = lambda_min_ratio;

  double lam_max = lambda_max(prob);
  std::vector<double> grid = lcfg.grid(lam_max);
  if (select == "fixed") {
    // keep warm-start benefits: walk the grid down to the requested lambda
    std::vector<double> g;
    for (double l : grid)
      if (l > fixed_lambda) g.push_back(l);
    g.push_back(fixed_lambda);
    grid = std::move(g);
  }

  std::vector<std::vector<double>> betas;
  std::vector<double> warm(p * q, 0.0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    try {
      warm = solve_lasso(prob, grid[i], warm, lcfg);
    } catch (NotConverged& e) {
      e.lambda_index = i;
      throw;
    }
    betas.push_back(warm);
  }
  std::size_t first_out = select == "fixed" ? grid.size() - 1 : 0;

  std::string coef_path = out_path(out_dir, "coefficients.csv");
  std::string supp_path = out_path(out_dir, "support.csv");
  std::string cov_path = out_path(out_dir, "covariance.json");
  std::string man_path = out_path(out_dir, "manifest.json");

  {
    std::ofstream coef(coef_path, std::ios::binary);
    std::ofstream supp(supp_path, std::ios::binary);
    coef << "lambda_index,lambda,j,r,k,beta\n";
    supp << "lambda_index,lambda,j,r,k,sign\n";
    for (std::size_t i = first_out; i < grid.size(); ++i) {
      for (std::size_t j = 0; j < p * q; ++j) {
        double b = betas[i][j];
        if (b == 0.0) continue;
        CoordIndex c = coord_of(j, p);
        std::string head = std::to_string(i) + "," + format_double(grid[i]) + "," +
                           std::to_string(j + 1) + "," + std::to_string(c.r + 1) + "," +
                           std::to_string(c.k + 1) + ",";
        coef << head << format_double(b) << '\n';
        supp << head << (b > 0.0 ? 1 : -1) << '\n';
      }
    }
  }
  {
    std::ofstream covf(cov_path, std::ios::binary);
    covf << cov_json.dump(2) << '\n';
  }

  json cfgj;
  cfgj["command"] = "fit";
  cfgj["y"] = y_path;
  cfgj["x"] = x_path;
  cfgj["cov"] = cov_flag;
  cfgj["n_lambda"] = n_lambda;
  cfgj["lambda_min_ratio"] = lambda_min_ratio;
  cfgj["select"] = select;
  if (select == "fixed") cfgj["lambda"] = fixed_lambda;
  manifest.config_digest = config_digest(cfgj);
  manifest.outputs = {coef_path, supp_path, cov_path, man_path};
  manifest.finished_utc = utc_timestamp_now();
  write_manifest(man_path, manifest);
  return 0;
}

// ---------------------------------------------------------------------------
// simulate

void write_replicates_csv(const std::string& path, const RecoveryReport& report) {
  std::ofstream out(path, std::ios::binary);
  out << "estimator,n,q,k,phi1,m,r,rho,replicate,recovered,converged,best_lambda,phi1_hat\n";
  for (const ReplicateRow& row : report.rows) {
    out << estimator_name(row.estimator) << ',' << row.n << ',' << row.q << ','
        << format_double(row.k_value) << ',' << nan_field(row.phi1) << ','
        << (row.arm_order ? std::to_string(row.arm_order) : std::string()) << ','
        << nan_field(row.design_r) << ',' << nan_field(row.design_rho) << ',' << row.replicate
        << ',' << row.recovered << ',' << (row.converged ? 1 : 0) << ','
        << opt_field(row.best_lambda) << ',' << opt_field(row.phi1_hat) << '\n';
  }
}

void write_frequencies_csv(const std::string& path, const RecoveryReport& report) {
  std::ofstream out(path, std::ios::binary);
  out << "estimator,n,q,k,phi1,m,r,rho,replicates,frequency\n";
  for (const CellSummary& c : report.aggregate()) {
    out << estimator_name(c.estimator) << ',' << c.n << ',' << c.q << ','
        << format_double(c.k_value) << ',' << nan_field(c.phi1) << ','
        << (c.arm_order ? std::to_string(c.arm_order) : std::string()) << ','
        << nan_field(c.design_r) << ',' << nan_field(c.design_rho) << ',' << c.replicates << ','
        << format_double(c.frequency) << '\n';
  }
}

int cmd_simulate(const std::string& config_path, std::optional<std::uint64_t> seed,
                 std::size_t threads, const std::string& out_dir,
                 std::optional<std::size_t> n_lambda, std::optional<double> lambda_min_ratio,
                 std::optional<std::size_t> replicates) {
  Manifest manifest;
  manifest.command = "simulate";
  manifest.tool_version = kVersion;
  manifest.started_utc = utc_timestamp_now();

  json raw = load_config_file(config_path);
  ExperimentConfig cfg = experiment_config_from_json(raw);
  if (seed) cfg.seed = *seed;
  if (n_lambda) cfg.lasso.n_lambda = *n_lambda;
  if (lambda_min_ratio) cfg.lasso.lambda_min_ratio = *lambda_min_ratio;
  if (replicates) cfg.replicates = *replicates;
  cfg.validate();

  manifest.seed = cfg.seed;
  manifest.threads = resolve_threads(threads);
  manifest.config_digest = config_digest(experiment_config_to_json(cfg));

  std::signal(SIGINT, handle_sigint);
  RecoveryReport report = run_experiment(cfg, threads, &g_interrupt);

  std::string rep_path = out_path(out_dir, "replicates.csv");
  std::string freq_path = out_path(out_dir, "frequencies.csv");
  std::string man_path = out_path(out_dir, "manifest.json");
  write_replicates_csv(rep_path, report);
  write_frequencies_csv(freq_path, report);

  manifest.outputs = {rep_path, freq_path, man_path};
  manifest.complete = report.complete;
  manifest.finished_utc = utc_timestamp_now();
  write_manifest(man_path, manifest);
  if (!report.complete) std::cerr << "wlasso: interrupted, partial results flushed\n";
  return 0;
}

// ---------------------------------------------------------------------------
// audit

struct SupportFile {
  SupportSpec support;
  std::vector<double> beta;  // empty when only signs are known
};

SupportFile load_support_csv(const std::string& path, std::size_t pq) {
  DenseMatrix m = load_matrix_csv(path);
  if (m.cols() < 1 || m.cols() > 2)
    throw CsvError(path + ": expected columns j[,value] (1-based j)");
  SupportFile out;
  bool has_values = m.cols() == 2;
  std::vector<std::pair<std::size_t, double>> entries;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double jd = m(i, 0);
    if (jd < 1 || jd != std::floor(jd))
      throw CsvError(path + ": bad index in row " + std::to_string(i + 2));
    std::size_t j = static_cast<std::size_t>(jd) - 1;
    if (j >= pq) throw CsvError(path + ": index out of range in row " + std::to_string(i + 2));
    double v = has_values ? m(i, 1) : 1.0;
    if (v == 0.0) throw CsvError(path + ": zero value in row " + std::to_string(i + 2));
    entries.emplace_back(j, v);
  }
  std::sort(entries.begin(), entries.end());
  if (has_values) out.beta.assign(pq, 0.0);
  for (auto& [j, v] : entries) {
    out.support.indices.push_back(j);
    out.support.signs.push_back(v > 0.0 ? 1 : -1);
    if (has_values) out.beta[j] = v;
  }
  out.support.validate(pq);
  return out;
}

int cmd_audit(const std::string& x_path, const std::string& design, std::size_t design_n,
              double design_r, const std::string& support_path, double phi1,
              const std::string& cov_file, std::size_t q, double c1, double c2,
              const std::string& out_dir) {
  Manifest manifest;
  manifest.command = "audit";
  manifest.tool_version = kVersion;
  manifest.started_utc = utc_timestamp_now();

  DenseMatrix x;
  RngStream rng(0);
  if (!x_path.empty()) {
    x = load_matrix_csv(x_path);
  } else if (design == "balanced_anova2") {
    x = gen_design({DesignKind::BalancedAnova2, 0.5, 2, 0.0}, design_n, rng);
  } else if (design == "unbalanced_anova2") {
    x = gen_design({DesignKind::UnbalancedAnova2, design_r, 2, 0.0}, design_n, rng);
  } else if (!design.empty()) {
    throw ConfigError("--design: expected balanced_anova2 or unbalanced_anova2");
  } else {
    throw ConfigError("audit: provide --x or --design");
  }

  PrecisionFactor factor;
  json cov_desc;
  bool phi1_given = !std::isnan(phi1);
  if (phi1_given && !cov_file.empty())
    throw ConfigError("audit: --phi1 and --cov-file are mutually exclusive");
  if (phi1_given) {
    if (!(std::abs(phi1) < 1.0)) throw ConfigError("--phi1: must satisfy |phi1| < 1");
    if (q == 0) throw ConfigError("audit: --q is required with --phi1");
    factor = build_precision(CovarianceModel::ar1(phi1, 1.0, q));
    cov_desc = {{"kind", "ar1"}, {"phi", {phi1}}};
  } else if (!cov_file.empty()) {
    std::ifstream in(cov_file);
    if (!in) throw ConfigError(cov_file + ": cannot open file");
    json cj;
    try {
      in >> cj;
    } catch (const std::exception& e) {
      throw ConfigError(cov_file + ": " + e.what());
    }
    std::string kind = cj.value("kind", std::string());
    std::size_t qq = cj.value("q", static_cast<std::size_t>(0));
    if (q == 0) q = qq;
    if (q == 0) throw ConfigError("audit: covariance file lacks q and --q not given");
    if (kind == "identity") {
      factor = PrecisionFactor::identity(q);
    } else if (kind == "ar1" || kind == "arm") {
      std::vector<double> phi = cj.at("phi").get<std::vector<double>>();
      factor = phi.size() == 1 ? build_precision(CovarianceModel::ar1(phi[0], 1.0, q))
                               : build_precision(CovarianceModel::arm(phi, 1.0, q));
      if (phi.size() == 1) phi1 = phi[0], phi1_given = true;
    } else {
      throw ConfigError(cov_file + ": unknown covariance kind '" + kind + "'");
    }
    cov_desc = cj;
  } else {
    if (q == 0) throw ConfigError("audit: --q is required without a covariance file");
    factor = PrecisionFactor::identity(q);
    cov_desc = {{"kind", "identity"}};
  }

  std::size_t n = x.rows(), p = x.cols();
  DenseMatrix y_zero(n, q);
  VectorizedProblem prob = build_problem(y_zero, x, factor);

  SupportFile sf = load_support_csv(support_path, p * q);

  ICReport ic = check_ic(prob, sf.support);
  AssumptionAudit audit = audit_assumptions(
      prob, sf.support, c1, c2,
      sf.beta.empty() ? std::span<const double>() : std::span<const double>(sf.beta));

  json out;
  out["shape"] = {{"n", n}, {"p", p}, {"q", q}};
  out["covariance"] = cov_desc;
  out["ic"] = {{"max_lhs", ic.max_lhs}, {"eta", ic.eta}, {"holds", ic.holds}, {"lhs", ic.lhs}};
  json aj;
  aj["m1_bound"] = audit.m1_bound;
  aj["m2_bound"] = audit.m2_bound;
  aj["c1"] = audit.c1;
  aj["c2"] = audit.c2;
  if (std::isnan(audit.min_beta_scaled))
    aj["min_beta_scaled"] = nullptr;
  else
    aj["min_beta_scaled"] = audit.min_beta_scaled;
  aj["sparsity_ratio"] = audit.sparsity_ratio;
  aj["x_orth_defect"] = audit.x_orth_defect;
  aj["lambda_window"] = {{"lo", audit.lambda_window.lo},
                         {"hi", audit.lambda_window.hi},
                         {"heuristic", audit.lambda_window.heuristic}};
  aj["ar1_placement"] = audit.ar1_placement;
  out["assumptions"] = aj;
  if (phi1_given) out["ar1_ic_bound"] = ar1_ic_bound(phi1);

  std::string audit_path = out_path(out_dir, "audit.json");
  std::string man_path = out_path(out_dir, "manifest.json");
  {
    std::ofstream f(audit_path, std::ios::binary);
    f << out.dump(2) << '\n';
  }

  json cfgj;
  cfgj["command"] = "audit";
  cfgj["x"] = x_path;
  cfgj["design"] = design;
  cfgj["design_n"] = design_n;
  cfgj["design_r"] = design_r;
  cfgj["support"] = support_path;
  cfgj["phi1"] = phi1_given ? json(phi1) : json();
  cfgj["cov_file"] = cov_file;
  cfgj["q"] = q;
  cfgj["c1"] = c1;
  cfgj["c2"] = c2;
  manifest.config_digest = config_digest(cfgj);
  manifest.outputs = {audit_path, man_path};
  manifest.finished_utc = utc_timestamp_now();
  write_manifest(man_path, manifest);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"whitened-LASSO variable selection for multivariate linear models"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  // fit
  auto* fit = app.add_subcommand("fit", "fit a whitened LASSO path to CSV data");
  std::string fit_y, fit_x, fit_cov = "ar1", fit_select = "exists", fit_out = ".";
  std::size_t fit_nl = 100;
  double fit_lmr = 1e-3, fit_lambda = 0.0;
  fit->add_option("--y", fit_y, "response matrix CSV (n x q)")->required();
  fit->add_option("--x", fit_x, "design matrix CSV (n x p)")->required();
  fit->add_option("--cov", fit_cov, "covariance model: identity, ar1 or ar<m>");
  fit->add_option("--n-lambda", fit_nl, "grid size");
  fit->add_option("--lambda-min-ratio", fit_lmr, "grid floor ratio");
  fit->add_option("--select", fit_select, "exists (whole path) or fixed (single lambda)");
  fit->add_option("--lambda", fit_lambda, "penalty for --select fixed");
  fit->add_option("--out-dir", fit_out, "output directory");

  // simulate
  auto* sim = app.add_subcommand("simulate", "run a sign-recovery experiment campaign");
  std::string sim_config, sim_out = ".";
  std::optional<std::uint64_t> sim_seed;
  std::optional<std::size_t> sim_nl, sim_reps;
  std::optional<double> sim_lmr;
  std::size_t sim_threads = 0;
  sim->add_option("config", sim_config, "experiment config (TOML or JSON)")->required();
  sim->add_option("--seed", sim_seed, "override config seed");
  sim->add_option("--threads", sim_threads, "worker threads (default: WLASSO_THREADS or all cores)");
  sim->add_option("--out-dir", sim_out, "output directory");
  sim->add_option("--n-lambda", sim_nl, "override lasso grid size");
  sim->add_option("--lambda-min-ratio", sim_lmr, "override lasso grid floor");
  sim->add_option("--replicates", sim_reps, "override replicate count");

  // audit
  auto* aud = app.add_subcommand("audit", "audit IC and sufficient conditions on an instance");
  std::string aud_x, aud_design, aud_support, aud_covfile, aud_out = ".";
  std::size_t aud_n = 0, aud_q = 0;
  double aud_r = 0.5, aud_phi1 = std::numeric_limits<double>::quiet_NaN();
  double aud_c1 = 0.125, aud_c2 = 0.125;
  aud->add_option("--x", aud_x, "design matrix CSV");
  aud->add_option("--design", aud_design, "balanced_anova2 or unbalanced_anova2");
  aud->add_option("--n", aud_n, "sample size for --design");
  aud->add_option("--r", aud_r, "group-1 fraction for unbalanced_anova2");
  aud->add_option("--support", aud_support, "true support CSV: j[,value], 1-based")->required();
  aud->add_option("--phi1", aud_phi1, "AR(1) parameter for the covariance");
  aud->add_option("--cov-file", aud_covfile, "covariance.json from a fit run");
  aud->add_option("--q", aud_q, "number of responses");
  aud->add_option("--c1", aud_c1, "sparsity exponent");
  aud->add_option("--c2", aud_c2, "magnitude exponent");
  aud->add_option("--out-dir", aud_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand(fit))
      return cmd_fit(fit_y, fit_x, fit_cov, fit_nl, fit_lmr, fit_select, fit_lambda, fit_out);
    if (app.got_subcommand(sim))
      return cmd_simulate(sim_config, sim_seed, sim_threads, sim_out, sim_nl, sim_lmr, sim_reps);
    if (app.got_subcommand(aud))
      return cmd_audit(aud_x, aud_design, aud_n, aud_r, aud_support, aud_phi1, aud_covfile, aud_q,
                       aud_c1, aud_c2, aud_out);
  } catch (const NotConverged& e) {
    std::cerr << "wlasso: " << e.what() << "\n";
    return 3;
  } catch (const SingularSubGram& e) {
    std::cerr << "wlasso: " << e.what() << "\n";
    return 4;
  } catch (const NotPositiveDefinite& e) {
    std::cerr << "wlasso: " << e.what() << "\n";
    return 4;
  } catch (const RankDeficient& e) {
    std::cerr << "wlasso: " << e.what() << "\n";
    return 4;
  } catch (const SingularSystem& e) {
    std::cerr << "wlasso: " << e.what() << "\n";
    return 4;
  } catch (const Error& e) {
    std::cerr << "wlasso: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "wlasso: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
