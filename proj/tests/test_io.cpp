#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "wlasso/config.hpp"
#include "wlasso/csv.hpp"
#include "wlasso/rng.hpp"

using namespace wlasso;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "wlasso_io_tests";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("format_double: shortest representation round-trips exactly") {
  RngStream rng(606);
  for (int rep = 0; rep < 2000; ++rep) {
    double v = rng.normal() * std::pow(10.0, static_cast<double>(rng.uniform_index(40)) - 20.0);
    bool ok = false;
    double back = parse_double(format_double(v), ok);
    CHECK(ok);
    CHECK(back == v);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0 / 3.0) == "0.3333333333333333");
}

TEST_CASE("matrix csv: write/read round trip") {
  RngStream rng(607);
  DenseMatrix m(5, 3);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 3; ++j) m(i, j) = rng.normal();
  fs::path p = temp_file("roundtrip.csv");
  write_matrix_csv(p.string(), m, {"a", "b", "c"});
  DenseMatrix back = load_matrix_csv(p.string());
  REQUIRE(back.rows() == 5);
  REQUIRE(back.cols() == 3);
  CHECK(max_abs_diff(m, back) == 0.0);
}

TEST_CASE("matrix csv: malformed rows carry line numbers") {
  fs::path p = temp_file("bad.csv");
  {
    std::ofstream out(p);
    out << "a,b\n1,2\n3,oops\n";
  }
  try {
    load_matrix_csv(p.string());
    FAIL("expected CsvError");
  } catch (const CsvError& e) {
    CHECK(std::string(e.what()).find(":3:") != std::string::npos);
    CHECK(std::string(e.what()).find("oops") != std::string::npos);
  }

  fs::path p2 = temp_file("ragged.csv");
  {
    std::ofstream out(p2);
    out << "a,b\n1,2\n3,4,5\n";
  }
  CHECK_THROWS_AS(load_matrix_csv(p2.string()), CsvError);
}

TEST_CASE("toml subset: sections, arrays, comments") {
  std::istringstream in(R"(# experiment
n = [50, 100]   # grid
q = [10]
replicates = 5
seed = 42
estimators = ["oracle", "raw"]

[noise]
kind = "ar1"
phi1 = [0.5, 0.95]
sigma2 = 1.0

[signal]
k = 2.0

[lasso]
n_lambda = 30
lambda_min_ratio = 1e-3
)");
  nlohmann::json j = parse_toml_subset(in, "test.toml");
  CHECK(j["n"] == nlohmann::json({50, 100}));
  CHECK(j["noise"]["phi1"][1] == 0.95);
  CHECK(j["estimators"][0] == "oracle");
  CHECK(j["lasso"]["lambda_min_ratio"] == 1e-3);

  ExperimentConfig cfg = experiment_config_from_json(j);
  CHECK(cfg.n_values == std::vector<std::size_t>{50, 100});
  CHECK(cfg.noise.variants.size() == 2);
  CHECK(cfg.estimators.size() == 2);
  CHECK(cfg.signal.c1 == doctest::Approx(0.125));
  CHECK(cfg.lasso.n_lambda == 30);
  CHECK(cfg.replicates == 5);
  CHECK(cfg.seed == 42);
}

TEST_CASE("toml subset: nested arrays and dotted sections") {
  std::istringstream in(R"(
n = [20]
q = [30]

[noise]
kind = "arm"
coeffs = [[0.4, 0.2], [0.3, 0.1, 0.05]]
)");
  nlohmann::json j = parse_toml_subset(in, "t");
  ExperimentConfig cfg = experiment_config_from_json(j);
  CHECK(cfg.noise.variants.size() == 2);
  CHECK(cfg.noise.variants[0].phi == std::vector<double>{0.4, 0.2});
  CHECK(cfg.noise.variants[1].phi.size() == 3);

  std::istringstream in2("[a.b]\nc = 1\n");
  nlohmann::json j2 = parse_toml_subset(in2, "t2");
  CHECK(j2["a"]["b"]["c"] == 1);
}

TEST_CASE("toml subset: errors carry line numbers") {
  std::istringstream in("x = [1, 2\n");
  CHECK_THROWS_AS(parse_toml_subset(in, "t"), ConfigError);
  std::istringstream in2("just words\n");
  try {
    parse_toml_subset(in2, "t");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("t:1:") != std::string::npos);
  }
}

TEST_CASE("config digest: invariant to formatting, sensitive to semantics") {
  std::istringstream toml_form(R"(
q = [10]
n = [50]
seed = 7
[noise]
kind = "ar1"
phi1 = 0.5
)");
  nlohmann::json a = parse_toml_subset(toml_form, "a");
  nlohmann::json b = nlohmann::json::parse(
      R"({"noise": {"phi1": [0.5], "kind": "ar1"}, "n": [50], "q": [10], "seed": 7})");
  ExperimentConfig ca = experiment_config_from_json(a);
  ExperimentConfig cb = experiment_config_from_json(b);
  CHECK(config_digest(experiment_config_to_json(ca)) ==
        config_digest(experiment_config_to_json(cb)));

  ExperimentConfig cc = cb;
  cc.replicates += 1;
  CHECK(config_digest(experiment_config_to_json(cb)) !=
        config_digest(experiment_config_to_json(cc)));
  ExperimentConfig cd = cb;
  cd.seed += 1;
  CHECK(config_digest(experiment_config_to_json(cb)) !=
        config_digest(experiment_config_to_json(cd)));
}

TEST_CASE("config: validation errors surface as ConfigError") {
  nlohmann::json j = nlohmann::json::parse(R"({"q": [10]})");
  CHECK_THROWS_AS(experiment_config_from_json(j), ConfigError);
  nlohmann::json j2 = nlohmann::json::parse(
      R"({"n": [10], "q": [10], "noise": {"kind": "ar1", "phi1": 1.5}})");
  CHECK_THROWS_AS(experiment_config_from_json(j2), Error);
  nlohmann::json j3 = nlohmann::json::parse(
      R"({"n": [10], "q": [10], "estimators": ["bogus"]})");
  CHECK_THROWS_AS(experiment_config_from_json(j3), ConfigError);
}

TEST_CASE("bundled experiment configs parse and match their scenarios") {
  const char* dir = std::getenv("WLASSO_CONFIG_DIR");
  REQUIRE(dir != nullptr);
  ExperimentConfig fig1 =
      experiment_config_from_json(load_config_file(std::string(dir) + "/fig1-desk.toml"));
  CHECK(fig1.q_values == std::vector<std::size_t>{50});
  CHECK(fig1.n_values == std::vector<std::size_t>{50, 100, 200, 400});
  CHECK(fig1.noise.variants.size() == 1);
  CHECK(fig1.noise.variants[0].phi == std::vector<double>{0.95});
  CHECK(fig1.signal.k_value() == doctest::Approx(2.0));
  CHECK(fig1.replicates == 200);

  ExperimentConfig fig2 =
      experiment_config_from_json(load_config_file(std::string(dir) + "/fig2-desk.toml"));
  CHECK(fig2.design.kind == DesignKind::UnbalancedAnova2);
  CHECK(fig2.design.r == std::vector<double>{0.5, 0.1});

  ExperimentConfig fig3 =
      experiment_config_from_json(load_config_file(std::string(dir) + "/fig3-desk.toml"));
  CHECK(fig3.noise.variants[0].phi.size() == 5);
  CHECK(fig3.q_values == std::vector<std::size_t>{100});
}
