#include "wlasso/config.hpp"

#include <cctype>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>

#include "wlasso/csv.hpp"

namespace wlasso {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& name, std::size_t line, const std::string& msg) {
  throw ConfigError(name + ":" + std::to_string(line) + ": " + msg);
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

// strip a trailing comment not inside a string literal
std::string strip_comment(const std::string& s) {
  bool in_str = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (c == '"' && (i == 0 || s[i - 1] != '\\')) in_str = !in_str;
    if (c == '#' && !in_str) return s.substr(0, i);
  }
  return s;
}

json parse_toml_value(const std::string& raw, const std::string& name, std::size_t line);

json parse_toml_array(const std::string& raw, const std::string& name, std::size_t line) {
  json arr = json::array();
  std::size_t i = 1;  // past '['
  std::size_t end = raw.size() - 1;
  while (i < end) {
    while (i < end && (raw[i] == ' ' || raw[i] == '\t' || raw[i] == ',')) ++i;
    if (i >= end) break;
    std::size_t start = i;
    if (raw[i] == '[') {
      int depth = 0;
      while (i < end) {
        if (raw[i] == '[') ++depth;
        if (raw[i] == ']') {
          --depth;
          if (depth == 0) {
            ++i;
            break;
          }
        }
        ++i;
      }
      if (depth != 0) fail(name, line, "unterminated nested array");
    } else if (raw[i] == '"') {
      ++i;
      while (i < end && !(raw[i] == '"' && raw[i - 1] != '\\')) ++i;
      if (i >= end) fail(name, line, "unterminated string in array");
      ++i;
    } else {
      while (i < end && raw[i] != ',') ++i;
    }
    arr.push_back(parse_toml_value(trim(raw.substr(start, i - start)), name, line));
  }
  return arr;
}

json parse_toml_value(const std::string& raw, const std::string& name, std::size_t line) {
  if (raw.empty()) fail(name, line, "empty value");
  if (raw.front() == '[') {
    if (raw.back() != ']') fail(name, line, "unterminated array");
    return parse_toml_array(raw, name, line);
  }
  if (raw.front() == '"') {
    if (raw.size() < 2 || raw.back() != '"') fail(name, line, "unterminated string");
    std::string out;
    for (std::size_t i = 1; i + 1 < raw.size(); ++i) {
      if (raw[i] == '\\' && i + 2 < raw.size() && (raw[i + 1] == '"' || raw[i + 1] == '\\')) {
        out += raw[i + 1];
        ++i;
      } else {
        out += raw[i];
      }
    }
    return json(out);
  }
  if (raw == "true") return json(true);
  if (raw == "false") return json(false);
  // number: integer if it looks integral
  bool integral = true;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    char c = raw[i];
    if (i == 0 && (c == '+' || c == '-')) continue;
    if (!std::isdigit(static_cast<unsigned char>(c))) {
      integral = false;
      break;
    }
  }
  if (integral && raw != "+" && raw != "-") {
    try {
      return json(std::stoll(raw));
    } catch (...) {
      fail(name, line, "bad integer '" + raw + "'");
    }
  }
  bool ok = false;
  double v = parse_double(raw, ok);
  if (!ok) fail(name, line, "bad value '" + raw + "'");
  return json(v);
}

}  // namespace

json parse_toml_subset(std::istream& in, const std::string& name) {
  json root = json::object();
  json* table = &root;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string body = trim(strip_comment(line));
    if (body.empty()) continue;
    if (body.front() == '[') {
      if (body.back() != ']') fail(name, lineno, "unterminated section header");
      std::string section = trim(body.substr(1, body.size() - 2));
      if (section.empty()) fail(name, lineno, "empty section name");
      table = &root;
      std::size_t start = 0;
      while (true) {
        std::size_t dot = section.find('.', start);
        std::string part = trim(section.substr(start, dot - start));
        if (part.empty()) fail(name, lineno, "empty section component");
        table = &(*table)[part];
        if (!table->is_object() && !table->is_null()) fail(name, lineno, "section clashes with key");
        if (table->is_null()) *table = json::object();
        if (dot == std::string::npos) break;
        start = dot + 1;
      }
      continue;
    }
    std::size_t eq = body.find('=');
    if (eq == std::string::npos) fail(name, lineno, "expected key = value");
    std::string key = trim(body.substr(0, eq));
    std::string value = trim(body.substr(eq + 1));
    if (key.empty()) fail(name, lineno, "empty key");
    (*table)[key] = parse_toml_value(value, name, lineno);
  }
  return root;
}

json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open file");
  bool is_json = path.size() >= 5 && path.substr(path.size() - 5) == ".json";
  if (is_json) {
    json j;
    try {
      in >> j;
    } catch (const std::exception& e) {
      throw ConfigError(path + ": " + e.what());
    }
    if (!j.is_object()) throw ConfigError(path + ": top level must be an object");
    return j;
  }
  return parse_toml_subset(in, path);
}

namespace {

std::vector<double> as_double_list(const json& v, const std::string& what) {
  std::vector<double> out;
  if (v.is_number()) {
    out.push_back(v.get<double>());
  } else if (v.is_array()) {
    for (const json& e : v) {
      if (!e.is_number()) throw ConfigError(what + ": expected numbers");
      out.push_back(e.get<double>());
    }
  } else {
    throw ConfigError(what + ": expected number or array");
  }
  return out;
}

std::vector<std::size_t> as_size_list(const json& v, const std::string& what) {
  std::vector<std::size_t> out;
  for (double d : as_double_list(v, what)) {
    if (d < 0 || d != std::floor(d)) throw ConfigError(what + ": expected nonnegative integers");
    out.push_back(static_cast<std::size_t>(d));
  }
  return out;
}

}  // namespace

ExperimentConfig experiment_config_from_json(const json& j) {
  ExperimentConfig cfg;
  if (!j.contains("n") || !j.contains("q")) throw ConfigError("config: n and q are required");
  cfg.n_values = as_size_list(j.at("n"), "n");
  cfg.q_values = as_size_list(j.at("q"), "q");
  if (j.contains("replicates")) {
    auto r = as_size_list(j.at("replicates"), "replicates");
    if (r.size() != 1) throw ConfigError("replicates: expected a single integer");
    cfg.replicates = r[0];
  }
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_integer() && !j.at("seed").is_number_unsigned())
      throw ConfigError("seed: expected an integer");
    cfg.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("estimators")) {
    cfg.estimators.clear();
    if (!j.at("estimators").is_array()) throw ConfigError("estimators: expected array");
    for (const json& e : j.at("estimators")) {
      std::string s = e.get<std::string>();
      if (s == "oracle")
        cfg.estimators.push_back(EstimatorKind::Oracle);
      else if (s == "whitened")
        cfg.estimators.push_back(EstimatorKind::Whitened);
      else if (s == "raw")
        cfg.estimators.push_back(EstimatorKind::Raw);
      else
        throw ConfigError("estimators: unknown estimator '" + s + "'");
    }
  }

  if (j.contains("noise")) {
    const json& nz = j.at("noise");
    std::string kind = nz.value("kind", std::string("ar1"));
    cfg.noise.variants.clear();
    if (kind == "ar1") {
      if (!nz.contains("phi1")) throw ConfigError("noise: ar1 requires phi1");
      for (double v : as_double_list(nz.at("phi1"), "noise.phi1"))
        cfg.noise.variants.push_back({{v}});
    } else if (kind == "arm") {
      if (!nz.contains("coeffs")) throw ConfigError("noise: arm requires coeffs");
      const json& c = nz.at("coeffs");
      if (!c.is_array()) throw ConfigError("noise.coeffs: expected array");
      if (!c.empty() && c.front().is_array()) {
        for (const json& e : c) cfg.noise.variants.push_back({as_double_list(e, "noise.coeffs")});
      } else {
        cfg.noise.variants.push_back({as_double_list(c, "noise.coeffs")});
      }
    } else {
      throw ConfigError("noise: unknown kind '" + kind + "'");
    }
    if (nz.contains("sigma2")) cfg.noise.sigma2 = nz.at("sigma2").get<double>();
  }

  if (j.contains("design")) {
    const json& ds = j.at("design");
    std::string kind = ds.value("kind", std::string("balanced_anova2"));
    if (kind == "balanced_anova2") {
      cfg.design.kind = DesignKind::BalancedAnova2;
    } else if (kind == "unbalanced_anova2") {
      cfg.design.kind = DesignKind::UnbalancedAnova2;
      if (ds.contains("r")) cfg.design.r = as_double_list(ds.at("r"), "design.r");
    } else if (kind == "correlated_regression") {
      cfg.design.kind = DesignKind::CorrelatedRegression;
      if (ds.contains("p")) {
        auto pv = as_size_list(ds.at("p"), "design.p");
        if (pv.size() != 1) throw ConfigError("design.p: expected a single integer");
        cfg.design.p = pv[0];
      }
      if (ds.contains("rho")) cfg.design.rho = as_double_list(ds.at("rho"), "design.rho");
    } else {
      throw ConfigError("design: unknown kind '" + kind + "'");
    }
  }

  if (j.contains("signal")) {
    const json& sg = j.at("signal");
    if (sg.contains("k")) {
      cfg.signal = SignalSpec::from_k(sg.at("k").get<double>());
    } else if (sg.contains("c1") || sg.contains("c2")) {
      if (!sg.contains("c1") || !sg.contains("c2"))
        throw ConfigError("signal: c1 and c2 must be given together");
      cfg.signal.c1 = sg.at("c1").get<double>();
      cfg.signal.c2 = sg.at("c2").get<double>();
    }
    if (sg.contains("m3")) cfg.signal.m3 = sg.at("m3").get<double>();
    if (sg.contains("placement")) {
      std::string pl = sg.at("placement").get<std::string>();
      if (pl == "spaced_interior")
        cfg.signal.placement = Placement::SpacedInterior;
      else if (pl == "uniform")
        cfg.signal.placement = Placement::UniformRandom;
      else
        throw ConfigError("signal.placement: expected 'spaced_interior' or 'uniform'");
    }
    if (sg.contains("support_size")) {
      auto sv = as_size_list(sg.at("support_size"), "signal.support_size");
      if (sv.size() != 1) throw ConfigError("signal.support_size: expected a single integer");
      cfg.signal.support_size_override = sv[0];
    }
  }

  if (j.contains("lasso")) {
    const json& ls = j.at("lasso");
    if (ls.contains("n_lambda")) cfg.lasso.n_lambda = ls.at("n_lambda").get<std::size_t>();
    if (ls.contains("lambda_min_ratio"))
      cfg.lasso.lambda_min_ratio = ls.at("lambda_min_ratio").get<double>();
    if (ls.contains("tol")) cfg.lasso.tol = ls.at("tol").get<double>();
    if (ls.contains("max_sweeps")) cfg.lasso.max_sweeps = ls.at("max_sweeps").get<std::size_t>();
  }

  try {
    cfg.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

json experiment_config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["n"] = cfg.n_values;
  j["q"] = cfg.q_values;
  j["replicates"] = cfg.replicates;
  j["seed"] = cfg.seed;
  json est = json::array();
  for (EstimatorKind e : cfg.estimators) est.push_back(estimator_name(e));
  j["estimators"] = est;

  json nz;
  bool ar1 = true;
  for (const auto& v : cfg.noise.variants) ar1 = ar1 && v.phi.size() == 1;
  if (ar1) {
    nz["kind"] = "ar1";
    json phis = json::array();
    for (const auto& v : cfg.noise.variants) phis.push_back(v.phi[0]);
    nz["phi1"] = phis;
  } else {
    nz["kind"] = "arm";
    json coeffs = json::array();
    for (const auto& v : cfg.noise.variants) coeffs.push_back(v.phi);
    nz["coeffs"] = coeffs;
  }
  nz["sigma2"] = cfg.noise.sigma2;
  j["noise"] = nz;

  json ds;
  switch (cfg.design.kind) {
    case DesignKind::BalancedAnova2:
      ds["kind"] = "balanced_anova2";
      break;
    case DesignKind::UnbalancedAnova2:
      ds["kind"] = "unbalanced_anova2";
      ds["r"] = cfg.design.r;
      break;
    case DesignKind::CorrelatedRegression:
      ds["kind"] = "correlated_regression";
      ds["p"] = cfg.design.p;
      ds["rho"] = cfg.design.rho;
      break;
  }
  j["design"] = ds;

  json sg;
  sg["c1"] = cfg.signal.c1;
  sg["c2"] = cfg.signal.c2;
  sg["m3"] = cfg.signal.m3;
  sg["placement"] = cfg.signal.placement == Placement::SpacedInterior ? "spaced_interior" : "uniform";
  if (cfg.signal.support_size_override) sg["support_size"] = *cfg.signal.support_size_override;
  j["signal"] = sg;

  json ls;
  ls["n_lambda"] = cfg.lasso.n_lambda;
  ls["lambda_min_ratio"] = cfg.lasso.lambda_min_ratio;
  ls["tol"] = cfg.lasso.tol;
  ls["max_sweeps"] = cfg.lasso.max_sweeps;
  j["lasso"] = ls;
  return j;
}

std::string fnv1a64_hex(const std::string& data) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

std::string config_digest(const json& canonical) { return fnv1a64_hex(canonical.dump()); }

void write_manifest(const std::string& path, const Manifest& m) {
  json j;
  j["command"] = m.command;
  j["config_digest"] = m.config_digest;
  j["seed"] = m.seed;
  j["tool_version"] = m.tool_version;
  j["started_utc"] = m.started_utc;
  j["finished_utc"] = m.finished_utc;
  j["outputs"] = m.outputs;
  j["complete"] = m.complete;
  j["threads"] = m.threads;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(path + ": cannot open for writing");
  out << j.dump(2) << '\n';
}

std::string utc_timestamp_now() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return std::string(buf);
}

}  // namespace wlasso
