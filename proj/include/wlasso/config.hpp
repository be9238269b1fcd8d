#pragma once

#include <cstdint>
#include <istream>
#include <string>
#include <vector>

#include "json.hpp"
#include "wlasso/simulate.hpp"

namespace wlasso {

struct ConfigError : Error {
  using Error::Error;
};

/// Minimal TOML subset: [section] / [a.b] tables, key = value with strings,
/// numbers, booleans and (possibly nested) single-line arrays, # comments.
nlohmann::json parse_toml_subset(std::istream& in, const std::string& name);

/// Dispatch on extension: .json parsed as JSON, anything else as TOML subset.
nlohmann::json load_config_file(const std::string& path);

ExperimentConfig experiment_config_from_json(const nlohmann::json& j);

/// Canonical form: every semantic field present, keys sorted by the json
/// object ordering; the digest is taken over its serialization.
nlohmann::json experiment_config_to_json(const ExperimentConfig& cfg);

std::string fnv1a64_hex(const std::string& data);
std::string config_digest(const nlohmann::json& canonical);

struct Manifest {
  std::string command;
  std::string config_digest;
  std::uint64_t seed = 0;
  std::string tool_version;
  std::string started_utc;
  std::string finished_utc;
  std::vector<std::string> outputs;
  bool complete = true;
  std::size_t threads = 0;
};

void write_manifest(const std::string& path, const Manifest& m);
std::string utc_timestamp_now();

}  // namespace wlasso
