#ifndef OBJDOSE_CONFIG_HPP
#define OBJDOSE_CONFIG_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "objdose/estimators.hpp"
#include "objdose/simlab.hpp"

namespace objdose {

/// Invalid or inconsistent run configuration (exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed or pathological input data (exit code 3).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TGridSpec {
  bool automatic = true;     // derive the range from treatment percentiles
  double min = 0.0;
  double max = 0.0;
  int count = 9;
  double lo_percentile = 0.10;
  double hi_percentile = 0.90;
};

struct InputSpec {
  std::string path;
  std::string format = "life_table";  // or "pre_embedded"
  double smoothing_bandwidth = 2.0;
  int m = 100;
  std::vector<int> discrete_columns;  // 1-based covariate indices
};

struct HulcConfig {
  double delta_bias = 0.0;
  int cap = 30;
  bool auto_levels = true;  // contrast at the 5% / 95% treatment percentiles
  double t = 0.0;
  double t_prime = 0.0;
};

struct InferenceConfig {
  double alpha = 0.05;
  HulcConfig hulc;
  bool bias_diagnostic = false;
};

struct RunConfig {
  std::string mode;  // simulate | estimate | infer
  std::uint64_t seed = 1;
  std::string out = "objdose_out";
  int threads = 1;
  int grid_m = 100;
  TGridSpec t_grid;

  bool has_dgp = false;
  DgpSpec dgp;
  int replications = 100;

  bool has_input = false;
  InputSpec input;

  EstimatorSpec base_spec;          // estimate / infer modes
  std::vector<EstimatorSpec> arms;  // simulate mode
  InferenceConfig inference;
  std::vector<std::string> metrics = {"mise", "loo_mse"};

  nlohmann::json resolved;  // fully-resolved configuration for the manifest
};

/// Parses and validates a configuration document. Unknown keys are rejected
/// at every nesting level.
RunConfig parse_config(const nlohmann::json& j);

RunConfig load_config_file(const std::string& path);

/// FNV-1a hash of the canonical dump, as a hex string.
std::string config_hash(const nlohmann::json& resolved);

}  // namespace objdose

#endif
