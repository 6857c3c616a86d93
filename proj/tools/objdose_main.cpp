// Command-line front end: simulate | estimate | infer | ingest-check.
// Flags mirror the run-configuration keys; --config supplies a JSON document
// that flags override. Exit codes: 0 success, 2 config error, 3 data error,
// 4 numerical failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <iostream>
#include <optional>
#include <sstream>

#include "objdose/config.hpp"
#include "objdose/io.hpp"

namespace {

using nlohmann::json;

struct CliOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> threads;
  std::optional<int> grid_m;

  std::optional<double> t_min, t_max;
  std::optional<int> t_count;

  std::optional<int> scenario, n, replications;
  std::optional<std::string> model;
  std::optional<double> sigma;

  std::optional<std::string> input, format;
  std::optional<double> smoothing_bandwidth;
  std::vector<int> discrete_columns;

  std::optional<std::string> estimator;
  std::vector<std::string> estimators;
  std::optional<int> folds;
  bool corrector_at_observed_t = false;

  std::optional<std::string> kernel_family;
  std::optional<std::string> kernel_h;  // number or "auto"

  std::optional<std::string> gps_kind;
  std::optional<double> gps_floor;
  std::optional<double> gps_constant;

  std::optional<std::string> outcome_kind;
  bool model_a_basis = false;
  std::optional<double> outcome_bandwidth;

  std::optional<double> alpha;
  std::optional<double> hulc_t, hulc_t_prime, hulc_delta;
  bool bias_diagnostic = false;

  std::vector<std::string> metrics;
};

void add_common(CLI::App* cmd, CliOptions& o) {
  cmd->add_option("--config", o.config_path, "JSON configuration file");
  cmd->add_option("--seed", o.seed, "master random seed");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--threads", o.threads, "worker thread count");
  cmd->add_option("--grid-m", o.grid_m, "Hilbert grid length M");
  cmd->add_option("--t-min", o.t_min, "treatment grid lower bound");
  cmd->add_option("--t-max", o.t_max, "treatment grid upper bound");
  cmd->add_option("--t-count", o.t_count, "treatment grid size");
  cmd->add_option("--kernel-family", o.kernel_family, "gaussian or epanechnikov");
  cmd->add_option("--kernel-h", o.kernel_h, "kernel bandwidth or 'auto'");
  cmd->add_option("--gps-kind", o.gps_kind,
                  "linear_gaussian, kernel_conditional, or constant");
  cmd->add_option("--gps-floor", o.gps_floor, "positivity trim for the propensity density");
  cmd->add_option("--gps-constant", o.gps_constant, "density value for gps kind 'constant'");
  cmd->add_option("--outcome-kind", o.outcome_kind, "global_basis, local_linear, or zero");
  cmd->add_flag("--model-a-basis", o.model_a_basis, "add the x3^2 feature column");
  cmd->add_option("--outcome-bandwidth", o.outcome_bandwidth, "local_linear bandwidth");
  cmd->add_option("--folds", o.folds, "cross-fitting fold count");
  cmd->add_flag("--corrector-at-observed-t", o.corrector_at_observed_t,
                "evaluate the correction residual at the observed treatment");
}

void add_dgp(CLI::App* cmd, CliOptions& o) {
  cmd->add_option("--scenario", o.scenario, "treatment scenario (1, 2, or 3)");
  cmd->add_option("--model", o.model, "outcome model (A or B)");
  cmd->add_option("--n", o.n, "sample size per replication");
  cmd->add_option("--sigma", o.sigma, "outcome scale");
}

void add_input(CLI::App* cmd, CliOptions& o) {
  cmd->add_option("--input", o.input, "input CSV path");
  cmd->add_option("--format", o.format, "life_table or pre_embedded");
  cmd->add_option("--smoothing-bandwidth", o.smoothing_bandwidth,
                  "life-table smoothing bandwidth in years");
  cmd->add_option("--discrete-columns", o.discrete_columns,
                  "1-based covariate columns treated as discrete")
      ->delimiter(',');
}

json merge_overrides(const CliOptions& o, const std::string& mode) {
  json j = json::object();
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in) throw objdose::ConfigError("cannot open config file: " + o.config_path);
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw objdose::ConfigError(std::string("config parse error: ") + e.what());
    }
    if (!j.is_object()) throw objdose::ConfigError("config: expected a JSON object");
  }
  j["mode"] = mode;
  if (o.seed) j["seed"] = *o.seed;
  if (o.out) j["out"] = *o.out;
  if (o.threads) j["threads"] = *o.threads;
  if (o.grid_m) j["grid"]["m"] = *o.grid_m;
  if (o.t_min) j["t_grid"]["min"] = *o.t_min;
  if (o.t_max) j["t_grid"]["max"] = *o.t_max;
  if (o.t_count) j["t_grid"]["count"] = *o.t_count;

  if (o.scenario) j["dgp"]["scenario"] = *o.scenario;
  if (o.model) j["dgp"]["model"] = *o.model;
  if (o.n) j["dgp"]["n"] = *o.n;
  if (o.sigma) j["dgp"]["sigma"] = *o.sigma;
  if (o.replications) j["dgp"]["replications"] = *o.replications;

  if (o.input) j["input"]["path"] = *o.input;
  if (o.format) j["input"]["format"] = *o.format;
  if (o.smoothing_bandwidth) j["input"]["smoothing_bandwidth"] = *o.smoothing_bandwidth;
  if (!o.discrete_columns.empty()) j["input"]["discrete_columns"] = o.discrete_columns;

  if (o.estimator) j["estimator"]["kind"] = *o.estimator;
  if (o.folds) j["estimator"]["folds"] = *o.folds;
  if (o.corrector_at_observed_t) j["estimator"]["corrector_at_observed_t"] = true;
  if (!o.estimators.empty()) j["estimators"] = o.estimators;

  if (o.kernel_family) j["kernel"]["family"] = *o.kernel_family;
  if (o.kernel_h) {
    try {
      std::size_t pos = 0;
      const double h = std::stod(*o.kernel_h, &pos);
      if (pos == o.kernel_h->size()) {
        j["kernel"]["h"] = h;
      } else {
        j["kernel"]["h"] = *o.kernel_h;
      }
    } catch (const std::exception&) {
      j["kernel"]["h"] = *o.kernel_h;
    }
  }

  if (o.gps_kind) j["gps"]["kind"] = *o.gps_kind;
  if (o.gps_floor) j["gps"]["floor"] = *o.gps_floor;
  if (o.gps_constant) j["gps"]["constant_value"] = *o.gps_constant;

  if (o.outcome_kind) j["outcome"]["kind"] = *o.outcome_kind;
  if (o.model_a_basis) j["outcome"]["model_a_basis"] = true;
  if (o.outcome_bandwidth) j["outcome"]["bandwidth"] = *o.outcome_bandwidth;

  if (o.alpha) j["inference"]["alpha"] = *o.alpha;
  if (o.hulc_t) j["inference"]["hulc"]["t"] = *o.hulc_t;
  if (o.hulc_t_prime) j["inference"]["hulc"]["t_prime"] = *o.hulc_t_prime;
  if (o.hulc_delta) j["inference"]["hulc"]["delta_bias"] = *o.hulc_delta;
  if (o.bias_diagnostic) j["inference"]["band"]["bias_diagnostic"] = true;

  if (!o.metrics.empty()) j["metrics"] = o.metrics;
  return j;
}

int execute(const CliOptions& o, const std::string& mode) {
  objdose::RunConfig config;
  try {
    config = objdose::parse_config(merge_overrides(o, mode));
  } catch (const objdose::ConfigError& e) {
    std::cerr << "error (config): " << e.what() << "\n";
    return 2;
  }
  return objdose::run(config);
}

int ingest_check(const CliOptions& o) {
  if (!o.input) {
    std::cerr << "error (config): ingest-check requires --input\n";
    return 2;
  }
  const std::string format = o.format.value_or("life_table");
  const double bw = o.smoothing_bandwidth.value_or(2.0);
  const int m = o.grid_m.value_or(100);
  try {
    objdose::ObservationSet data;
    if (format == "life_table") {
      data = objdose::ingest_life_tables(*o.input, bw, m);
    } else if (format == "pre_embedded") {
      data = objdose::ingest_pre_embedded(*o.input);
    } else {
      std::cerr << "error (config): unknown format " << format << "\n";
      return 2;
    }
    json summary;
    summary["units"] = data.n();
    summary["covariates"] = data.p();
    summary["grid_m"] = data.m();
    summary["treatment_min"] = data.treatment.minCoeff();
    summary["treatment_max"] = data.treatment.maxCoeff();
    summary["groups"] = data.group_levels();
    std::cout << summary.dump(2) << "\n";
    return 0;
  } catch (const objdose::DataError& e) {
    std::cerr << "error (data): " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error (numerical): " << e.what() << "\n";
    return 4;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Causal dose-response estimation for metric-space outcomes"};
  app.require_subcommand(1);

  CliOptions sim_opts, est_opts, inf_opts, chk_opts;

  CLI::App* sim = app.add_subcommand("simulate", "run the Monte Carlo simulation laboratory");
  add_common(sim, sim_opts);
  add_dgp(sim, sim_opts);
  sim->add_option("--replications", sim_opts.replications, "Monte Carlo replication count");
  sim->add_option("--estimators", sim_opts.estimators, "estimator arms (or,ipw,dr,cf)")
      ->delimiter(',');
  sim->add_option("--metrics", sim_opts.metrics,
                  "metrics: mise, loo_mse, coverage, band_width")
      ->delimiter(',');
  sim->add_option("--alpha", sim_opts.alpha, "level for coverage / band width metrics");

  CLI::App* est = app.add_subcommand("estimate", "estimate dose-response curves on a dataset");
  add_common(est, est_opts);
  add_dgp(est, est_opts);
  add_input(est, est_opts);
  est->add_option("--estimator", est_opts.estimator, "or, ipw, dr, or cf");

  CLI::App* inf = app.add_subcommand("infer", "confidence bands and HulC intervals");
  add_common(inf, inf_opts);
  add_dgp(inf, inf_opts);
  add_input(inf, inf_opts);
  inf->add_option("--estimator", inf_opts.estimator, "or, ipw, dr, or cf");
  inf->add_option("--alpha", inf_opts.alpha, "confidence level complement");
  inf->add_option("--hulc-t", inf_opts.hulc_t, "upper contrast treatment level");
  inf->add_option("--hulc-t-prime", inf_opts.hulc_t_prime, "lower contrast treatment level");
  inf->add_option("--hulc-delta", inf_opts.hulc_delta, "assumed maximum median bias");
  inf->add_flag("--bias-diagnostic", inf_opts.bias_diagnostic,
                "emit the plug-in smoothing-bias proxy");

  CLI::App* chk = app.add_subcommand("ingest-check", "validate an input CSV and summarize it");
  chk->add_option("--input", chk_opts.input, "input CSV path")->required();
  chk->add_option("--format", chk_opts.format, "life_table or pre_embedded");
  chk->add_option("--smoothing-bandwidth", chk_opts.smoothing_bandwidth,
                  "life-table smoothing bandwidth in years");
  chk->add_option("--grid-m", chk_opts.grid_m, "Hilbert grid length M");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed()) return execute(sim_opts, "simulate");
    if (est->parsed()) return execute(est_opts, "estimate");
    if (inf->parsed()) return execute(inf_opts, "infer");
    if (chk->parsed()) return ingest_check(chk_opts);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 2;
}
