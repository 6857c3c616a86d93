#include "objdose/config.hpp"

#include <fstream>
#include <initializer_list>

namespace objdose {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& context,
                std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(context + ": expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* key : allowed) {
      if (it.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) throw ConfigError(context + ": unknown key '" + it.key() + "'");
  }
}

double require_number(const json& v, const std::string& context) {
  if (!v.is_number()) throw ConfigError(context + ": expected a number");
  return v.get<double>();
}

int require_int(const json& v, const std::string& context) {
  if (!v.is_number_integer()) throw ConfigError(context + ": expected an integer");
  return v.get<int>();
}

std::string require_string(const json& v, const std::string& context) {
  if (!v.is_string()) throw ConfigError(context + ": expected a string");
  return v.get<std::string>();
}

bool require_bool(const json& v, const std::string& context) {
  if (!v.is_boolean()) throw ConfigError(context + ": expected a boolean");
  return v.get<bool>();
}

/// "auto" maps to 0 (resolved later); otherwise a positive number.
double auto_or_positive(const json& v, const std::string& context) {
  if (v.is_string()) {
    if (v.get<std::string>() == "auto") return 0.0;
    throw ConfigError(context + ": expected a positive number or \"auto\"");
  }
  const double x = require_number(v, context);
  if (!(x > 0.0)) throw ConfigError(context + ": must be positive");
  return x;
}

GpsOptions parse_gps_block(const json& j, GpsOptions base) {
  check_keys(j, "gps",
             {"kind", "floor", "treatment_bandwidth", "covariate_bandwidths", "constant_value"});
  if (j.contains("kind")) {
    try {
      base.kind = parse_gps_kind(require_string(j.at("kind"), "gps.kind"));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("gps.kind: ") + e.what());
    }
  }
  if (j.contains("floor")) {
    base.floor = require_number(j.at("floor"), "gps.floor");
    if (!(base.floor > 0.0)) throw ConfigError("gps.floor: must be positive");
  }
  if (j.contains("treatment_bandwidth"))
    base.treatment_bandwidth = auto_or_positive(j.at("treatment_bandwidth"),
                                                "gps.treatment_bandwidth");
  if (j.contains("covariate_bandwidths")) {
    const json& v = j.at("covariate_bandwidths");
    base.covariate_bandwidths.clear();
    if (v.is_string()) {
      if (v.get<std::string>() != "auto")
        throw ConfigError("gps.covariate_bandwidths: expected an array or \"auto\"");
    } else if (v.is_array()) {
      for (const auto& e : v)
        base.covariate_bandwidths.push_back(
            require_number(e, "gps.covariate_bandwidths entry"));
    } else {
      throw ConfigError("gps.covariate_bandwidths: expected an array or \"auto\"");
    }
  }
  if (j.contains("constant_value")) {
    base.constant_value = require_number(j.at("constant_value"), "gps.constant_value");
    if (!(base.constant_value > 0.0)) throw ConfigError("gps.constant_value: must be positive");
  }
  return base;
}

OutcomeOptions parse_outcome_block(const json& j, OutcomeOptions base) {
  check_keys(j, "outcome", {"kind", "model_a_basis", "bandwidth"});
  if (j.contains("kind")) {
    try {
      base.kind = parse_outcome_kind(require_string(j.at("kind"), "outcome.kind"));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("outcome.kind: ") + e.what());
    }
  }
  if (j.contains("model_a_basis"))
    base.model_a_basis = require_bool(j.at("model_a_basis"), "outcome.model_a_basis");
  if (j.contains("bandwidth"))
    base.bandwidth = auto_or_positive(j.at("bandwidth"), "outcome.bandwidth");
  return base;
}

void parse_kernel_block(const json& j, EstimatorSpec& spec) {
  check_keys(j, "kernel", {"family", "h"});
  if (j.contains("family")) {
    try {
      spec.kernel_family = parse_kernel_family(require_string(j.at("family"), "kernel.family"));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("kernel.family: ") + e.what());
    }
  }
  if (j.contains("h")) spec.kernel_h = auto_or_positive(j.at("h"), "kernel.h");
}

void parse_estimator_block(const json& j, EstimatorSpec& spec) {
  check_keys(j, "estimator", {"kind", "folds", "corrector_at_observed_t"});
  if (j.contains("kind")) {
    try {
      spec.kind = parse_estimator_kind(require_string(j.at("kind"), "estimator.kind"));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("estimator.kind: ") + e.what());
    }
  }
  if (j.contains("folds")) {
    spec.folds = require_int(j.at("folds"), "estimator.folds");
    if (spec.folds < 2) throw ConfigError("estimator.folds: must be >= 2");
  }
  if (j.contains("corrector_at_observed_t"))
    spec.corrector_at_observed_t =
        require_bool(j.at("corrector_at_observed_t"), "estimator.corrector_at_observed_t");
}

EstimatorSpec parse_arm(const json& j, const EstimatorSpec& base) {
  EstimatorSpec spec = base;
  if (j.is_string()) {
    try {
      spec.kind = parse_estimator_kind(j.get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("estimators: ") + e.what());
    }
    spec.name = j.get<std::string>();
    return spec;
  }
  check_keys(j, "estimators entry",
             {"name", "estimator", "gps", "outcome", "kernel", "folds",
              "corrector_at_observed_t"});
  if (j.contains("estimator")) {
    try {
      spec.kind = parse_estimator_kind(require_string(j.at("estimator"), "estimators.estimator"));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("estimators.estimator: ") + e.what());
    }
  }
  if (j.contains("gps")) spec.nuisance.gps = parse_gps_block(j.at("gps"), spec.nuisance.gps);
  if (j.contains("outcome"))
    spec.nuisance.outcome = parse_outcome_block(j.at("outcome"), spec.nuisance.outcome);
  if (j.contains("kernel")) parse_kernel_block(j.at("kernel"), spec);
  if (j.contains("folds")) {
    spec.folds = require_int(j.at("folds"), "estimators.folds");
    if (spec.folds < 2) throw ConfigError("estimators.folds: must be >= 2");
  }
  if (j.contains("corrector_at_observed_t"))
    spec.corrector_at_observed_t =
        require_bool(j.at("corrector_at_observed_t"), "estimators.corrector_at_observed_t");
  spec.name = j.contains("name") ? require_string(j.at("name"), "estimators.name")
                                 : to_string(spec.kind);
  return spec;
}

json bandwidth_json(double h) {
  if (h > 0.0) return json(h);
  return json("auto");
}

json gps_to_json(const GpsOptions& g) {
  json out;
  out["kind"] = to_string(g.kind);
  out["floor"] = g.floor;
  out["treatment_bandwidth"] = bandwidth_json(g.treatment_bandwidth);
  if (g.covariate_bandwidths.empty()) {
    out["covariate_bandwidths"] = "auto";
  } else {
    out["covariate_bandwidths"] = g.covariate_bandwidths;
  }
  out["constant_value"] = g.constant_value;
  return out;
}

json outcome_to_json(const OutcomeOptions& o) {
  json out;
  out["kind"] = to_string(o.kind);
  out["model_a_basis"] = o.model_a_basis;
  out["bandwidth"] = bandwidth_json(o.bandwidth);
  return out;
}

json spec_to_json(const EstimatorSpec& s) {
  json out;
  out["name"] = s.label();
  out["estimator"] = to_string(s.kind);
  out["kernel"] = {{"family", to_string(s.kernel_family)}, {"h", bandwidth_json(s.kernel_h)}};
  out["folds"] = s.folds;
  out["corrector_at_observed_t"] = s.corrector_at_observed_t;
  out["gps"] = gps_to_json(s.nuisance.gps);
  out["outcome"] = outcome_to_json(s.nuisance.outcome);
  return out;
}

}  // namespace

RunConfig parse_config(const json& j) {
  check_keys(j, "config",
             {"mode", "seed", "out", "threads", "grid", "t_grid", "dgp", "input", "estimator",
              "estimators", "kernel", "gps", "outcome", "inference", "metrics"});
  RunConfig c;
  if (!j.contains("mode")) throw ConfigError("config: missing required key 'mode'");
  c.mode = require_string(j.at("mode"), "mode");
  if (c.mode != "simulate" && c.mode != "estimate" && c.mode != "infer")
    throw ConfigError("mode: must be one of simulate, estimate, infer");

  if (j.contains("seed")) {
    const json& s = j.at("seed");
    if (!s.is_number_integer() && !s.is_number_unsigned())
      throw ConfigError("seed: expected an integer");
    c.seed = s.get<std::uint64_t>();
  }
  if (j.contains("out")) c.out = require_string(j.at("out"), "out");
  if (j.contains("threads")) {
    c.threads = require_int(j.at("threads"), "threads");
    if (c.threads < 1) throw ConfigError("threads: must be >= 1");
  }
  if (j.contains("grid")) {
    check_keys(j.at("grid"), "grid", {"m"});
    if (j.at("grid").contains("m")) {
      c.grid_m = require_int(j.at("grid").at("m"), "grid.m");
      if (c.grid_m < 2) throw ConfigError("grid.m: must be >= 2");
    }
  }

  if (j.contains("t_grid")) {
    const json& g = j.at("t_grid");
    check_keys(g, "t_grid", {"min", "max", "count", "lo_percentile", "hi_percentile"});
    const bool has_min = g.contains("min") && !g.at("min").is_string();
    const bool has_max = g.contains("max") && !g.at("max").is_string();
    if (g.contains("min") && g.at("min").is_string() &&
        g.at("min").get<std::string>() != "auto")
      throw ConfigError("t_grid.min: expected a number or \"auto\"");
    if (g.contains("max") && g.at("max").is_string() &&
        g.at("max").get<std::string>() != "auto")
      throw ConfigError("t_grid.max: expected a number or \"auto\"");
    if (has_min != has_max)
      throw ConfigError("t_grid: min and max must both be numbers or both \"auto\"");
    if (has_min) {
      c.t_grid.automatic = false;
      c.t_grid.min = require_number(g.at("min"), "t_grid.min");
      c.t_grid.max = require_number(g.at("max"), "t_grid.max");
      if (!(c.t_grid.max >= c.t_grid.min)) throw ConfigError("t_grid: max must be >= min");
    }
    if (g.contains("count")) {
      c.t_grid.count = require_int(g.at("count"), "t_grid.count");
      if (c.t_grid.count < 1) throw ConfigError("t_grid.count: must be >= 1");
    }
    if (g.contains("lo_percentile"))
      c.t_grid.lo_percentile = require_number(g.at("lo_percentile"), "t_grid.lo_percentile");
    if (g.contains("hi_percentile"))
      c.t_grid.hi_percentile = require_number(g.at("hi_percentile"), "t_grid.hi_percentile");
    if (!(c.t_grid.lo_percentile >= 0.0 && c.t_grid.hi_percentile <= 1.0 &&
          c.t_grid.lo_percentile < c.t_grid.hi_percentile))
      throw ConfigError("t_grid: percentiles must satisfy 0 <= lo < hi <= 1");
  }

  if (j.contains("dgp")) {
    const json& d = j.at("dgp");
    check_keys(d, "dgp", {"scenario", "model", "n", "sigma", "replications"});
    c.has_dgp = true;
    if (d.contains("scenario")) c.dgp.gps_scenario = require_int(d.at("scenario"), "dgp.scenario");
    if (d.contains("model")) {
      const std::string m = require_string(d.at("model"), "dgp.model");
      if (m != "A" && m != "B") throw ConfigError("dgp.model: must be \"A\" or \"B\"");
      c.dgp.outcome_model = m[0];
    }
    if (d.contains("n")) c.dgp.n = require_int(d.at("n"), "dgp.n");
    if (d.contains("sigma")) c.dgp.sigma = require_number(d.at("sigma"), "dgp.sigma");
    if (d.contains("replications")) {
      c.replications = require_int(d.at("replications"), "dgp.replications");
      if (c.replications < 1) throw ConfigError("dgp.replications: must be >= 1");
    }
    c.dgp.grid_m = c.grid_m;
    c.dgp.seed = c.seed;
    try {
      c.dgp.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("dgp: ") + e.what());
    }
  }

  if (j.contains("input")) {
    const json& in = j.at("input");
    check_keys(in, "input", {"path", "format", "smoothing_bandwidth", "m", "discrete_columns"});
    c.has_input = true;
    if (!in.contains("path")) throw ConfigError("input: missing required key 'path'");
    c.input.path = require_string(in.at("path"), "input.path");
    if (in.contains("format")) {
      c.input.format = require_string(in.at("format"), "input.format");
      if (c.input.format != "life_table" && c.input.format != "pre_embedded")
        throw ConfigError("input.format: must be life_table or pre_embedded");
    }
    if (in.contains("smoothing_bandwidth"))
      c.input.smoothing_bandwidth =
          require_number(in.at("smoothing_bandwidth"), "input.smoothing_bandwidth");
    if (in.contains("m")) {
      c.input.m = require_int(in.at("m"), "input.m");
      if (c.input.m < 2) throw ConfigError("input.m: must be >= 2");
    } else {
      c.input.m = c.grid_m;
    }
    if (in.contains("discrete_columns")) {
      if (!in.at("discrete_columns").is_array())
        throw ConfigError("input.discrete_columns: expected an array");
      for (const auto& e : in.at("discrete_columns")) {
        const int col = require_int(e, "input.discrete_columns entry");
        if (col < 1) throw ConfigError("input.discrete_columns: indices are 1-based");
        c.input.discrete_columns.push_back(col);
      }
    }
  }

  if (c.mode == "simulate") {
    if (!c.has_dgp) throw ConfigError("simulate mode requires a dgp block");
    if (c.has_input) throw ConfigError("simulate mode does not take an input block");
  } else {
    if (c.has_dgp == c.has_input)
      throw ConfigError(c.mode + " mode requires exactly one of dgp or input");
  }

  // Shared nuisance blocks seed the base spec and every arm.
  if (j.contains("gps")) c.base_spec.nuisance.gps = parse_gps_block(j.at("gps"), {});
  if (j.contains("outcome"))
    c.base_spec.nuisance.outcome = parse_outcome_block(j.at("outcome"), {});
  if (j.contains("kernel")) parse_kernel_block(j.at("kernel"), c.base_spec);
  if (j.contains("estimator")) parse_estimator_block(j.at("estimator"), c.base_spec);

  if (j.contains("estimators")) {
    if (c.mode != "simulate")
      throw ConfigError("estimators: arm lists are only valid in simulate mode");
    if (!j.at("estimators").is_array() || j.at("estimators").empty())
      throw ConfigError("estimators: expected a nonempty array");
    for (const auto& e : j.at("estimators")) c.arms.push_back(parse_arm(e, c.base_spec));
  } else if (c.mode == "simulate") {
    for (const char* kind : {"or", "ipw", "dr", "cf"}) {
      EstimatorSpec spec = c.base_spec;
      spec.kind = parse_estimator_kind(kind);
      spec.name = kind;
      c.arms.push_back(spec);
    }
  }

  if (j.contains("inference")) {
    const json& inf = j.at("inference");
    check_keys(inf, "inference", {"alpha", "hulc", "band"});
    if (inf.contains("alpha")) {
      c.inference.alpha = require_number(inf.at("alpha"), "inference.alpha");
      if (!(c.inference.alpha > 0.0 && c.inference.alpha < 1.0))
        throw ConfigError("inference.alpha: must be in (0,1)");
    }
    if (inf.contains("hulc")) {
      const json& h = inf.at("hulc");
      check_keys(h, "inference.hulc", {"delta_bias", "cap", "t", "t_prime"});
      if (h.contains("delta_bias")) {
        c.inference.hulc.delta_bias = require_number(h.at("delta_bias"),
                                                     "inference.hulc.delta_bias");
        if (!(c.inference.hulc.delta_bias >= 0.0 && c.inference.hulc.delta_bias < 0.5))
          throw ConfigError("inference.hulc.delta_bias: must be in [0, 0.5)");
      }
      if (h.contains("cap")) {
        c.inference.hulc.cap = require_int(h.at("cap"), "inference.hulc.cap");
        if (c.inference.hulc.cap < 1) throw ConfigError("inference.hulc.cap: must be >= 1");
      }
      const bool has_t = h.contains("t") && !h.at("t").is_string();
      const bool has_tp = h.contains("t_prime") && !h.at("t_prime").is_string();
      if (has_t != has_tp)
        throw ConfigError("inference.hulc: t and t_prime must both be set or both \"auto\"");
      if (has_t) {
        c.inference.hulc.auto_levels = false;
        c.inference.hulc.t = require_number(h.at("t"), "inference.hulc.t");
        c.inference.hulc.t_prime = require_number(h.at("t_prime"), "inference.hulc.t_prime");
      }
    }
    if (inf.contains("band")) {
      check_keys(inf.at("band"), "inference.band", {"bias_diagnostic"});
      if (inf.at("band").contains("bias_diagnostic"))
        c.inference.bias_diagnostic =
            require_bool(inf.at("band").at("bias_diagnostic"), "inference.band.bias_diagnostic");
    }
  }

  if (j.contains("metrics")) {
    if (!j.at("metrics").is_array()) throw ConfigError("metrics: expected an array");
    c.metrics.clear();
    for (const auto& e : j.at("metrics")) {
      const std::string m = require_string(e, "metrics entry");
      if (m != "mise" && m != "loo_mse" && m != "coverage" && m != "band_width")
        throw ConfigError("metrics: unknown metric '" + m + "'");
      c.metrics.push_back(m);
    }
    if (c.metrics.empty()) throw ConfigError("metrics: expected at least one metric");
  }

  // Canonical resolved document. Thread count is an execution parameter, not
  // part of the estimand: leaving it out keeps outputs byte-identical across
  // thread counts.
  json r;
  r["mode"] = c.mode;
  r["seed"] = c.seed;
  r["out"] = c.out;
  r["grid"] = {{"m", c.grid_m}};
  if (c.t_grid.automatic) {
    r["t_grid"] = {{"min", "auto"},
                   {"max", "auto"},
                   {"count", c.t_grid.count},
                   {"lo_percentile", c.t_grid.lo_percentile},
                   {"hi_percentile", c.t_grid.hi_percentile}};
  } else {
    r["t_grid"] = {{"min", c.t_grid.min}, {"max", c.t_grid.max}, {"count", c.t_grid.count}};
  }
  if (c.has_dgp) {
    r["dgp"] = {{"scenario", c.dgp.gps_scenario},
                {"model", std::string(1, c.dgp.outcome_model)},
                {"n", c.dgp.n},
                {"sigma", c.dgp.sigma},
                {"replications", c.replications}};
  }
  if (c.has_input) {
    r["input"] = {{"path", c.input.path},
                  {"format", c.input.format},
                  {"smoothing_bandwidth", c.input.smoothing_bandwidth},
                  {"m", c.input.m},
                  {"discrete_columns", c.input.discrete_columns}};
  }
  if (c.mode == "simulate") {
    r["estimators"] = json::array();
    for (const auto& arm : c.arms) r["estimators"].push_back(spec_to_json(arm));
    r["metrics"] = c.metrics;
  } else {
    r["estimator"] = spec_to_json(c.base_spec);
  }
  json hulc = {{"delta_bias", c.inference.hulc.delta_bias}, {"cap", c.inference.hulc.cap}};
  if (c.inference.hulc.auto_levels) {
    hulc["t"] = "auto";
    hulc["t_prime"] = "auto";
  } else {
    hulc["t"] = c.inference.hulc.t;
    hulc["t_prime"] = c.inference.hulc.t_prime;
  }
  r["inference"] = {{"alpha", c.inference.alpha},
                    {"hulc", hulc},
                    {"band", {{"bias_diagnostic", c.inference.bias_diagnostic}}}};
  c.resolved = r;
  return c;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }
  return parse_config(j);
}

std::string config_hash(const json& resolved) {
  const std::string dump = resolved.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : dump) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace objdose
