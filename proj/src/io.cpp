#include "objdose/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "objdose/embedding.hpp"
#include "objdose/frechet.hpp"
#include "objdose/rng.hpp"

namespace objdose {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
  if (std::isnan(v)) return "NA";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

double percentile(const Eigen::VectorXd& values, double p) {
  const int n = static_cast<int>(values.size());
  if (n < 1) throw std::invalid_argument("percentile: empty vector");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("percentile: p must be in [0,1]");
  std::vector<double> sorted(values.data(), values.data() + n);
  std::sort(sorted.begin(), sorted.end());
  const double h = (n - 1) * p;
  const int lo = static_cast<int>(std::floor(h));
  if (lo + 1 >= n) return sorted[n - 1];
  const double frac = h - lo;
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

Eigen::VectorXd resolve_t_grid(const TGridSpec& spec, const Eigen::VectorXd& treatment) {
  double lo = spec.min, hi = spec.max;
  if (spec.automatic) {
    if (treatment.size() < 1)
      throw std::invalid_argument("resolve_t_grid: automatic grid needs treatment values");
    lo = percentile(treatment, spec.lo_percentile);
    hi = percentile(treatment, spec.hi_percentile);
  }
  Eigen::VectorXd grid(spec.count);
  if (spec.count == 1) {
    grid[0] = 0.5 * (lo + hi);
  } else {
    for (int i = 0; i < spec.count; ++i) {
      grid[i] = lo + (hi - lo) * i / (spec.count - 1);
    }
  }
  return grid;
}

// ---------------------------------------------------------------------------
// CSV primitives
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(field);
      field.clear();
    } else if (ch != '\r') {
      field.push_back(ch);
    }
  }
  fields.push_back(field);
  return fields;
}

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += "\"\"";
    else out.push_back(ch);
  }
  out += "\"";
  return out;
}

double parse_double(const std::string& s, const std::string& context) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw DataError(context + ": cannot parse number '" + s + "'");
  }
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // binary: identical bytes on every platform
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  return out;
}

/// Quantile function of a (possibly smoothed) histogram with mass `w` on bins
/// [lo_b, hi_b), inverted on the m-point midpoint probability grid.
Eigen::VectorXd histogram_quantiles(const std::vector<double>& lo, const std::vector<double>& hi,
                                    const std::vector<double>& mass, double bandwidth, int m) {
  const int bins = static_cast<int>(lo.size());
  const Eigen::VectorXd probs = probability_grid(m);
  Eigen::VectorXd quantiles(m);

  if (bandwidth <= 1e-9) {
    // Exact piecewise-linear CDF over the bins.
    std::vector<double> cum(bins + 1, 0.0);
    for (int b = 0; b < bins; ++b) cum[b + 1] = cum[b] + mass[b];
    for (int j = 0; j < m; ++j) {
      const double p = probs[j];
      int b = 0;
      while (b < bins && cum[b + 1] < p) ++b;
      if (b >= bins) b = bins - 1;
      while (mass[b] <= 0.0 && b > 0) --b;
      if (mass[b] <= 0.0) throw DataError("histogram_quantiles: zero total mass");
      quantiles[j] = lo[b] + (p - cum[b]) / mass[b] * (hi[b] - lo[b]);
      quantiles[j] = std::clamp(quantiles[j], lo[b], hi[b]);
    }
    return quantiles;
  }

  const double a = *std::min_element(lo.begin(), lo.end()) - 3.0 * bandwidth;
  const double b = *std::max_element(hi.begin(), hi.end()) + 3.0 * bandwidth;
  const int grid_points = 2001;
  const double step = (b - a) / (grid_points - 1);
  Eigen::VectorXd density(grid_points);
  for (int g = 0; g < grid_points; ++g) {
    const double xg = a + g * step;
    double d = 0.0;
    for (int k = 0; k < bins; ++k) {
      if (mass[k] <= 0.0) continue;
      const double width = hi[k] - lo[k];
      d += mass[k] / width *
           (normal_cdf((xg - lo[k]) / bandwidth) - normal_cdf((xg - hi[k]) / bandwidth));
    }
    density[g] = d;
  }
  // Cumulative trapezoid, renormalized over the evaluation range.
  Eigen::VectorXd cum(grid_points);
  cum[0] = 0.0;
  for (int g = 1; g < grid_points; ++g) {
    cum[g] = cum[g - 1] + 0.5 * (density[g] + density[g - 1]) * step;
    if (cum[g] < cum[g - 1])
      throw DataError("histogram_quantiles: non-monotone CDF after quadrature");
  }
  const double total = cum[grid_points - 1];
  if (!(total > 0.0)) throw DataError("histogram_quantiles: zero total mass");
  cum /= total;
  for (int j = 0; j < m; ++j) {
    const double p = probs[j];
    const double* begin = cum.data();
    const double* it = std::lower_bound(begin, begin + grid_points, p);
    int hi_idx = static_cast<int>(it - begin);
    if (hi_idx <= 0) {
      quantiles[j] = a;
      continue;
    }
    if (hi_idx >= grid_points) hi_idx = grid_points - 1;
    const int lo_idx = hi_idx - 1;
    const double span = cum[hi_idx] - cum[lo_idx];
    const double frac = span > 0.0 ? (p - cum[lo_idx]) / span : 0.0;
    quantiles[j] = a + (lo_idx + frac) * step;
  }
  return quantiles;
}

}  // namespace

// ---------------------------------------------------------------------------
// Ingestion
// ---------------------------------------------------------------------------

namespace {

struct LifeTableUnit {
  std::string unit;
  std::vector<double> age_lo;
  std::vector<double> deaths;
  double treatment = 0.0;
  Eigen::RowVectorXd covariates;
  std::string group;
};

}  // namespace

ObservationSet ingest_life_tables(const std::string& path, double smoothing_bandwidth, int m) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open input file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  const std::vector<std::string> header = split_csv(line);
  if (header.size() < 5 || header[0] != "unit" || header[1] != "age_lo" ||
      header[2] != "deaths" || header[3] != "treatment")
    throw DataError(path + ": expected header unit,age_lo,deaths,treatment,x1..xp[,group]");
  int p = 0;
  std::size_t col = 4;
  while (col < header.size() && header[col] == "x" + std::to_string(p + 1)) {
    ++p;
    ++col;
  }
  if (p == 0) throw DataError(path + ": expected at least one covariate column x1");
  bool has_group = false;
  if (col < header.size()) {
    if (header[col] != "group" || col + 1 != header.size())
      throw DataError(path + ": unexpected trailing columns after covariates");
    has_group = true;
  }

  std::vector<LifeTableUnit> units;
  std::map<std::string, std::size_t> index_of;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> f = split_csv(line);
    const std::string where = path + ":" + std::to_string(line_no);
    if (static_cast<int>(f.size()) != 4 + p + (has_group ? 1 : 0))
      throw DataError(where + ": wrong number of fields");
    const std::string& unit = f[0];
    const double age_lo = parse_double(f[1], where);
    const double deaths = parse_double(f[2], where);
    if (deaths < 0.0) throw DataError(where + ": negative death count");
    const double treatment = parse_double(f[3], where);
    Eigen::RowVectorXd x(p);
    for (int j = 0; j < p; ++j) x[j] = parse_double(f[4 + j], where);
    const std::string group = has_group ? f[4 + p] : "";

    auto it = index_of.find(unit);
    if (it == index_of.end()) {
      index_of.emplace(unit, units.size());
      LifeTableUnit u;
      u.unit = unit;
      u.treatment = treatment;
      u.covariates = x;
      u.group = group;
      u.age_lo.push_back(age_lo);
      u.deaths.push_back(deaths);
      units.push_back(std::move(u));
    } else {
      LifeTableUnit& u = units[it->second];
      if (u.treatment != treatment || u.group != group || (u.covariates - x).cwiseAbs().maxCoeff() != 0.0)
        throw DataError(where + ": inconsistent unit-level values for unit " + unit);
      u.age_lo.push_back(age_lo);
      u.deaths.push_back(deaths);
    }
  }
  if (units.empty()) throw DataError(path + ": no data rows");

  ObservationSet data;
  const int n = static_cast<int>(units.size());
  data.covariates.resize(n, p);
  data.treatment.resize(n);
  data.outcomes.resize(n, m);
  data.grid_kind = GridKind::probability_grid;
  data.units.resize(n);
  if (has_group) data.groups.resize(n);

  for (int i = 0; i < n; ++i) {
    LifeTableUnit& u = units[i];
    // Sort bins by lower edge; edges must be strictly increasing.
    std::vector<int> order(u.age_lo.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = static_cast<int>(k);
    std::sort(order.begin(), order.end(),
              [&u](int a, int b) { return u.age_lo[a] < u.age_lo[b]; });
    const int bins = static_cast<int>(order.size());
    std::vector<double> lo(bins), counts(bins);
    for (int k = 0; k < bins; ++k) {
      lo[k] = u.age_lo[order[k]];
      counts[k] = u.deaths[order[k]];
      if (k > 0 && !(lo[k] > lo[k - 1]))
        throw DataError(path + ": unit " + u.unit + " has non-increasing bin edges");
    }
    std::vector<double> hi(bins);
    for (int k = 0; k + 1 < bins; ++k) hi[k] = lo[k + 1];
    hi[bins - 1] = bins > 1 ? lo[bins - 1] + (lo[bins - 1] - lo[bins - 2]) : lo[0] + 5.0;
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    if (!(total > 0.0)) throw DataError(path + ": unit " + u.unit + " has zero total count");
    std::vector<double> mass(bins);
    for (int k = 0; k < bins; ++k) mass[k] = counts[k] / total;

    data.outcomes.row(i) =
        histogram_quantiles(lo, hi, mass, smoothing_bandwidth, m).transpose();
    data.covariates.row(i) = u.covariates;
    data.treatment[i] = u.treatment;
    data.units[i] = u.unit;
    if (has_group) data.groups[i] = u.group;
  }
  data.validate();
  return data;
}

ObservationSet ingest_pre_embedded(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open input file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  const std::vector<std::string> header = split_csv(line);
  if (header.size() < 4 || header[0] != "unit" || header[1] != "treatment")
    throw DataError(path + ": expected header unit,treatment,x1..xp[,group],q1..qM");
  int p = 0;
  std::size_t col = 2;
  while (col < header.size() && header[col] == "x" + std::to_string(p + 1)) {
    ++p;
    ++col;
  }
  if (p == 0) throw DataError(path + ": expected at least one covariate column x1");
  bool has_group = false;
  if (col < header.size() && header[col] == "group") {
    has_group = true;
    ++col;
  }
  int m = 0;
  while (col < header.size() && header[col] == "q" + std::to_string(m + 1)) {
    ++m;
    ++col;
  }
  if (m < 2 || col != header.size())
    throw DataError(path + ": expected trailing quantile columns q1..qM with M >= 2");

  std::vector<std::string> units_v, groups_v;
  std::vector<double> treat_v;
  std::vector<Eigen::RowVectorXd> x_v, q_v;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> f = split_csv(line);
    const std::string where = path + ":" + std::to_string(line_no);
    if (f.size() != header.size()) throw DataError(where + ": wrong number of fields");
    units_v.push_back(f[0]);
    treat_v.push_back(parse_double(f[1], where));
    Eigen::RowVectorXd x(p);
    for (int j = 0; j < p; ++j) x[j] = parse_double(f[2 + j], where);
    x_v.push_back(x);
    if (has_group) groups_v.push_back(f[2 + p]);
    Eigen::RowVectorXd q(m);
    const int q_start = 2 + p + (has_group ? 1 : 0);
    for (int j = 0; j < m; ++j) q[j] = parse_double(f[q_start + j], where);
    for (int j = 1; j < m; ++j) {
      if (q[j] < q[j - 1] - 1e-9 * std::max(1.0, std::fabs(q[j])))
        throw DataError(where + ": quantile columns must be nondecreasing");
    }
    q_v.push_back(q);
  }
  if (units_v.empty()) throw DataError(path + ": no data rows");

  ObservationSet data;
  const int n = static_cast<int>(units_v.size());
  data.covariates.resize(n, p);
  data.treatment.resize(n);
  data.outcomes.resize(n, m);
  data.grid_kind = GridKind::probability_grid;
  data.units = units_v;
  if (has_group) data.groups = groups_v;
  for (int i = 0; i < n; ++i) {
    data.covariates.row(i) = x_v[i];
    data.treatment[i] = treat_v[i];
    data.outcomes.row(i) = q_v[i];
  }
  data.validate();
  return data;
}

void write_pre_embedded_csv(const ObservationSet& data, const std::string& path) {
  data.validate();
  std::ofstream out = open_output(path);
  const int p = data.p();
  const int m = data.m();
  out << "unit,treatment";
  for (int j = 0; j < p; ++j) out << ",x" << j + 1;
  if (!data.groups.empty()) out << ",group";
  for (int j = 0; j < m; ++j) out << ",q" << j + 1;
  out << "\n";
  for (int i = 0; i < data.n(); ++i) {
    out << (data.units.empty() ? "u" + std::to_string(i + 1) : data.units[i]);
    out << "," << format_double(data.treatment[i]);
    for (int j = 0; j < p; ++j) out << "," << format_double(data.covariates(i, j));
    if (!data.groups.empty()) out << "," << data.groups[i];
    for (int j = 0; j < m; ++j) out << "," << format_double(data.outcomes(i, j));
    out << "\n";
  }
}

Eigen::VectorXd quantile_density(const Eigen::VectorXd& quantiles) {
  const int m = static_cast<int>(quantiles.size());
  if (m < 3) throw std::invalid_argument("quantile_density: need at least 3 grid points");
  const double dp = 1.0 / m;
  Eigen::VectorXd slope(m);
  slope[0] = (-3.0 * quantiles[0] + 4.0 * quantiles[1] - quantiles[2]) / (2.0 * dp);
  slope[m - 1] =
      (3.0 * quantiles[m - 1] - 4.0 * quantiles[m - 2] + quantiles[m - 3]) / (2.0 * dp);
  for (int j = 1; j + 1 < m; ++j) slope[j] = (quantiles[j + 1] - quantiles[j - 1]) / (2.0 * dp);
  Eigen::VectorXd density(m);
  for (int j = 0; j < m; ++j) density[j] = 1.0 / std::max(slope[j], 1e-6);
  return density;
}

// ---------------------------------------------------------------------------
// Artifact emission
// ---------------------------------------------------------------------------

namespace {

double coordinate_label(GridKind kind, int j, int m) {
  return kind == GridKind::probability_grid ? (j + 0.5) / m : static_cast<double>(j + 1);
}

}  // namespace

void write_estimate_csv(const std::vector<LabeledEstimate>& estimates, const std::string& path) {
  std::ofstream out = open_output(path);
  out << "t,p,value,lower,upper,group,estimator\n";
  for (const auto& [group, est] : estimates) {
    const int m = est.m();
    for (int g = 0; g < est.grid_size(); ++g) {
      for (int j = 0; j < m; ++j) {
        const std::string v = format_double(est.theta(g, j));
        out << format_double(est.t_grid[g]) << ","
            << format_double(coordinate_label(est.grid_kind, j, m)) << "," << v << "," << v
            << "," << v << "," << group << "," << est.estimator_tag << "\n";
      }
    }
  }
}

void write_band_csv(const std::vector<LabeledBand>& bands, const std::string& path) {
  std::ofstream out = open_output(path);
  out << "t,p,value,lower,upper,group,estimator\n";
  for (const auto& [group, estimator, band] : bands) {
    const int m = static_cast<int>(band.center.cols());
    for (int g = 0; g < band.t_grid.size(); ++g) {
      for (int j = 0; j < m; ++j) {
        out << format_double(band.t_grid[g]) << ","
            << format_double(coordinate_label(band.grid_kind, j, m)) << ","
            << format_double(band.center(g, j)) << "," << format_double(band.lower(g, j)) << ","
            << format_double(band.upper(g, j)) << "," << group << "," << estimator << "\n";
      }
    }
  }
}

void write_density_csv(const std::vector<LabeledEstimate>& estimates, const std::string& path) {
  std::ofstream out = open_output(path);
  out << "t,group,estimator,p,x,density\n";
  for (const auto& [group, est] : estimates) {
    if (est.grid_kind != GridKind::probability_grid) continue;
    const int m = est.m();
    for (int g = 0; g < est.grid_size(); ++g) {
      const Eigen::VectorXd quantiles = isotonic_fit(est.theta.row(g).transpose());
      const Eigen::VectorXd density = quantile_density(quantiles);
      for (int j = 0; j < m; ++j) {
        out << format_double(est.t_grid[g]) << "," << group << "," << est.estimator_tag << ","
            << format_double((j + 0.5) / m) << "," << format_double(quantiles[j]) << ","
            << format_double(density[j]) << "\n";
      }
    }
  }
}

void write_effect_maps_csv(const std::vector<LabeledEffect>& effects, const std::string& path) {
  std::ofstream out = open_output(path);
  out << "group,estimator,t_low,t_high,p,delta,magnitude\n";
  for (const auto& [group, estimator, effect] : effects) {
    const int m = effect.delta.size();
    for (int j = 0; j < m; ++j) {
      out << group << "," << estimator << "," << format_double(effect.t_low) << ","
          << format_double(effect.t_high) << ","
          << format_double(coordinate_label(effect.delta.kind, j, m)) << ","
          << format_double(effect.delta.values[j]) << "," << format_double(effect.magnitude)
          << "\n";
    }
  }
}

void write_mc_rows_csv(const McReport& report, const std::string& path) {
  std::ofstream out = open_output(path);
  out << "replication,estimator,metric,value,failed,error\n";
  for (const auto& row : report.rows) {
    if (row.failed) {
      out << row.replication << "," << row.estimator << ",,NA,1," << csv_quote(row.error)
          << "\n";
      continue;
    }
    for (const auto& [metric, value] : row.values) {
      out << row.replication << "," << row.estimator << "," << metric << ","
          << format_double(value) << ",0,\"\"\n";
    }
  }
}

void write_mc_summary_csv(const McReport& report, const std::string& path) {
  std::ofstream out = open_output(path);
  out << "estimator,metric,mean,sd,count\n";
  for (const auto& s : report.summaries) {
    out << s.estimator << "," << s.metric << "," << format_double(s.mean) << ","
        << format_double(s.sd) << "," << s.count << "\n";
  }
}

json mc_summary_json(const McReport& report) {
  json out;
  out["replications"] = report.B_mc;
  out["failures"] = report.failures;
  out["t_grid"] = std::vector<double>(report.t_grid.data(),
                                      report.t_grid.data() + report.t_grid.size());
  out["summaries"] = json::array();
  for (const auto& s : report.summaries) {
    json row;
    row["estimator"] = s.estimator;
    row["metric"] = s.metric;
    row["mean"] = std::isnan(s.mean) ? json() : json(s.mean);
    row["sd"] = std::isnan(s.sd) ? json() : json(s.sd);
    row["count"] = s.count;
    out["summaries"].push_back(row);
  }
  return out;
}

void write_hulc_csv(const HulcInterval& interval, const std::string& path) {
  std::ofstream out = open_output(path);
  out << "p,lower,upper\n";
  const int m = static_cast<int>(interval.lower.size());
  for (int j = 0; j < m; ++j) {
    out << format_double(coordinate_label(interval.grid_kind, j, m)) << ","
        << format_double(interval.lower[j]) << "," << format_double(interval.upper[j]) << "\n";
  }
}

json hulc_json(const HulcInterval& interval) {
  json out;
  out["alpha"] = interval.alpha;
  out["delta_bias"] = interval.delta_bias;
  out["B_star"] = interval.B_star;
  out["t"] = interval.t;
  out["t_prime"] = interval.t_prime;
  out["seed"] = interval.seed;
  out["lower"] = std::vector<double>(interval.lower.data(),
                                     interval.lower.data() + interval.lower.size());
  out["upper"] = std::vector<double>(interval.upper.data(),
                                     interval.upper.data() + interval.upper.size());
  return out;
}

// ---------------------------------------------------------------------------
// Run orchestration
// ---------------------------------------------------------------------------

namespace {

void write_json_file(const json& j, const std::string& path) {
  std::ofstream out = open_output(path);
  out << j.dump(2) << "\n";
}

void write_manifest(const RunConfig& config, const std::vector<std::string>& outputs) {
  json manifest;
  manifest["config"] = config.resolved;
  manifest["config_hash"] = config_hash(config.resolved);
  manifest["seed"] = config.seed;
  manifest["outputs"] = outputs;
  write_json_file(manifest, (fs::path(config.out) / "manifest.json").string());
}

void write_error_record(const std::string& out_dir, const std::string& type,
                        const std::string& message) {
  try {
    fs::create_directories(out_dir);
    json err;
    err["error_type"] = type;
    err["message"] = message;
    write_json_file(err, (fs::path(out_dir) / "error.json").string());
  } catch (...) {
    // stderr still carries the message
  }
  std::cerr << "error (" << type << "): " << message << "\n";
}

ObservationSet load_run_data(const RunConfig& config) {
  if (config.has_input) {
    ObservationSet data = config.input.format == "life_table"
                              ? ingest_life_tables(config.input.path,
                                                   config.input.smoothing_bandwidth,
                                                   config.input.m)
                              : ingest_pre_embedded(config.input.path);
    if (!config.input.discrete_columns.empty()) {
      data.discrete_columns.assign(data.p(), false);
      for (int col : config.input.discrete_columns) {
        if (col > data.p())
          throw ConfigError("input.discrete_columns: column " + std::to_string(col) +
                            " exceeds covariate count");
        data.discrete_columns[col - 1] = true;
      }
    }
    return data;
  }
  DgpSpec dgp = config.dgp;
  dgp.seed = config.seed;
  dgp.grid_m = config.grid_m;
  return generate_dataset(dgp);
}

void run_simulate(const RunConfig& config, std::vector<std::string>& outputs) {
  DgpSpec dgp = config.dgp;
  dgp.seed = config.seed;
  dgp.grid_m = config.grid_m;

  Eigen::VectorXd t_grid;
  if (config.t_grid.automatic) {
    DgpSpec ref = dgp;
    ref.seed = mix_seed(config.seed, 0x9e1d);
    const ObservationSet reference = generate_dataset(ref);
    t_grid = resolve_t_grid(config.t_grid, reference.treatment);
  } else {
    t_grid = resolve_t_grid(config.t_grid, Eigen::VectorXd());
  }

  McOptions options;
  options.metrics = config.metrics;
  options.alpha = config.inference.alpha;
  options.threads = config.threads;
  const McReport report = run_monte_carlo(dgp, config.arms, options, config.replications, t_grid);

  const fs::path dir(config.out);
  write_mc_rows_csv(report, (dir / "replications.csv").string());
  outputs.push_back("replications.csv");
  write_mc_summary_csv(report, (dir / "summary.csv").string());
  outputs.push_back("summary.csv");
  write_json_file(mc_summary_json(report), (dir / "summary.json").string());
  outputs.push_back("summary.json");
}

void run_estimate(const RunConfig& config, std::vector<std::string>& outputs) {
  const ObservationSet data = load_run_data(config);
  const Eigen::VectorXd t_grid = resolve_t_grid(config.t_grid, data.treatment);
  const double q05 = percentile(data.treatment, 0.05);
  const double q50 = percentile(data.treatment, 0.50);
  const double q95 = percentile(data.treatment, 0.95);

  Eigen::VectorXd full_grid(t_grid.size() + 3);
  full_grid << t_grid, q05, q50, q95;

  std::vector<std::string> levels =
      data.groups.empty() ? std::vector<std::string>{""} : data.group_levels();

  std::vector<LabeledEstimate> estimates;
  std::vector<LabeledEffect> effects;
  int group_index = 0;
  for (const auto& group : levels) {
    const ObservationSet sub =
        group.empty() ? data : data.subset(data.indices_of_group(group));
    EstimatorSpec spec = config.base_spec;
    spec.fold_seed = mix_seed(config.seed, 0xE57 + static_cast<std::uint64_t>(group_index));
    const DoseResponseEstimate full = run_estimator(sub, spec, full_grid);

    DoseResponseEstimate curve = full;
    const int nt = static_cast<int>(t_grid.size());
    curve.t_grid = t_grid;
    curve.theta = full.theta.topRows(nt);
    curve.pointwise_se = full.pointwise_se.topRows(nt);
    curve.effective_sample_size = full.effective_sample_size.head(nt);
    curve.low_ess_flag.assign(full.low_ess_flag.begin(), full.low_ess_flag.begin() + nt);
    curve.zero_weight_flag.assign(full.zero_weight_flag.begin(),
                                  full.zero_weight_flag.begin() + nt);
    estimates.push_back({group, curve});

    const auto theta_at = [&](int offset) {
      return HilbertVector{full.theta.row(nt + offset).transpose(), full.grid_kind};
    };
    const double level_t[3] = {q05, q50, q95};
    const HilbertVector th[3] = {theta_at(0), theta_at(1), theta_at(2)};
    const int pairs[3][2] = {{0, 1}, {1, 2}, {0, 2}};
    for (const auto& pair : pairs) {
      effects.push_back({group, spec.label(),
                         effect_map(th[pair[0]], th[pair[1]], level_t[pair[0]],
                                    level_t[pair[1]])});
    }
    ++group_index;
  }

  const fs::path dir(config.out);
  write_estimate_csv(estimates, (dir / "estimate.csv").string());
  outputs.push_back("estimate.csv");
  write_density_csv(estimates, (dir / "densities.csv").string());
  outputs.push_back("densities.csv");
  write_effect_maps_csv(effects, (dir / "effect_maps.csv").string());
  outputs.push_back("effect_maps.csv");
}

void run_infer(const RunConfig& config, std::vector<std::string>& outputs) {
  const ObservationSet data = load_run_data(config);
  const Eigen::VectorXd t_grid = resolve_t_grid(config.t_grid, data.treatment);

  EstimatorSpec spec = config.base_spec;
  spec.fold_seed = mix_seed(config.seed, 0x1F);
  const DoseResponseEstimate est = run_estimator(data, spec, t_grid);

  const auto gps = fit_gps(data, spec.nuisance.gps);
  const auto outcome = fit_outcome(data, spec.nuisance.outcome);
  const Kernel kernel = resolve_kernel(spec, data);
  const AsymptoticBand band =
      asymptotic_band(data, est, *gps, *outcome, kernel, config.inference.alpha,
                      spec.corrector_at_observed_t, config.inference.bias_diagnostic);

  const fs::path dir(config.out);
  write_band_csv({{"", spec.label(), band}}, (dir / "band.csv").string());
  outputs.push_back("band.csv");
  if (config.inference.bias_diagnostic) {
    std::ofstream out = open_output((dir / "band_bias.csv").string());
    out << "t,p,bias_proxy\n";
    const int m = static_cast<int>(band.bias_proxy.cols());
    for (int g = 0; g < band.t_grid.size(); ++g) {
      for (int j = 0; j < m; ++j) {
        out << format_double(band.t_grid[g]) << ","
            << format_double(coordinate_label(band.grid_kind, j, m)) << ","
            << format_double(band.bias_proxy(g, j)) << "\n";
      }
    }
    outputs.push_back("band_bias.csv");
  }

  double t_hi = config.inference.hulc.t;
  double t_lo = config.inference.hulc.t_prime;
  if (config.inference.hulc.auto_levels) {
    t_hi = percentile(data.treatment, 0.95);
    t_lo = percentile(data.treatment, 0.05);
  }
  const HulcInterval interval =
      hulc_interval(data, spec, t_hi, t_lo, config.inference.alpha,
                    config.inference.hulc.delta_bias, mix_seed(config.seed, 0x471c),
                    config.inference.hulc.cap);
  write_hulc_csv(interval, (dir / "hulc.csv").string());
  outputs.push_back("hulc.csv");
  write_json_file(hulc_json(interval), (dir / "hulc.json").string());
  outputs.push_back("hulc.json");
}

}  // namespace

int run(const RunConfig& config) {
  try {
    fs::create_directories(config.out);
    std::vector<std::string> outputs;
    if (config.mode == "simulate") {
      run_simulate(config, outputs);
    } else if (config.mode == "estimate") {
      run_estimate(config, outputs);
    } else if (config.mode == "infer") {
      run_infer(config, outputs);
    } else {
      throw ConfigError("unknown mode: " + config.mode);
    }
    write_manifest(config, outputs);
    return 0;
  } catch (const ConfigError& e) {
    write_error_record(config.out, "config", e.what());
    return 2;
  } catch (const DataError& e) {
    write_error_record(config.out, "data", e.what());
    return 3;
  } catch (const std::exception& e) {
    write_error_record(config.out, "numerical", e.what());
    return 4;
  }
}

}  // namespace objdose
