#ifndef OBJDOSE_IO_HPP
#define OBJDOSE_IO_HPP

#include <string>
#include <vector>

#include "objdose/config.hpp"
#include "objdose/inference.hpp"
#include "objdose/simlab.hpp"

namespace objdose {

/// Full round-trip decimal formatting for all numeric output.
std::string format_double(double v);

/// Type-7 (linear interpolation) sample percentile.
double percentile(const Eigen::VectorXd& values, double p);

/// Resolves a treatment grid: an explicit [min, max] range or automatic
/// percentile bounds from the observed treatments.
Eigen::VectorXd resolve_t_grid(const TGridSpec& spec, const Eigen::VectorXd& treatment);

// ---------------------------------------------------------------------------
// Dataset ingestion
// ---------------------------------------------------------------------------

/**
 * Long-format life-table CSV with header `unit,age_lo,deaths,treatment,
 * x1..xp[,group]`, one row per age bin. Each unit's histogram is smoothed
 * with a Gaussian kernel (bandwidth in years; <= 0 skips smoothing), turned
 * into a CDF by cumulative quadrature, inverted onto the m-point probability
 * grid, and embedded. Scale-invariant in the counts.
 */
ObservationSet ingest_life_tables(const std::string& path, double smoothing_bandwidth, int m);

/// Pre-embedded CSV with header `unit,treatment,x1..xp[,group],q1..qM`.
ObservationSet ingest_pre_embedded(const std::string& path);

/// Mirror of ingest_pre_embedded; emit + re-ingest reproduces embeddings.
void write_pre_embedded_csv(const ObservationSet& data, const std::string& path);

/// Density values by inverse-slope differentiation of a quantile vector,
/// with the slope floored at 1e-6.
Eigen::VectorXd quantile_density(const Eigen::VectorXd& quantiles);

// ---------------------------------------------------------------------------
// Artifact emission (long-format plot data and reports)
// ---------------------------------------------------------------------------

struct LabeledEstimate {
  std::string group;
  DoseResponseEstimate estimate;
};

struct LabeledBand {
  std::string group;
  std::string estimator;
  AsymptoticBand band;
};

/// Rows (t, p, value, lower, upper, group, estimator); without band input the
/// envelopes collapse onto the value.
void write_estimate_csv(const std::vector<LabeledEstimate>& estimates, const std::string& path);
void write_band_csv(const std::vector<LabeledBand>& bands, const std::string& path);

/// Rows (t, group, estimator, p, x, density) from pulled-back quantile
/// functions; only meaningful for probability-grid estimates.
void write_density_csv(const std::vector<LabeledEstimate>& estimates, const std::string& path);

struct LabeledEffect {
  std::string group;
  std::string estimator;
  EffectMap effect;
};

void write_effect_maps_csv(const std::vector<LabeledEffect>& effects, const std::string& path);

void write_mc_rows_csv(const McReport& report, const std::string& path);
void write_mc_summary_csv(const McReport& report, const std::string& path);
nlohmann::json mc_summary_json(const McReport& report);

void write_hulc_csv(const HulcInterval& interval, const std::string& path);
nlohmann::json hulc_json(const HulcInterval& interval);

/// Executes a validated run configuration, writing all artifacts plus a
/// manifest (resolved config, its hash, seed, output list) into the output
/// directory. Returns the process exit code: 0 success, 2 config error,
/// 3 data error, 4 numerical failure. Failures leave a machine-readable
/// error.json behind.
int run(const RunConfig& config);

}  // namespace objdose

#endif
