#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "lagflow/density.hpp"
#include "lagflow/fields.hpp"
#include "lagflow/flow.hpp"
#include "lagflow/mesh.hpp"
#include "lagflow/solver.hpp"
#include "lagflow/transport.hpp"

namespace lagflow {

struct FieldSpec {
  std::string name = "constant";
  CatalogParams params;
};

struct MeshSpec {
  MeshKind kind = MeshKind::cartesian;
  double jitter = 0.0;
  std::uint64_t seed = 0;
};

struct DensitySpec {
  /// uniform, sinusoidal_bump or truncated_singular.
  std::string name = "uniform";
  double amplitude = 0.5;
  double exponent = 1.0;
  /// Truncation level K of truncated_singular.
  double level = 10.0;
  std::vector<double> center;
};

enum class HRule { max_dt_dx, explicit_value };

struct MetricSpec {
  bool logarithmic = false;
  double alpha = 0.5;
  HRule h_rule = HRule::max_dt_dx;
  double h = 0.0;
};

enum class LevelPairing { zip, grid };

/// Dyadic levels: dt = 2^-l, mesh resolution N = 2^l (nominal dx = 1/N).
struct SweepSpec {
  std::vector<int> dt_levels;
  std::vector<int> dx_levels;
  LevelPairing pairing = LevelPairing::zip;
};

struct FlowSpec {
  double T = 1.0;
  /// sqrt_dt, none, explicit or auto (chosen from the declared p).
  std::string delta_rule = "auto";
  double delta = 0.0;
  int n_quad_time = 1;
  MollifierProfile kernel = MollifierProfile::bump;
  int mollifier_quad = 8;
};

struct ReferenceSpec {
  /// 0 selects min(16 x scheme atoms, kExactSupportCap).
  int n_particles = 0;
  double dt_ref = 1e-3;
  /// Self-convergence reference (rough fields without a closed-form flow).
  int self_dt_level = 0;
  int self_dx_level = 0;
  std::uint64_t master_seed = 0x5eed;
};

struct ExperimentConfig {
  FieldSpec field;
  MeshSpec mesh;
  DensitySpec rho0;
  Scheme scheme = Scheme::singular;
  MetricSpec metric;
  FlowSpec flow;
  SweepSpec sweep;
  int n_reps = 1;
  std::uint64_t base_seed = 0;
  Aggregate aggregate = Aggregate::per_rep;
  RepresentativeMode rep_mode = RepresentativeMode::uniform;
  int quad_per_cell = 16;
  std::vector<double> sample_times{0.0, 1.0};
  ReferenceSpec reference;
  DiagnosticOptions diagnostics;
  int workers = 0;
  std::string output = "lagflow-run";
};

/// Parses and validates a JSON config. Duplicate and unknown keys are
/// rejected with InvalidInput naming the key.
ExperimentConfig parse_config(std::string_view json_text);
/// Reads `path` (IoError when unreadable) and parses it.
ExperimentConfig load_config(const std::string& path);
/// Canonical JSON of the fully populated config (sorted keys).
std::string config_to_json(const ExperimentConfig& config);
/// FNV-1a 64 of config_to_json, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

VelocityField build_field(const FieldSpec& spec);
Density build_density(const DensitySpec& spec, int dim);

struct SweepLevel {
  int dt_level = 0;
  int dx_level = 0;
  double dt = 0.0;
  double dx = 0.0;
};
/// Grid points of the sweep in execution order.
std::vector<SweepLevel> sweep_levels(const SweepSpec& sweep);

struct ResultRow {
  std::string scheme;
  double dt = 0.0;
  double dx = 0.0;
  double delta = 0.0;
  std::string metric;
  double alpha = 0.0;
  double h = 0.0;
  double t = 0.0;
  double mean_err = 0.0;
  double var_err = 0.0;
  int n_reps = 0;
  double min_det = 0.0;
  double runtime_ms = 0.0;
};

struct LevelOutcome {
  SweepLevel level;
  bool ok = false;
  std::string message;
  double dx_max = 0.0;
  double min_volume_ratio = 0.0;
  double h = 0.0;
  std::size_t atoms = 0;
  std::size_t reference_atoms = 0;
  std::string reference_kind;
  double runtime_ms = 0.0;
};

struct SweepResult {
  std::string directory;
  std::vector<ResultRow> rows;
  std::vector<LevelOutcome> levels;
  bool partial() const;
};

/// Runs every level; failures are recorded and the sweep continues.
/// Writes results.csv and summary.json into config.output.
SweepResult run_sweep(const ExperimentConfig& config);

void write_results_csv(const std::string& path, const std::vector<ResultRow>& rows);
std::vector<ResultRow> read_results_csv(const std::string& path);

// ---------------------------------------------------------------------------
// Rate fits

enum class RateModel { power, log_inverse };
std::string_view to_string(RateModel model);

/// power: C h^beta; log_inverse: C |log h|^-q. `exponent` is beta or q.
struct RateFit {
  RateModel model = RateModel::power;
  double C = 0.0;
  double exponent = 0.0;
  double exponent_stderr = 0.0;
  /// RMS residual of log(err) in the transformed coordinates.
  double residual_rms = 0.0;
  std::vector<std::pair<double, double>> points;
  /// Set when errors are not monotone in h.
  bool low_confidence = false;

  double evaluate(double h) const;
};

/// Least squares in log coordinates on points with err > 0; needs >= 3 of them.
RateFit fit_rate(const std::vector<std::pair<double, double>>& points, RateModel model);

struct FitReport {
  std::string scheme;
  std::string metric;
  double alpha = 0.0;
  double t = 0.0;
  RateFit power;
  RateFit log_inverse;
  /// Model with the smaller residual.
  RateModel better = RateModel::power;
};

/// One report per (scheme, metric, alpha, t) group with >= 3 positive errors.
std::vector<FitReport> fit_rates(const std::vector<ResultRow>& rows);
std::string fit_reports_to_json(const std::vector<FitReport>& reports);

/// Writes one gnuplot .dat per (scheme, metric) into <run_dir>/plotdata and
/// returns the file paths. Throws IoError when results.csv is missing.
std::vector<std::string> emit_plotdata(const std::string& run_dir);

}  // namespace lagflow
