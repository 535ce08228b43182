#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "lagflow/density.hpp"
#include "lagflow/fields.hpp"
#include "lagflow/flow.hpp"
#include "lagflow/mesh.hpp"
#include "lagflow/transport.hpp"

namespace lagflow {

enum class Scheme { singular, diffuse };
enum class Aggregate { per_rep, mean_of_n };

std::string_view to_string(Scheme scheme);
Scheme parse_scheme(std::string_view name);
std::string_view to_string(Aggregate aggregate);
Aggregate parse_aggregate(std::string_view name);

/// Optional flow diagnostics recorded at every sample time of a singular run.
struct DiagnosticOptions {
  /// Halton points for the Jacobian determinant; 0 disables it.
  int det_points = 0;
  double fd_step = 1e-5;
  /// Random pairs for the bi-Lipschitz probe; 0 disables it.
  int probe_pairs = 0;
  /// Pairs are drawn at distance <= probe_radius.
  double probe_radius = 0.05;
};

struct SnapshotDiagnostics {
  double t = 0.0;
  double min_det = std::numeric_limits<double>::quiet_NaN();
  BilipschitzBounds bilipschitz;
};

struct SchemeRun {
  Scheme scheme = Scheme::singular;
  std::string field_name;
  MeshKind mesh_kind = MeshKind::cartesian;
  int mesh_resolution = 0;
  double dx = 0.0;
  FlowConfig cfg;
  std::uint64_t seed = 0;
  RepresentativeMode rep_mode = RepresentativeMode::uniform;
  /// Diffuse runs: quadrature nodes per cell.
  int quad_per_cell = 0;
  std::vector<double> sample_times;
  std::vector<DiscreteMeasure> snapshots;
  /// Cell of origin of every atom (same order in all snapshots).
  std::vector<int> atom_cell;
  std::vector<SnapshotDiagnostics> diagnostics;

  double total_mass() const;
  /// Smallest min_det over the recorded diagnostics (NaN when none).
  double min_det() const;
};

/// Singular probabilistic scheme: one atom of mass M_i per cell, started at a
/// random representative and advanced by the Euler flow. Throws InvalidInput
/// when every M_i is zero.
SchemeRun run_singular(const VelocityField& field, const Mesh& mesh, const Density& rho0,
                       const FlowConfig& cfg, std::uint64_t seed,
                       const std::vector<double>& sample_times,
                       RepresentativeMode rep_mode = RepresentativeMode::uniform,
                       const DiagnosticOptions& diagnostics = {});

/// Same, reusing a prepared flow and precomputed cell masses.
SchemeRun run_singular(const EulerFlow& flow, const Mesh& mesh, const Density& rho0,
                       const std::vector<double>& masses, std::uint64_t seed,
                       const std::vector<double>& sample_times, RepresentativeMode rep_mode,
                       const DiagnosticOptions& diagnostics = {});

/// Cell-wise initial density for the diffuse scheme.
struct CellDensity {
  /// Value of the density of cell `id` at x (x inside the cell).
  std::function<double(int id, const TorusPoint& x)> fn;

  /// M_i / |Q_i| on every cell.
  static CellDensity piecewise_constant(const Mesh& mesh, const std::vector<double>& masses);
  /// rho0 restricted to each cell.
  static CellDensity restricted(const Density& rho0);
};

/// Diffuse deterministic scheme. Throws UnsupportedRegime unless p > d.
SchemeRun run_diffuse(const VelocityField& field, const Mesh& mesh, const CellDensity& rho0_bar,
                      const FlowConfig& cfg, const std::vector<double>& sample_times,
                      int quad_per_cell = 64);

struct ReferenceOptions {
  /// Cloud size; error curves need it at most kExactSupportCap.
  int n_particles = 4096;
  double dt_ref = 1e-3;
  /// Total mass carried by the cloud (normally the scheme's sum of M_i).
  double total_mass = 1.0;
};

/// Reference snapshots: a Halton cloud drawn from rho0 with equal weights,
/// advanced by the field's closed-form flow when it has one, otherwise by
/// RK4. Throws RoughFieldError for non-Lipschitz fields without a closed form.
std::vector<DiscreteMeasure> reference_solution(const VelocityField& field, const Density& rho0,
                                                const std::vector<double>& sample_times,
                                                const ReferenceOptions& options);

/// Self-convergence reference for rough fields: the singular scheme at a
/// fine configuration with a fixed master seed.
std::vector<DiscreteMeasure> self_reference_solution(const VelocityField& field, const Mesh& mesh,
                                                     const Density& rho0, const FlowConfig& fine,
                                                     std::uint64_t master_seed,
                                                     const std::vector<double>& sample_times);

struct ErrorPoint {
  double t = 0.0;
  double distance = 0.0;
  /// True when the entropic upper bound replaced the exact distance.
  bool entropic = false;
};

/// Distance between every snapshot and the reference at the same time.
/// Falls back to wasserstein_entropic (upper bound) above the exact cap.
std::vector<ErrorPoint> error_curve(const SchemeRun& run,
                                    const std::vector<DiscreteMeasure>& reference,
                                    const GroundMetric& metric);

/// Distance between two measures with the same entropic fallback.
ErrorPoint measure_distance(const DiscreteMeasure& a, const DiscreteMeasure& b,
                            const GroundMetric& metric);

// ---------------------------------------------------------------------------
// Monte Carlo

struct McTimeStats {
  double t = 0.0;
  int n = 0;
  double mean = 0.0;
  /// Unbiased sample variance of the per-replication errors.
  double variance = 0.0;
  double min = 0.0;
  double max = 0.0;
  /// Fractions of replications with |X_i - mean| >= k sd for k = 2, 3, 5.
  std::array<double, 3> exceedance{};
  /// mean_of_n only: distance between the reference and S_n.
  double mean_of_n_distance = std::numeric_limits<double>::quiet_NaN();
  bool entropic = false;

  /// sqrt(variance / n).
  double stderr_mean() const;
};

inline constexpr std::array<double, 3> kChebyshevK{2.0, 3.0, 5.0};

struct McSummary {
  int n_reps = 0;
  Aggregate aggregate = Aggregate::per_rep;
  std::uint64_t base_seed = 0;
  std::vector<McTimeStats> per_time;
  /// errors[rep][time].
  std::vector<std::vector<double>> errors;
  /// Smallest min_det seen across replications (NaN when not recorded).
  double min_det = std::numeric_limits<double>::quiet_NaN();
};

struct McOptions {
  int n_reps = 2;
  std::uint64_t base_seed = 0;
  Aggregate aggregate = Aggregate::per_rep;
  RepresentativeMode rep_mode = RepresentativeMode::uniform;
  DiagnosticOptions diagnostics;
  /// 0 selects LAGFLOW_WORKERS or the hardware concurrency.
  int workers = 0;
};

/// n_reps independent singular runs with seeds base_seed + r, compared with
/// `reference` at every sample time. Results are ordered by replication.
McSummary monte_carlo(const VelocityField& field, const Mesh& mesh, const Density& rho0,
                      const FlowConfig& cfg, const GroundMetric& metric,
                      const std::vector<double>& sample_times,
                      const std::vector<DiscreteMeasure>& reference, const McOptions& options);

/// Worker budget: explicit > 0, else LAGFLOW_WORKERS, else hardware concurrency.
int worker_count(int requested = 0);

/// Statistics of one column of errors.
McTimeStats summarize_errors(double t, const std::vector<double>& errors);

// ---------------------------------------------------------------------------
// Persistence

std::string scheme_run_to_json(const SchemeRun& run);
std::string mc_summary_to_json(const McSummary& summary);
/// run.json plus snapshot_<k>.csv per sample time under `directory`.
void write_scheme_run(const std::string& directory, const SchemeRun& run);

}  // namespace lagflow
