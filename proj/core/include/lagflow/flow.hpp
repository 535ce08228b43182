#pragma once

#include <functional>
#include <iosfwd>
#include <string_view>
#include <utility>
#include <vector>

#include "lagflow/fields.hpp"
#include "lagflow/mesh.hpp"
#include "lagflow/torus.hpp"

namespace lagflow {

enum class DeltaRule { sqrt_dt, none, explicit_value };

std::string_view to_string(DeltaRule rule);
DeltaRule parse_delta_rule(std::string_view name);

/// Time grid and regularization of the Euler flows.
struct FlowConfig {
  double dt = 0.0;
  double T = 0.0;
  DeltaRule delta_rule = DeltaRule::sqrt_dt;
  /// Used only with DeltaRule::explicit_value.
  double delta = 0.0;
  int n_quad_time = 1;
  MollifierProfile kernel = MollifierProfile::bump;
  int mollifier_quad = 8;

  /// Throws InvalidInput unless dt > 0, T > 0 and T / dt is an integer.
  void validate() const;
  int steps() const;
  double node_time(int n) const { return n * dt; }
  /// Mollification radius in effect (0 when none).
  double effective_delta() const;
};

/// sqrt_dt when the declared exponent p <= d, none otherwise.
DeltaRule default_delta_rule(const VelocityField& field);

/// Field actually advected: mollify(u, delta) or u itself.
VelocityField effective_field(const VelocityField& field, const FlowConfig& cfg);

/// Particles advanced by a flow. positions are at time t; node_positions are
/// the images at the last grid node not after t.
struct ParticleEnsemble {
  std::vector<TorusPoint> provenance;
  std::vector<TorusPoint> positions;
  std::vector<TorusPoint> node_positions;
  int node_index = 0;
  double t = 0.0;

  static ParticleEnsemble at_start(std::vector<TorusPoint> initial);
  std::size_t size() const noexcept { return positions.size(); }
};

/// Explicit Euler flow Phi_E of the effective field.
class EulerFlow {
 public:
  EulerFlow(const VelocityField& field, const FlowConfig& cfg);

  const FlowConfig& config() const noexcept { return cfg_; }
  const VelocityField& field() const noexcept { return u_eff_; }
  double delta() const noexcept { return cfg_.effective_delta(); }

  /// One step of the scheme from node n: x + dt * (time mean of u_eff at x), unwrapped.
  Vec step(int n, const TorusPoint& x) const;
  void advance(ParticleEnsemble& ensemble, double t_target) const;
  /// Phi_E(t, x0) from scratch.
  TorusPoint map(double t, const TorusPoint& x0) const;

 private:
  VelocityField u_eff_;
  FlowConfig cfg_;
};

ParticleEnsemble euler_flow_advance(const VelocityField& field, const FlowConfig& cfg,
                                    ParticleEnsemble ensemble, double t_target);

/// Mean Euler flow: every cell is translated rigidly; the velocity of a cell
/// is the time and space mean of u over the translated cell quadrature nodes.
class MeanEulerFlow {
 public:
  /// Throws UnsupportedRegime unless the declared p > d.
  MeanEulerFlow(const VelocityField& field, const FlowConfig& cfg, const Mesh& mesh,
                int quad_per_cell = 64);

  const FlowConfig& config() const noexcept { return cfg_; }
  const Mesh& mesh() const noexcept { return mesh_; }
  const CellQuadrature& nodes(int cell) const { return quad_.at(cell); }
  int quad_per_cell() const noexcept { return quad_per_cell_; }

  double time() const noexcept { return t_; }
  /// Current translation of every cell (unwrapped).
  const std::vector<Vec>& offsets() const noexcept { return offsets_; }
  void advance(double t_target);

 private:
  Vec cell_velocity(int cell, int n, const Vec& offset) const;

  VelocityField u_;
  FlowConfig cfg_;
  Mesh mesh_;
  int quad_per_cell_;
  std::vector<CellQuadrature> quad_;
  std::vector<Vec> node_offsets_;
  std::vector<Vec> offsets_;
  int node_index_ = 0;
  double t_ = 0.0;
};

/// Per-cell translation vectors at t_target. representatives[i] must lie in cell i;
/// the result does not depend on them beyond that check.
std::vector<Vec> mean_euler_flow_advance(const VelocityField& field, const FlowConfig& cfg,
                                         const Mesh& mesh,
                                         const std::vector<TorusPoint>& representatives,
                                         double t_target, int quad_per_cell = 64);

struct Trajectory {
  std::vector<double> times;
  std::vector<TorusPoint> points;
};

/// Classical RK4 with n = ceil(T / dt_ref) equal steps. Throws RoughFieldError
/// when the field has no Lipschitz bound.
Trajectory reference_flow(const VelocityField& field, const TorusPoint& x0, double T,
                          double dt_ref);
/// Endpoint of reference_flow.
TorusPoint reference_flow_map(const VelocityField& field, const TorusPoint& x0, double T,
                              double dt_ref);

/// Deterministic flow map (t, x0) -> x(t), evaluated in batches.
class FlowEvaluator {
 public:
  using Batch =
      std::function<std::vector<TorusPoint>(double t, const std::vector<TorusPoint>& x0)>;

  FlowEvaluator(int dim, Batch fn) : dim_(dim), fn_(std::move(fn)) {}

  static FlowEvaluator identity(int dim);
  static FlowEvaluator euler(const VelocityField& field, const FlowConfig& cfg);
  static FlowEvaluator reference(const VelocityField& field, double dt_ref);
  /// Closed-form flow of the field; throws InvalidInput if it has none.
  static FlowEvaluator exact(const VelocityField& field);

  int dim() const noexcept { return dim_; }
  TorusPoint operator()(double t, const TorusPoint& x0) const;
  std::vector<TorusPoint> operator()(double t, const std::vector<TorusPoint>& x0) const {
    return fn_(t, x0);
  }

 private:
  int dim_;
  Batch fn_;
};

// ---------------------------------------------------------------------------
// Diagnostics

/// det of the central finite-difference Jacobian of x0 -> flow(t, x0).
/// fd_step must lie in [1e-7, 1e-3].
double jacobian_determinant(const FlowEvaluator& flow, double t, const TorusPoint& x,
                            double fd_step);
std::vector<double> jacobian_determinants(const FlowEvaluator& flow, double t,
                                          const std::vector<TorusPoint>& xs, double fd_step);

struct BilipschitzBounds {
  double max_ratio = 0.0;
  double min_ratio = 0.0;
  /// Pairs skipped because their initial points coincide.
  int skipped = 0;
  /// Pairs whose images coincide.
  int collisions = 0;
};

BilipschitzBounds bilipschitz_probe(
    const FlowEvaluator& flow, double t,
    const std::vector<std::pair<TorusPoint, TorusPoint>>& pairs);

struct DiscrepancyNorms {
  double lp_norm = 0.0;
  double lp_stderr = 0.0;
  double log_lp_norm = 0.0;
  double log_lp_stderr = 0.0;
};

/// Halton estimates of ||A - B||_p and ||log(1 + |A - B| / scale)||_p over the torus.
DiscrepancyNorms discrepancy_norms(const FlowEvaluator& a, const FlowEvaluator& b, double t,
                                   double p, double scale, int n_mc);

/// CSV with columns particle_id, t, x_1..x_d.
void write_trajectory_csv(std::ostream& os, const std::vector<Trajectory>& trajectories);

}  // namespace lagflow
