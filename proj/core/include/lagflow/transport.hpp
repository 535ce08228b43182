#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "lagflow/torus.hpp"

namespace lagflow {

/// Weighted point cloud on the torus.
class DiscreteMeasure {
 public:
  DiscreteMeasure() = default;
  explicit DiscreteMeasure(int dim);
  /// Throws InvalidInput on negative or non-finite weights and size mismatch.
  DiscreteMeasure(std::vector<TorusPoint> points, std::vector<double> weights);

  void add(const TorusPoint& point, double weight);

  int dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return points_.size(); }
  bool empty() const noexcept { return points_.empty(); }
  const std::vector<TorusPoint>& points() const noexcept { return points_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  const TorusPoint& point(std::size_t i) const { return points_.at(i); }
  double weight(std::size_t i) const { return weights_.at(i); }
  /// Sum of the weights in index order.
  double total_mass() const noexcept;

  /// Same atoms with weights multiplied by s.
  DiscreteMeasure scaled(double s) const;
  /// Probability measure with the same atoms; throws on zero mass.
  DiscreteMeasure normalized() const;

 private:
  int dim_ = 0;
  std::vector<TorusPoint> points_;
  std::vector<double> weights_;
};

/// Atoms of all parts in order, each part's weights multiplied by `scale`.
DiscreteMeasure concatenate(const std::vector<DiscreteMeasure>& parts, double scale = 1.0);

/// Torus geodesic distance, or d_alpha(x, y) = log(1 + |x - y| / h^alpha).
class GroundMetric {
 public:
  enum class Kind { euclidean_torus, logarithmic };

  static GroundMetric euclidean();
  /// Requires alpha in [0, 1] and h > 0.
  static GroundMetric logarithmic(double alpha, double h);

  Kind kind() const noexcept { return kind_; }
  double alpha() const noexcept { return alpha_; }
  double h() const noexcept { return h_; }

  double operator()(const TorusPoint& x, const TorusPoint& y) const;
  /// Applies the metric profile to a torus distance r.
  double of_distance(double r) const noexcept;
  /// Largest value on the d-torus: of_distance(sqrt(d) / 2).
  double diameter(int dim) const noexcept;
  std::string name() const;

 private:
  Kind kind_ = Kind::euclidean_torus;
  double alpha_ = 0.0;
  double h_ = 1.0;
  double scale_ = 1.0;
};

/// Transports atoms through `map`; weights are untouched.
DiscreteMeasure pushforward(const DiscreteMeasure& measure,
                            const std::function<TorusPoint(const TorusPoint&)>& map);

struct PlanEntry {
  std::size_t i = 0;
  std::size_t j = 0;
  double mass = 0.0;
};

struct ExactTransport {
  double cost = 0.0;
  std::vector<PlanEntry> plan;
};

/// Largest support (after dropping weights below kWeightFloor) the exact solver accepts.
inline constexpr std::size_t kExactSupportCap = 5000;
inline constexpr double kWeightFloor = 1e-14;

/// Optimal transport by network simplex on the complete bipartite graph.
/// Throws InvalidInput when masses differ by more than 1e-8 relative and
/// CapacityError above kExactSupportCap atoms per side.
ExactTransport wasserstein_exact(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                 const GroundMetric& metric);

struct EntropicTransport {
  /// Transport cost of the rounded feasible plan (>= exact cost).
  double upper = 0.0;
  /// Dual objective of c-transformed potentials (<= exact cost).
  double lower = 0.0;
  /// Debiased Sinkhorn divergence S_eps(mu, nu).
  double debiased = 0.0;
  /// Regularized primal cost <P, C> of the Sinkhorn plan.
  double primal = 0.0;
  double marginal_violation = 0.0;
  int iterations = 0;
};

/// Log-domain Sinkhorn iterations on probability-normalized inputs, reported
/// at the original mass. Requires epsilon >= 1e-3 * metric diameter; throws
/// ConvergenceError when the marginal violation stays above 1e-6.
EntropicTransport wasserstein_entropic(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                       const GroundMetric& metric, double epsilon,
                                       int max_iter = 10000);

/// sum_i M_i W(normalized mu_i, normalized nu_i), an upper bound for W(sum mu_i, sum nu_i).
double splitting_upper_bound(const std::vector<DiscreteMeasure>& parts_mu,
                             const std::vector<DiscreteMeasure>& parts_nu,
                             const GroundMetric& metric);

/// Exact cost minus sum f d(mu - nu). `potential` holds f on the atoms of mu
/// followed by the atoms of nu and must be 1-Lipschitz for the metric there.
double kr_dual_gap(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                   const GroundMetric& metric, const std::vector<double>& potential);

namespace detail {
/// Potential on the union support built from the exact solver's duals
/// (c-transform of the target potentials).
std::vector<double> optimal_kr_potential(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                         const GroundMetric& metric);
}  // namespace detail

// ---------------------------------------------------------------------------
// CSV

/// Columns weight, x_1..x_d.
void write_measure_csv(std::ostream& os, const DiscreteMeasure& measure);
DiscreteMeasure read_measure_csv(std::istream& is);
/// Columns i, j, mass, ground_cost.
void write_plan_csv(std::ostream& os, const ExactTransport& result, const DiscreteMeasure& mu,
                    const DiscreteMeasure& nu, const GroundMetric& metric);

}  // namespace lagflow
