#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "lagflow/torus.hpp"

namespace lagflow {

enum class FieldKind { analytic, grid_sampled, mollified };
enum class MollifierProfile { bump, truncated_gaussian };

std::string_view to_string(FieldKind kind);
std::string_view to_string(MollifierProfile profile);
MollifierProfile parse_mollifier_profile(std::string_view name);

/// Regularity data declared for a velocity field.
struct FieldMetadata {
  /// Declared Sobolev exponent p > 1 of the spatial gradient (inf for smooth fields).
  double p = std::numeric_limits<double>::infinity();
  /// Bound on |u|; evaluations never exceed it.
  double sup_norm = 0.0;
  /// Bound on the negative part of div(u).
  double div_minus_bound = 0.0;
  bool divergence_free = false;
  /// False when the gradient is unbounded (classical integration is refused).
  bool lipschitz = true;
  /// Independent of t.
  bool autonomous = false;
  /// Evaluations are defined on [0, horizon].
  double horizon = std::numeric_limits<double>::infinity();
};

/// Unit-mass radial kernel supported in the closed unit ball of R^d.
class MollifierKernel {
 public:
  static MollifierKernel bump(int dim);
  /// Gaussian with standard deviation 1/4, cut at four standard deviations.
  static MollifierKernel truncated_gaussian(int dim);
  static MollifierKernel make(MollifierProfile profile, int dim);

  MollifierProfile profile() const noexcept { return profile_; }
  int dim() const noexcept { return dim_; }
  double normalization() const noexcept { return normalization_; }
  /// Mass of the normalized kernel recomputed on an independent radial rule.
  double verified_mass() const noexcept { return verified_mass_; }

  /// Radial profile value at |y| = r (normalized).
  double radial(double r) const noexcept;
  double operator()(const Vec& y) const noexcept { return radial(y.norm()); }

 private:
  MollifierKernel(MollifierProfile profile, int dim);
  MollifierProfile profile_;
  int dim_;
  double normalization_ = 1.0;
  double verified_mass_ = 0.0;
};

using FieldFunction = std::function<Vec(double t, const TorusPoint& x)>;
using FlowFunction = std::function<TorusPoint(double t, const TorusPoint& x0)>;

/// Periodic space-time samples: values are laid out time-major, then axis 0
/// slowest through axis d-1 fastest, then the d velocity components.
struct GridSamples {
  int dim = 0;
  std::vector<std::int64_t> n_x;
  std::int64_t n_t = 1;
  double horizon = 1.0;
  std::vector<double> values;

  std::size_t expected_size() const;
};

namespace detail {
class FieldImpl;
}

/// Immutable, cheaply copyable time-dependent velocity field on the torus.
class VelocityField {
 public:
  /// Closed-form field. `exact_flow`, when given, is the field's true flow
  /// map and is used as a reference solution.
  static VelocityField analytic(std::string name, int dim, FieldFunction fn, FieldMetadata meta,
                                FlowFunction exact_flow = {});
  /// Multilinear in space, piecewise constant on the N_t time slabs.
  static VelocityField from_samples(std::string name, GridSamples samples, FieldMetadata meta);

  /// Throws InvalidInput for t outside [0, horizon].
  Vec eval(double t, const TorusPoint& x) const;

  FieldKind kind() const noexcept;
  int dim() const noexcept;
  const std::string& name() const noexcept;
  const FieldMetadata& metadata() const noexcept;
  /// Mollification radius for mollified fields, 0 otherwise.
  double delta() const noexcept;
  bool has_exact_flow() const noexcept;
  TorusPoint exact_flow(double t, const TorusPoint& x0) const;

 private:
  friend VelocityField mollify(const VelocityField&, double, const MollifierKernel&, int);
  explicit VelocityField(std::shared_ptr<const detail::FieldImpl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<const detail::FieldImpl> impl_;
};

/// Space-only convolution with the kernel scaled to radius delta, by
/// tensor-product Gauss-Legendre quadrature over [-delta, delta]^d.
/// Requires 0 < delta <= 1/4 and quad_points_per_axis >= 8.
VelocityField mollify(const VelocityField& field, double delta, const MollifierKernel& kernel,
                      int quad_points_per_axis = 8);

/// Composite midpoint approximation of the time mean of u(., x) on [t_a, t_b].
Vec time_averaged_velocity(const VelocityField& field, double t_a, double t_b, const TorusPoint& x,
                           int n_quad = 1);

// ---------------------------------------------------------------------------
// Catalog

struct CatalogParams {
  int dim = 2;
  std::vector<double> velocity;   // constant
  double amplitude = 1.0;         // shear_sine
  std::vector<double> center;     // rotation / vortex, default (1/2, ..., 1/2)
  double omega = 6.283185307179586;
  double inner_radius = 0.2;      // r0
  double outer_radius = 0.4;      // r1
  double alpha = 1.5;             // radial_vortex exponent
  double p = 0.0;                 // declared exponent; 0 selects the default
  std::uint64_t seed = 1;
  int grid = 32;                  // sampled_random_divfree resolution
  int modes = 3;
  double horizon = std::numeric_limits<double>::infinity();
};

VelocityField constant_field(const Vec& c);
/// u(x) = (A sin(2 pi x_2), 0, ...); needs d >= 2.
VelocityField shear_sine(int dim, double amplitude = 1.0);
/// Rigid rotation with angular speed omega inside r0, smoothly cut to 0 at r1 < 1/2.
VelocityField rigid_rotation_patch(const CatalogParams& params);
/// u = perp-grad of |x - x0|^alpha chi(|x - x0|) in d = 2. |Du| ~ r^(alpha - 2),
/// so Du is in L^p exactly for p < 2 / (2 - alpha).
VelocityField radial_vortex(const CatalogParams& params);
/// Largest admissible (exclusive) Sobolev exponent of radial_vortex(alpha) in 2-D.
double radial_vortex_critical_exponent(double alpha);
/// Random low-mode stream function sampled on an N x N grid (d = 2).
VelocityField sampled_random_divfree(std::uint64_t seed, int grid, int modes = 3,
                                     double horizon = 1.0);

/// Dispatch by name: constant, shear_sine, rigid_rotation_patch, radial_vortex,
/// sampled_random_divfree. Unknown names raise InvalidInput.
VelocityField catalog_field(std::string_view name, const CatalogParams& params);

/// Smooth cutoff: 1 on [0, r0], 0 on [r1, inf), C-infinity in between.
double smooth_cutoff(double r, double r0, double r1) noexcept;
double smooth_cutoff_derivative(double r, double r0, double r1) noexcept;

// ---------------------------------------------------------------------------
// LAGF1 binary grid files

GridSamples read_field_file(const std::string& path);
void write_field_file(const std::string& path, const GridSamples& samples);
/// Loads samples and wraps them as a grid_sampled field; sup_norm is the
/// largest sample norm.
VelocityField load_field_file(const std::string& path, FieldMetadata meta);

}  // namespace lagflow
