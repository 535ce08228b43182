#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "lagflow/error.hpp"
#include "lagflow/fields.hpp"
#include "lagflow/random.hpp"

namespace lagflow {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double transition(double s) { return s > 0.0 ? std::exp(-1.0 / s) : 0.0; }
double transition_derivative(double s) { return s > 0.0 ? std::exp(-1.0 / s) / (s * s) : 0.0; }

TorusPoint center_point(const CatalogParams& params) {
  if (params.center.empty()) return wrap({0.5, 0.5});
  if (params.center.size() != 2) throw InvalidInput("catalog: center must have 2 coordinates");
  return wrap({params.center[0], params.center[1]});
}

void check_radii(const CatalogParams& params) {
  if (!(params.inner_radius > 0.0 && params.inner_radius < params.outer_radius &&
        params.outer_radius < 0.5))
    throw InvalidInput("catalog: need 0 < inner_radius < outer_radius < 1/2");
}

// Rotation of x about c by an angle depending only on the distance |x - c|.
template <typename AngularSpeed>
TorusPoint rotate_about(const TorusPoint& c, const TorusPoint& x, double t, AngularSpeed omega) {
  const TorusVector z = periodic_displacement(c, x);
  const double r = z.norm();
  if (r == 0.0) return x;
  const double theta = omega(r) * t;
  const double cs = std::cos(theta), sn = std::sin(theta);
  return wrap(c.lift() + Vec{cs * z[0] - sn * z[1], sn * z[0] + cs * z[1]});
}

}  // namespace

double smooth_cutoff(double r, double r0, double r1) noexcept {
  if (r <= r0) return 1.0;
  if (r >= r1) return 0.0;
  const double s = (r - r0) / (r1 - r0);
  const double a = transition(1.0 - s), b = transition(s);
  return a / (a + b);
}

double smooth_cutoff_derivative(double r, double r0, double r1) noexcept {
  if (r <= r0 || r >= r1) return 0.0;
  const double s = (r - r0) / (r1 - r0);
  const double a = transition(1.0 - s), b = transition(s);
  const double da = -transition_derivative(1.0 - s), db = transition_derivative(s);
  return (da * b - a * db) / ((a + b) * (a + b)) / (r1 - r0);
}

VelocityField constant_field(const Vec& c) {
  if (!c.finite()) throw InvalidInput("constant field: non-finite velocity");
  FieldMetadata meta;
  meta.sup_norm = c.norm();
  meta.divergence_free = true;
  meta.autonomous = true;
  return VelocityField::analytic(
      "constant", c.dim(), [c](double, const TorusPoint&) { return c; }, meta,
      [c](double t, const TorusPoint& x0) { return wrap(x0.lift() + t * c); });
}

VelocityField shear_sine(int dim, double amplitude) {
  if (dim < 2) throw InvalidInput("shear_sine needs d >= 2");
  FieldMetadata meta;
  meta.sup_norm = std::abs(amplitude);
  meta.divergence_free = true;
  meta.autonomous = true;
  return VelocityField::analytic(
      "shear_sine", dim,
      [dim, amplitude](double, const TorusPoint& x) {
        Vec u(dim);
        u[0] = amplitude * std::sin(kTwoPi * x[1]);
        return u;
      },
      meta,
      [dim, amplitude](double t, const TorusPoint& x0) {
        Vec shift(dim);
        shift[0] = t * amplitude * std::sin(kTwoPi * x0[1]);
        return wrap(x0.lift() + shift);
      });
}

VelocityField rigid_rotation_patch(const CatalogParams& params) {
  if (params.dim != 2) throw InvalidInput("rigid_rotation_patch is defined for d = 2");
  check_radii(params);
  const TorusPoint c = center_point(params);
  const double omega = params.omega, r0 = params.inner_radius, r1 = params.outer_radius;
  FieldMetadata meta;
  meta.sup_norm = std::abs(omega) * r1;
  meta.divergence_free = true;
  meta.autonomous = true;
  auto speed = [omega, r0, r1](double r) { return omega * smooth_cutoff(r, r0, r1); };
  return VelocityField::analytic(
      "rigid_rotation_patch", 2,
      [c, speed](double, const TorusPoint& x) {
        const TorusVector z = periodic_displacement(c, x);
        const double w = speed(z.norm());
        return Vec{-w * z[1], w * z[0]};
      },
      meta, [c, speed](double t, const TorusPoint& x0) { return rotate_about(c, x0, t, speed); });
}

double radial_vortex_critical_exponent(double alpha) { return 2.0 / (2.0 - alpha); }

VelocityField radial_vortex(const CatalogParams& params) {
  if (params.dim != 2) throw InvalidInput("radial_vortex is defined for d = 2");
  check_radii(params);
  const double alpha = params.alpha;
  if (!(alpha >= 1.0 && alpha < 2.0)) throw InvalidInput("radial_vortex: alpha must be in [1, 2)");
  const double crit = radial_vortex_critical_exponent(alpha);
  const double p = params.p == 0.0 ? 0.5 * (1.0 + crit) : params.p;
  if (!(p > 1.0 && p < crit))
    throw InvalidInput("radial_vortex(alpha=" + std::to_string(alpha) +
                       "): declared p must lie in (1, " + std::to_string(crit) + "), got " +
                       std::to_string(p));
  const TorusPoint c = center_point(params);
  const double r0 = params.inner_radius, r1 = params.outer_radius;

  // psi(r) = r^alpha chi(r); returns psi'(r).
  auto dpsi = [alpha, r0, r1](double r) {
    return alpha * std::pow(r, alpha - 1.0) * smooth_cutoff(r, r0, r1) +
           std::pow(r, alpha) * smooth_cutoff_derivative(r, r0, r1);
  };
  double sup = 0.0;
  for (int i = 1; i <= 20000; ++i) sup = std::max(sup, std::abs(dpsi(r1 * i / 20000.0)));

  FieldMetadata meta;
  meta.p = p;
  meta.sup_norm = 1.001 * sup;
  meta.divergence_free = true;
  meta.autonomous = true;
  meta.lipschitz = false;
  auto angular = [dpsi](double r) { return dpsi(r) / r; };
  return VelocityField::analytic(
      "radial_vortex", 2,
      [c, angular](double, const TorusPoint& x) {
        const TorusVector z = periodic_displacement(c, x);
        const double r = z.norm();
        if (r == 0.0) return Vec{0.0, 0.0};
        const double w = angular(r);
        return Vec{-w * z[1], w * z[0]};
      },
      meta,
      [c, angular](double t, const TorusPoint& x0) { return rotate_about(c, x0, t, angular); });
}

VelocityField sampled_random_divfree(std::uint64_t seed, int grid, int modes, double horizon) {
  if (grid < 4) throw InvalidInput("sampled_random_divfree: grid must be >= 4");
  if (modes < 1) throw InvalidInput("sampled_random_divfree: modes must be >= 1");
  struct Mode {
    int k1, k2;
    double a, b;
  };
  RandomStream rng(seed);
  std::vector<Mode> spectrum;
  for (int k1 = 0; k1 <= modes; ++k1)
    for (int k2 = -modes; k2 <= modes; ++k2) {
      if (k1 == 0 && k2 <= 0) continue;  // half plane, no mean mode
      spectrum.push_back({k1, k2, rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)});
    }

  GridSamples s;
  s.dim = 2;
  s.n_x = {grid, grid};
  s.n_t = 1;
  s.horizon = horizon;
  s.values.assign(s.expected_size(), 0.0);
  double sup = 0.0;
  for (int i = 0; i < grid; ++i)
    for (int j = 0; j < grid; ++j) {
      const double x = static_cast<double>(i) / grid, y = static_cast<double>(j) / grid;
      double dpx = 0.0, dpy = 0.0;
      for (const Mode& m : spectrum) {
        const double phase = kTwoPi * (m.k1 * x + m.k2 * y);
        const double k2norm = m.k1 * m.k1 + m.k2 * m.k2;
        const double dphase = (-m.a * std::sin(phase) + m.b * std::cos(phase)) * kTwoPi / k2norm;
        dpx += dphase * m.k1;
        dpy += dphase * m.k2;
      }
      const std::size_t off = (static_cast<std::size_t>(i) * grid + j) * 2;
      s.values[off] = -dpy;
      s.values[off + 1] = dpx;
      sup = std::max(sup, std::hypot(dpx, dpy));
    }
  for (double& v : s.values) v /= sup;

  // Divergence of the bilinear interpolant is bilinear per cell, so its
  // extremes sit at cell corners.
  double div_minus = 0.0;
  auto at = [&](int i, int j, int comp) {
    return s.values[((static_cast<std::size_t>((i % grid + grid) % grid) * grid) +
                     (j % grid + grid) % grid) * 2 + comp];
  };
  for (int i = 0; i < grid; ++i)
    for (int j = 0; j < grid; ++j)
      for (int sy = 0; sy <= 1; ++sy)
        for (int sx = 0; sx <= 1; ++sx) {
          const double dudx = (at(i + 1, j + sy, 0) - at(i, j + sy, 0)) * grid;
          const double dvdy = (at(i + sx, j + 1, 1) - at(i + sx, j, 1)) * grid;
          div_minus = std::max(div_minus, -(dudx + dvdy));
        }

  FieldMetadata meta;
  meta.divergence_free = true;
  meta.autonomous = true;
  meta.div_minus_bound = div_minus;
  return VelocityField::from_samples("sampled_random_divfree", std::move(s), meta);
}

VelocityField catalog_field(std::string_view name, const CatalogParams& params) {
  VelocityField field = [&]() -> VelocityField {
    if (name == "constant") {
      if (params.velocity.empty() || params.velocity.size() > kMaxDim)
        throw InvalidInput("constant field needs a velocity with 1..3 components");
      Vec c(static_cast<int>(params.velocity.size()));
      for (std::size_t k = 0; k < params.velocity.size(); ++k) c[k] = params.velocity[k];
      return constant_field(c);
    }
    if (name == "shear_sine") return shear_sine(params.dim, params.amplitude);
    if (name == "rigid_rotation_patch") return rigid_rotation_patch(params);
    if (name == "radial_vortex") return radial_vortex(params);
    if (name == "sampled_random_divfree")
      return sampled_random_divfree(params.seed, params.grid, params.modes,
                                    std::isfinite(params.horizon) ? params.horizon : 1.0);
    throw InvalidInput("unknown catalog field '" + std::string(name) + "'");
  }();
  return field;
}

}  // namespace lagflow
