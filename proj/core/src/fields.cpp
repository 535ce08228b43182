#include "lagflow/fields.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "lagflow/error.hpp"
#include "lagflow/quadrature.hpp"
#include "field_impl.hpp"

namespace lagflow {

std::string_view to_string(FieldKind kind) {
  switch (kind) {
    case FieldKind::analytic: return "analytic";
    case FieldKind::grid_sampled: return "grid_sampled";
    case FieldKind::mollified: return "mollified";
  }
  return "?";
}

std::string_view to_string(MollifierProfile profile) {
  return profile == MollifierProfile::bump ? "bump" : "truncated_gaussian";
}

MollifierProfile parse_mollifier_profile(std::string_view name) {
  if (name == "bump") return MollifierProfile::bump;
  if (name == "truncated_gaussian") return MollifierProfile::truncated_gaussian;
  throw InvalidInput("unknown mollifier profile '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// MollifierKernel

namespace {

constexpr double kGaussSigma = 0.25;

double raw_profile(MollifierProfile profile, double r) {
  if (r >= 1.0) return 0.0;
  if (profile == MollifierProfile::bump) return std::exp(-1.0 / (1.0 - r * r));
  return std::exp(-r * r / (2.0 * kGaussSigma * kGaussSigma));
}

double sphere_area(int dim) {
  switch (dim) {
    case 1: return 2.0;
    case 2: return 2.0 * std::numbers::pi;
    default: return 4.0 * std::numbers::pi;
  }
}

// Integral over the unit ball of a radial profile, by composite Gauss-Legendre in r.
double radial_mass(MollifierProfile profile, int dim, int panels, int order) {
  const QuadratureRule gl = gauss_legendre(order);
  const double h = 1.0 / panels;
  double sum = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double a = p * h;
    for (int i = 0; i < order; ++i) {
      const double r = a + 0.5 * h * (gl.nodes[i] + 1.0);
      sum += 0.5 * h * gl.weights[i] * std::pow(r, dim - 1) * raw_profile(profile, r);
    }
  }
  return sphere_area(dim) * sum;
}

}  // namespace

MollifierKernel::MollifierKernel(MollifierProfile profile, int dim) : profile_(profile), dim_(dim) {
  if (dim < 1 || dim > kMaxDim) throw InvalidInput("mollifier: unsupported dimension");
  normalization_ = radial_mass(profile, dim, 64, 20);
  verified_mass_ = radial_mass(profile, dim, 97, 16) / normalization_;
  if (std::abs(verified_mass_ - 1.0) > 1e-10)
    throw Error("mollifier normalization failed verification: mass " +
                std::to_string(verified_mass_));
}

MollifierKernel MollifierKernel::bump(int dim) { return {MollifierProfile::bump, dim}; }
MollifierKernel MollifierKernel::truncated_gaussian(int dim) {
  return {MollifierProfile::truncated_gaussian, dim};
}
MollifierKernel MollifierKernel::make(MollifierProfile profile, int dim) { return {profile, dim}; }

double MollifierKernel::radial(double r) const noexcept {
  return raw_profile(profile_, r) / normalization_;
}

// ---------------------------------------------------------------------------
// Field implementations

std::size_t GridSamples::expected_size() const {
  std::size_t n = static_cast<std::size_t>(n_t);
  for (auto k : n_x) n *= static_cast<std::size_t>(k);
  return n * static_cast<std::size_t>(dim);
}

namespace detail {

void FieldImpl::check_time(double t) const {
  if (!(t >= 0.0 && t <= meta_.horizon))
    throw InvalidInput("field '" + name_ + "' evaluated at t=" + std::to_string(t) +
                       " outside [0, " + std::to_string(meta_.horizon) + "]");
}

namespace {

class AnalyticField final : public FieldImpl {
 public:
  AnalyticField(std::string name, int dim, FieldFunction fn, FieldMetadata meta, FlowFunction flow)
      : FieldImpl(std::move(name), dim, meta), fn_(std::move(fn)), flow_(std::move(flow)) {}

  FieldKind kind() const noexcept override { return FieldKind::analytic; }
  Vec evaluate(double t, const TorusPoint& x) const override { return fn_(t, x); }
  const FlowFunction* exact_flow() const noexcept override { return flow_ ? &flow_ : nullptr; }

 private:
  FieldFunction fn_;
  FlowFunction flow_;
};

class SampledField final : public FieldImpl {
 public:
  SampledField(std::string name, GridSamples samples, FieldMetadata meta)
      : FieldImpl(std::move(name), samples.dim, meta), s_(std::move(samples)) {
    stride_.assign(s_.dim, 1);
    for (int a = s_.dim - 2; a >= 0; --a) stride_[a] = stride_[a + 1] * s_.n_x[a + 1];
    slab_size_ = stride_[0] * s_.n_x[0];
  }

  FieldKind kind() const noexcept override { return FieldKind::grid_sampled; }

  Vec evaluate(double t, const TorusPoint& x) const override {
    const int d = s_.dim;
    std::int64_t slab = static_cast<std::int64_t>(std::floor(t / s_.horizon * s_.n_t));
    slab = std::clamp<std::int64_t>(slab, 0, s_.n_t - 1);

    std::int64_t lo[kMaxDim], hi[kMaxDim];
    double frac[kMaxDim];
    for (int a = 0; a < d; ++a) {
      const double s = x[a] * static_cast<double>(s_.n_x[a]);
      const double i0 = std::floor(s);
      frac[a] = s - i0;
      lo[a] = static_cast<std::int64_t>(i0) % s_.n_x[a];
      hi[a] = (lo[a] + 1) % s_.n_x[a];
    }
    Vec out(d);
    const double* base = s_.values.data() + slab * slab_size_ * d;
    for (int corner = 0; corner < (1 << d); ++corner) {
      double w = 1.0;
      std::int64_t offset = 0;
      for (int a = 0; a < d; ++a) {
        const bool up = (corner >> a) & 1;
        w *= up ? frac[a] : 1.0 - frac[a];
        offset += (up ? hi[a] : lo[a]) * stride_[a];
      }
      if (w == 0.0) continue;
      const double* v = base + offset * d;
      for (int k = 0; k < d; ++k) out[k] += w * v[k];
    }
    const double n = out.norm();
    if (n > meta_.sup_norm && n > 0.0) out *= meta_.sup_norm / n;
    return out;
  }

 private:
  GridSamples s_;
  std::vector<std::int64_t> stride_;
  std::int64_t slab_size_ = 0;
};

// Kernel-weighted sum over a fixed periodic lattice of spacing 1/M, M = ceil(q / (2 delta)),
// normalized by the kernel sum. Nodes do not move with x, so the result is as
// smooth in x as the kernel even when the base field is not.
class MollifiedField final : public FieldImpl {
 public:
  MollifiedField(std::shared_ptr<const FieldImpl> base, double delta, const MollifierKernel& kernel,
                 int q)
      : FieldImpl(base->name() + "*eta", base->dim(), base->metadata()),
        base_(std::move(base)),
        kernel_(kernel),
        delta_(delta),
        lattice_(static_cast<int>(std::ceil(q / (2.0 * delta)))) {
    meta_.lipschitz = true;
    std::size_t nodes = 1;
    for (int a = 0; a < dim_; ++a) nodes *= static_cast<std::size_t>(lattice_);
    if (!meta_.autonomous || nodes > kMaxCachedNodes) return;
    cache_.reserve(nodes);
    int idx[kMaxDim] = {0, 0, 0};
    for (std::size_t k = 0; k < nodes; ++k) {
      Vec y(dim_);
      for (int a = 0; a < dim_; ++a) y[a] = (idx[a] + 0.5) / lattice_;
      cache_.push_back(base_->evaluate(0.0, wrap(y)));
      int a = 0;
      while (a < dim_ && ++idx[a] == lattice_) idx[a++] = 0;
    }
  }

  FieldKind kind() const noexcept override { return FieldKind::mollified; }
  double delta() const noexcept override { return delta_; }

  Vec evaluate(double t, const TorusPoint& x) const override {
    const int d = dim_;
    const double h = 1.0 / lattice_;
    int lo[kMaxDim], count[kMaxDim], idx[kMaxDim] = {0, 0, 0};
    for (int a = 0; a < d; ++a) {
      lo[a] = static_cast<int>(std::ceil((x[a] - delta_) / h - 0.5));
      count[a] = static_cast<int>(std::floor((x[a] + delta_) / h - 0.5)) - lo[a] + 1;
      if (count[a] <= 0) return base_->evaluate(t, x);
    }
    Vec out(d), y(d), r(d);
    double total = 0.0;
    for (;;) {
      for (int a = 0; a < d; ++a) {
        y[a] = (lo[a] + idx[a] + 0.5) * h;
        r[a] = (x[a] - y[a]) / delta_;
      }
      const double k = kernel_(r);
      if (k > 0.0) {
        out += k * (cache_.empty() ? base_->evaluate(t, wrap(y)) : cached(lo, idx));
        total += k;
      }
      int a = 0;
      while (a < d && ++idx[a] == count[a]) idx[a++] = 0;
      if (a == d) break;
    }
    if (!(total > 0.0)) return base_->evaluate(t, x);
    out *= 1.0 / total;
    return out;
  }

 private:
  static constexpr std::size_t kMaxCachedNodes = std::size_t{1} << 22;

  const Vec& cached(const int* lo, const int* idx) const {
    std::size_t k = 0;
    for (int a = dim_ - 1; a >= 0; --a)
      k = k * lattice_ + static_cast<std::size_t>(((lo[a] + idx[a]) % lattice_ + lattice_) % lattice_);
    return cache_[k];
  }

  std::shared_ptr<const FieldImpl> base_;
  MollifierKernel kernel_;
  double delta_;
  int lattice_;
  std::vector<Vec> cache_;
};

}  // namespace
}  // namespace detail

VelocityField VelocityField::analytic(std::string name, int dim, FieldFunction fn,
                                      FieldMetadata meta, FlowFunction exact_flow) {
  if (dim < 1 || dim > kMaxDim) throw InvalidInput("analytic field: unsupported dimension");
  if (!fn) throw InvalidInput("analytic field: empty evaluation function");
  return VelocityField(std::make_shared<detail::AnalyticField>(std::move(name), dim, std::move(fn),
                                                               meta, std::move(exact_flow)));
}

VelocityField VelocityField::from_samples(std::string name, GridSamples samples,
                                          FieldMetadata meta) {
  if (samples.dim < 1 || samples.dim > kMaxDim)
    throw InvalidInput("grid field: unsupported dimension");
  if (static_cast<int>(samples.n_x.size()) != samples.dim)
    throw InvalidInput("grid field: need one resolution per axis");
  for (auto n : samples.n_x)
    if (n < 1) throw InvalidInput("grid field: resolutions must be positive");
  if (samples.n_t < 1) throw InvalidInput("grid field: N_t must be positive");
  if (!(samples.horizon > 0.0)) throw InvalidInput("grid field: horizon must be positive");
  if (samples.values.size() != samples.expected_size())
    throw InvalidInput("grid field: expected " + std::to_string(samples.expected_size()) +
                       " values, got " + std::to_string(samples.values.size()));
  double sup = 0.0;
  const int d = samples.dim;
  for (std::size_t i = 0; i < samples.values.size(); i += d) {
    double s = 0.0;
    for (int k = 0; k < d; ++k) s += samples.values[i + k] * samples.values[i + k];
    sup = std::max(sup, std::sqrt(s));
  }
  meta.sup_norm = sup;
  meta.horizon = samples.horizon;
  if (samples.n_t == 1) meta.autonomous = true;
  return VelocityField(
      std::make_shared<detail::SampledField>(std::move(name), std::move(samples), meta));
}

Vec VelocityField::eval(double t, const TorusPoint& x) const {
  impl_->check_time(t);
  if (x.dim() != impl_->dim())
    throw InvalidInput("field '" + impl_->name() + "': point dimension mismatch");
  return impl_->evaluate(t, x);
}

FieldKind VelocityField::kind() const noexcept { return impl_->kind(); }
int VelocityField::dim() const noexcept { return impl_->dim(); }
const std::string& VelocityField::name() const noexcept { return impl_->name(); }
const FieldMetadata& VelocityField::metadata() const noexcept { return impl_->metadata(); }
double VelocityField::delta() const noexcept { return impl_->delta(); }
bool VelocityField::has_exact_flow() const noexcept { return impl_->exact_flow() != nullptr; }

TorusPoint VelocityField::exact_flow(double t, const TorusPoint& x0) const {
  const FlowFunction* f = impl_->exact_flow();
  if (!f) throw InvalidInput("field '" + impl_->name() + "' has no closed-form flow");
  return (*f)(t, x0);
}

VelocityField mollify(const VelocityField& field, double delta, const MollifierKernel& kernel,
                      int quad_points_per_axis) {
  if (!(delta > 0.0 && delta <= 0.25))
    throw InvalidInput("mollify: delta must lie in (0, 1/4], got " + std::to_string(delta));
  if (quad_points_per_axis < 8) throw InvalidInput("mollify: need at least 8 points per axis");
  if (kernel.dim() != field.dim()) throw InvalidInput("mollify: kernel dimension mismatch");
  return VelocityField(std::make_shared<detail::MollifiedField>(field.impl_, delta, kernel,
                                                                quad_points_per_axis));
}

Vec time_averaged_velocity(const VelocityField& field, double t_a, double t_b, const TorusPoint& x,
                           int n_quad) {
  if (!(t_a < t_b)) throw InvalidInput("time_averaged_velocity: need t_a < t_b");
  if (n_quad < 1) throw InvalidInput("time_averaged_velocity: n_quad must be >= 1");
  const double h = (t_b - t_a) / n_quad;
  Vec sum = field.eval(t_a + 0.5 * h, x);
  for (int k = 1; k < n_quad; ++k) sum += field.eval(t_a + (k + 0.5) * h, x);
  if (n_quad > 1) sum *= 1.0 / n_quad;
  return sum;
}

}  // namespace lagflow
