#include "lagflow/flow.hpp"

#include <cmath>
#include <memory>
#include <ostream>
#include <string>

#include "lagflow/error.hpp"

namespace lagflow {

namespace {

// Node index reached at time t and whether t is (numerically) a node.
std::pair<int, bool> locate_node(const FlowConfig& cfg, double t) {
  const double r = t / cfg.dt;
  const double n = std::round(r);
  if (std::abs(r - n) <= 1e-9 * std::max(1.0, n)) return {static_cast<int>(n), true};
  return {static_cast<int>(std::floor(r)), false};
}

void check_target(const FlowConfig& cfg, double t_now, double t_target) {
  if (!std::isfinite(t_target)) throw InvalidInput("flow: non-finite target time");
  if (t_target > cfg.T * (1.0 + 1e-12))
    throw InvalidInput("flow: target time " + std::to_string(t_target) + " exceeds T = " +
                       std::to_string(cfg.T));
  if (t_target < t_now - 1e-12 * std::max(1.0, cfg.T))
    throw InvalidInput("flow: cannot move backwards in time");
}

}  // namespace

std::string_view to_string(DeltaRule rule) {
  switch (rule) {
    case DeltaRule::sqrt_dt: return "sqrt_dt";
    case DeltaRule::none: return "none";
    case DeltaRule::explicit_value: return "explicit";
  }
  return "?";
}

DeltaRule parse_delta_rule(std::string_view name) {
  if (name == "sqrt_dt") return DeltaRule::sqrt_dt;
  if (name == "none") return DeltaRule::none;
  if (name == "explicit") return DeltaRule::explicit_value;
  throw InvalidInput("unknown delta rule '" + std::string(name) + "'");
}

void FlowConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidInput("flow config: dt must be > 0");
  if (!(T > 0.0) || !std::isfinite(T)) throw InvalidInput("flow config: T must be > 0");
  const double r = T / dt;
  const double n = std::round(r);
  if (n < 1.0 || std::abs(r - n) > 1e-9 * n)
    throw InvalidInput("flow config: T / dt = " + std::to_string(r) + " is not a positive integer");
  if (n_quad_time < 1) throw InvalidInput("flow config: n_quad_time must be >= 1");
  if (mollifier_quad < 8) throw InvalidInput("flow config: mollifier_quad must be >= 8");
  if (delta_rule == DeltaRule::explicit_value && !(delta > 0.0))
    throw InvalidInput("flow config: explicit delta must be > 0");
  if (effective_delta() > 0.25)
    throw InvalidInput("flow config: delta = " + std::to_string(effective_delta()) +
                       " exceeds 1/4 (sqrt_dt needs dt <= 1/16)");
}

int FlowConfig::steps() const {
  validate();
  return static_cast<int>(std::round(T / dt));
}

double FlowConfig::effective_delta() const {
  switch (delta_rule) {
    case DeltaRule::sqrt_dt: return std::sqrt(dt);
    case DeltaRule::none: return 0.0;
    case DeltaRule::explicit_value: return delta;
  }
  return 0.0;
}

DeltaRule default_delta_rule(const VelocityField& field) {
  return field.metadata().p <= field.dim() ? DeltaRule::sqrt_dt : DeltaRule::none;
}

VelocityField effective_field(const VelocityField& field, const FlowConfig& cfg) {
  const double delta = cfg.effective_delta();
  if (delta == 0.0) return field;
  return mollify(field, delta, MollifierKernel::make(cfg.kernel, field.dim()), cfg.mollifier_quad);
}

ParticleEnsemble ParticleEnsemble::at_start(std::vector<TorusPoint> initial) {
  ParticleEnsemble e;
  e.positions = initial;
  e.node_positions = initial;
  e.provenance = std::move(initial);
  return e;
}

// ---------------------------------------------------------------------------
// Phi_E

EulerFlow::EulerFlow(const VelocityField& field, const FlowConfig& cfg)
    : u_eff_(effective_field(field, cfg)), cfg_(cfg) {
  cfg_.validate();
}

Vec EulerFlow::step(int n, const TorusPoint& x) const {
  const Vec v = time_averaged_velocity(u_eff_, cfg_.node_time(n), cfg_.node_time(n + 1), x,
                                       cfg_.n_quad_time);
  return x.lift() + cfg_.dt * v;
}

void EulerFlow::advance(ParticleEnsemble& ens, double t_target) const {
  check_target(cfg_, ens.t, t_target);
  if (ens.node_positions.size() != ens.positions.size())
    throw InvalidInput("ensemble: positions and node positions differ in size");
  auto [m, on_node] = locate_node(cfg_, t_target);
  const int steps = cfg_.steps();
  if (m >= steps) {
    m = steps;
    on_node = true;
  }
  for (int n = ens.node_index; n < m; ++n)
    for (TorusPoint& x : ens.node_positions) x = wrap(step(n, x));
  ens.node_index = std::max(ens.node_index, m);
  if (on_node) {
    ens.positions = ens.node_positions;
  } else {
    const double tn = cfg_.node_time(m), tn1 = cfg_.node_time(m + 1);
    for (std::size_t i = 0; i < ens.size(); ++i) {
      const Vec v = time_averaged_velocity(u_eff_, tn, tn1, ens.node_positions[i],
                                           cfg_.n_quad_time);
      ens.positions[i] = wrap(ens.node_positions[i].lift() + (t_target - tn) * v);
    }
  }
  ens.t = t_target;
}

TorusPoint EulerFlow::map(double t, const TorusPoint& x0) const {
  ParticleEnsemble e = ParticleEnsemble::at_start({x0});
  advance(e, t);
  return e.positions.front();
}

ParticleEnsemble euler_flow_advance(const VelocityField& field, const FlowConfig& cfg,
                                    ParticleEnsemble ensemble, double t_target) {
  EulerFlow(field, cfg).advance(ensemble, t_target);
  return ensemble;
}

// ---------------------------------------------------------------------------
// Mean Euler flow

MeanEulerFlow::MeanEulerFlow(const VelocityField& field, const FlowConfig& cfg, const Mesh& mesh,
                             int quad_per_cell)
    : u_(field), cfg_(cfg), mesh_(mesh), quad_per_cell_(quad_per_cell) {
  if (!(field.metadata().p > field.dim()))
    throw UnsupportedRegime("mean Euler flow needs a declared exponent p > d (field '" +
                            field.name() + "' declares p = " +
                            std::to_string(field.metadata().p) + ")");
  if (field.dim() != mesh.dim()) throw InvalidInput("mean Euler flow: field and mesh dimensions differ");
  if (quad_per_cell < 1) throw InvalidInput("mean Euler flow: quad_per_cell must be >= 1");
  cfg_.validate();
  u_ = effective_field(field, cfg_);
  quad_.reserve(mesh.size());
  for (std::size_t i = 0; i < mesh.size(); ++i)
    quad_.push_back(mesh.cell_quadrature(static_cast<int>(i), quad_per_cell));
  node_offsets_.assign(mesh.size(), Vec(mesh.dim()));
  offsets_ = node_offsets_;
}

Vec MeanEulerFlow::cell_velocity(int cell, int n, const Vec& offset) const {
  const CellQuadrature& q = quad_[cell];
  const double ta = cfg_.node_time(n), tb = cfg_.node_time(n + 1);
  Vec sum(mesh_.dim());
  double wsum = 0.0;
  for (std::size_t k = 0; k < q.points.size(); ++k) {
    sum += q.weights[k] *
           time_averaged_velocity(u_, ta, tb, translate(q.points[k], offset), cfg_.n_quad_time);
    wsum += q.weights[k];
  }
  return (1.0 / wsum) * sum;
}

void MeanEulerFlow::advance(double t_target) {
  check_target(cfg_, t_, t_target);
  auto [m, on_node] = locate_node(cfg_, t_target);
  const int steps = cfg_.steps();
  if (m >= steps) {
    m = steps;
    on_node = true;
  }
  for (int n = node_index_; n < m; ++n)
    for (std::size_t i = 0; i < node_offsets_.size(); ++i)
      node_offsets_[i] += cfg_.dt * cell_velocity(static_cast<int>(i), n, node_offsets_[i]);
  node_index_ = std::max(node_index_, m);
  if (on_node) {
    offsets_ = node_offsets_;
  } else {
    const double tn = cfg_.node_time(m);
    for (std::size_t i = 0; i < node_offsets_.size(); ++i)
      offsets_[i] = node_offsets_[i] +
                    (t_target - tn) * cell_velocity(static_cast<int>(i), m, node_offsets_[i]);
  }
  t_ = t_target;
}

std::vector<Vec> mean_euler_flow_advance(const VelocityField& field, const FlowConfig& cfg,
                                         const Mesh& mesh,
                                         const std::vector<TorusPoint>& representatives,
                                         double t_target, int quad_per_cell) {
  if (representatives.size() != mesh.size())
    throw InvalidInput("mean Euler flow: one representative per cell required");
  for (std::size_t i = 0; i < representatives.size(); ++i)
    if (mesh.locate(representatives[i]) != static_cast<int>(i))
      throw InvalidInput("mean Euler flow: representative " + std::to_string(i) +
                         " lies outside its cell");
  MeanEulerFlow flow(field, cfg, mesh, quad_per_cell);
  flow.advance(t_target);
  return flow.offsets();
}

// ---------------------------------------------------------------------------
// Reference flow

namespace {

template <typename Sink>
TorusPoint rk4(const VelocityField& field, const TorusPoint& x0, double T, double dt_ref,
               Sink&& sink) {
  if (!field.metadata().lipschitz)
    throw RoughFieldError("reference flow refused: field '" + field.name() +
                          "' has no Lipschitz bound; use a self-convergence reference");
  if (!(dt_ref > 0.0)) throw InvalidInput("reference flow: dt_ref must be > 0");
  if (!(T >= 0.0) || !std::isfinite(T)) throw InvalidInput("reference flow: T must be >= 0");
  const int n = static_cast<int>(std::ceil(T / dt_ref - 1e-9));
  TorusPoint x = x0;
  sink(0.0, x);
  if (n == 0) return x;
  const double h = T / n;
  for (int k = 0; k < n; ++k) {
    const double t = k * h;
    const Vec y = x.lift();
    const Vec k1 = field.eval(t, x);
    const Vec k2 = field.eval(t + 0.5 * h, wrap(y + (0.5 * h) * k1));
    const Vec k3 = field.eval(t + 0.5 * h, wrap(y + (0.5 * h) * k2));
    const Vec k4 = field.eval(t + h, wrap(y + h * k3));
    x = wrap(y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
    sink((k + 1) * h, x);
  }
  return x;
}

}  // namespace

Trajectory reference_flow(const VelocityField& field, const TorusPoint& x0, double T,
                          double dt_ref) {
  Trajectory tr;
  rk4(field, x0, T, dt_ref, [&](double t, const TorusPoint& x) {
    tr.times.push_back(t);
    tr.points.push_back(x);
  });
  return tr;
}

TorusPoint reference_flow_map(const VelocityField& field, const TorusPoint& x0, double T,
                              double dt_ref) {
  return rk4(field, x0, T, dt_ref, [](double, const TorusPoint&) {});
}

// ---------------------------------------------------------------------------
// Evaluators

FlowEvaluator FlowEvaluator::identity(int dim) {
  return FlowEvaluator(dim, [](double, const std::vector<TorusPoint>& x) { return x; });
}

FlowEvaluator FlowEvaluator::euler(const VelocityField& field, const FlowConfig& cfg) {
  auto flow = std::make_shared<const EulerFlow>(field, cfg);
  return FlowEvaluator(field.dim(), [flow](double t, const std::vector<TorusPoint>& x0) {
    ParticleEnsemble e = ParticleEnsemble::at_start(x0);
    flow->advance(e, t);
    return e.positions;
  });
}

FlowEvaluator FlowEvaluator::reference(const VelocityField& field, double dt_ref) {
  if (!field.metadata().lipschitz)
    throw RoughFieldError("reference flow refused for field '" + field.name() + "'");
  return FlowEvaluator(field.dim(), [field, dt_ref](double t, const std::vector<TorusPoint>& x0) {
    std::vector<TorusPoint> out;
    out.reserve(x0.size());
    for (const TorusPoint& x : x0) out.push_back(reference_flow_map(field, x, t, dt_ref));
    return out;
  });
}

FlowEvaluator FlowEvaluator::exact(const VelocityField& field) {
  if (!field.has_exact_flow())
    throw InvalidInput("field '" + field.name() + "' has no closed-form flow");
  return FlowEvaluator(field.dim(), [field](double t, const std::vector<TorusPoint>& x0) {
    std::vector<TorusPoint> out;
    out.reserve(x0.size());
    for (const TorusPoint& x : x0) out.push_back(field.exact_flow(t, x));
    return out;
  });
}

TorusPoint FlowEvaluator::operator()(double t, const TorusPoint& x0) const {
  return fn_(t, std::vector<TorusPoint>{x0}).front();
}

void write_trajectory_csv(std::ostream& os, const std::vector<Trajectory>& trajectories) {
  const int d = trajectories.empty() || trajectories.front().points.empty()
                    ? 0
                    : trajectories.front().points.front().dim();
  os << "particle_id,t";
  for (int a = 1; a <= d; ++a) os << ",x_" << a;
  os << '\n';
  const auto old = os.precision(17);
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    const Trajectory& tr = trajectories[i];
    for (std::size_t k = 0; k < tr.points.size(); ++k) {
      os << i << ',' << tr.times[k];
      for (int a = 0; a < tr.points[k].dim(); ++a) os << ',' << tr.points[k][a];
      os << '\n';
    }
  }
  os.precision(old);
}

}  // namespace lagflow
