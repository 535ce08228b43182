#include "lagflow/solver.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "lagflow/error.hpp"
#include "lagflow/quadrature.hpp"
#include "lagflow/random.hpp"

namespace lagflow {

namespace {

constexpr std::uint64_t kProbeStream = 0x9e3779b97f4a7c15ULL;

void check_sample_times(const std::vector<double>& times, double T) {
  double prev = 0.0;
  for (double t : times) {
    if (!std::isfinite(t) || t < 0.0 || t > T * (1.0 + 1e-12))
      throw InvalidInput("sample time " + std::to_string(t) + " outside [0, T]");
    if (t < prev) throw InvalidInput("sample times must be nondecreasing");
    prev = t;
  }
}

std::vector<TorusPoint> halton_cloud(int dim, int n) {
  std::vector<TorusPoint> out;
  out.reserve(n);
  double u[8];
  for (int i = 0; i < n; ++i) {
    halton_point(static_cast<std::uint64_t>(i), dim, u);
    Vec v(dim);
    for (int k = 0; k < dim; ++k) v[k] = u[k];
    out.push_back(wrap(v));
  }
  return out;
}

std::vector<std::pair<TorusPoint, TorusPoint>> probe_pairs(int dim, int n, double radius,
                                                           std::uint64_t seed) {
  RandomStream rng(seed ^ kProbeStream);
  std::vector<std::pair<TorusPoint, TorusPoint>> pairs;
  pairs.reserve(n);
  for (int i = 0; i < n; ++i) {
    Vec x(dim), v(dim);
    for (int k = 0; k < dim; ++k) {
      x[k] = rng.uniform();
      v[k] = rng.uniform(-radius, radius) / std::sqrt(double(dim));
    }
    pairs.emplace_back(wrap(x), wrap(x + v));
  }
  return pairs;
}

}  // namespace

std::string_view to_string(Scheme scheme) {
  return scheme == Scheme::singular ? "singular" : "diffuse";
}

Scheme parse_scheme(std::string_view name) {
  if (name == "singular") return Scheme::singular;
  if (name == "diffuse") return Scheme::diffuse;
  throw InvalidInput("unknown scheme '" + std::string(name) + "'");
}

std::string_view to_string(Aggregate aggregate) {
  return aggregate == Aggregate::per_rep ? "per_rep" : "mean_of_n";
}

Aggregate parse_aggregate(std::string_view name) {
  if (name == "per_rep") return Aggregate::per_rep;
  if (name == "mean_of_n") return Aggregate::mean_of_n;
  throw InvalidInput("unknown aggregate '" + std::string(name) + "'");
}

double SchemeRun::total_mass() const {
  return snapshots.empty() ? 0.0 : snapshots.front().total_mass();
}

double SchemeRun::min_det() const {
  double m = std::numeric_limits<double>::quiet_NaN();
  for (const SnapshotDiagnostics& d : diagnostics)
    if (!std::isnan(d.min_det) && !(d.min_det >= m)) m = d.min_det;
  return m;
}

SchemeRun run_singular(const VelocityField& field, const Mesh& mesh, const Density& rho0,
                       const FlowConfig& cfg, std::uint64_t seed,
                       const std::vector<double>& sample_times, RepresentativeMode rep_mode,
                       const DiagnosticOptions& diagnostics) {
  if (rho0.dim != mesh.dim() || field.dim() != mesh.dim())
    throw InvalidInput("run_singular: field, mesh and density dimensions differ");
  const EulerFlow flow(field, cfg);
  SchemeRun run = run_singular(flow, mesh, rho0, cell_masses(mesh, rho0), seed, sample_times,
                               rep_mode, diagnostics);
  run.field_name = field.name();
  return run;
}

SchemeRun run_singular(const EulerFlow& flow, const Mesh& mesh, const Density& rho0,
                       const std::vector<double>& masses, std::uint64_t seed,
                       const std::vector<double>& sample_times, RepresentativeMode rep_mode,
                       const DiagnosticOptions& diagnostics) {
  const FlowConfig& cfg = flow.config();
  cfg.validate();
  check_sample_times(sample_times, cfg.T);
  if (masses.size() != mesh.size()) throw InvalidInput("run_singular: one mass per cell required");
  double total = 0.0;
  for (double m : masses) {
    if (!(m >= 0.0) || !std::isfinite(m)) throw InvalidInput("run_singular: invalid cell mass");
    total += m;
  }
  if (!(total > 0.0)) throw InvalidInput("run_singular: initial density has zero mass");

  SchemeRun run;
  run.scheme = Scheme::singular;
  run.field_name = flow.field().name();
  run.mesh_kind = mesh.kind();
  run.mesh_resolution = mesh.resolution();
  run.dx = mesh.dx();
  run.cfg = cfg;
  run.seed = seed;
  run.rep_mode = rep_mode;
  run.sample_times = sample_times;

  RandomStream rng(seed);
  std::vector<TorusPoint> start;
  std::vector<double> weights;
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    if (masses[i] <= 0.0) continue;
    const int id = static_cast<int>(i);
    start.push_back(sample_representative(mesh, id, rng, rep_mode, &rho0, masses[i]));
    weights.push_back(masses[i]);
    run.atom_cell.push_back(id);
  }

  ParticleEnsemble ensemble = ParticleEnsemble::at_start(std::move(start));
  for (double t : sample_times) {
    flow.advance(ensemble, t);
    run.snapshots.emplace_back(ensemble.positions, weights);
  }

  if (diagnostics.det_points > 0 || diagnostics.probe_pairs > 0) {
    auto shared = std::make_shared<const EulerFlow>(flow);
    const FlowEvaluator eval(mesh.dim(), [shared](double t, const std::vector<TorusPoint>& x0) {
      ParticleEnsemble e = ParticleEnsemble::at_start(x0);
      shared->advance(e, t);
      return e.positions;
    });
    const std::vector<TorusPoint> pts = halton_cloud(mesh.dim(), diagnostics.det_points);
    const auto pairs =
        probe_pairs(mesh.dim(), diagnostics.probe_pairs, diagnostics.probe_radius, seed);
    for (double t : sample_times) {
      SnapshotDiagnostics d;
      d.t = t;
      if (!pts.empty()) {
        const std::vector<double> dets = jacobian_determinants(eval, t, pts, diagnostics.fd_step);
        d.min_det = *std::min_element(dets.begin(), dets.end());
      }
      if (!pairs.empty()) d.bilipschitz = bilipschitz_probe(eval, t, pairs);
      run.diagnostics.push_back(d);
    }
  }
  return run;
}

CellDensity CellDensity::piecewise_constant(const Mesh& mesh, const std::vector<double>& masses) {
  if (masses.size() != mesh.size())
    throw InvalidInput("CellDensity: one mass per cell required");
  std::vector<double> values(masses.size());
  for (std::size_t i = 0; i < masses.size(); ++i) values[i] = masses[i] / mesh.cells()[i].volume;
  return {[values = std::move(values)](int id, const TorusPoint&) { return values.at(id); }};
}

CellDensity CellDensity::restricted(const Density& rho0) {
  return {[rho0](int, const TorusPoint& x) { return rho0(x); }};
}

SchemeRun run_diffuse(const VelocityField& field, const Mesh& mesh, const CellDensity& rho0_bar,
                      const FlowConfig& cfg, const std::vector<double>& sample_times,
                      int quad_per_cell) {
  if (field.dim() != mesh.dim()) throw InvalidInput("run_diffuse: field and mesh dimensions differ");
  if (!rho0_bar.fn) throw InvalidInput("run_diffuse: missing cell density");
  cfg.validate();
  check_sample_times(sample_times, cfg.T);
  MeanEulerFlow flow(field, cfg, mesh, quad_per_cell);

  SchemeRun run;
  run.scheme = Scheme::diffuse;
  run.field_name = field.name();
  run.mesh_kind = mesh.kind();
  run.mesh_resolution = mesh.resolution();
  run.dx = mesh.dx();
  run.cfg = cfg;
  run.quad_per_cell = quad_per_cell;
  run.sample_times = sample_times;

  std::vector<double> weights;
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    const int id = static_cast<int>(i);
    const CellQuadrature& q = flow.nodes(id);
    for (std::size_t k = 0; k < q.points.size(); ++k) {
      const double rho = rho0_bar.fn(id, q.points[k]);
      if (!(rho >= 0.0) || !std::isfinite(rho))
        throw InvalidInput("run_diffuse: cell density must be finite and >= 0");
      weights.push_back(q.weights[k] * rho);
      run.atom_cell.push_back(id);
    }
  }
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw InvalidInput("run_diffuse: initial density has zero mass");

  for (double t : sample_times) {
    flow.advance(t);
    std::vector<TorusPoint> pts;
    pts.reserve(weights.size());
    for (std::size_t i = 0; i < mesh.size(); ++i) {
      const Vec& offset = flow.offsets()[i];
      for (const TorusPoint& x : flow.nodes(static_cast<int>(i)).points)
        pts.push_back(translate(x, offset));
    }
    run.snapshots.emplace_back(std::move(pts), weights);
  }
  return run;
}

std::vector<DiscreteMeasure> reference_solution(const VelocityField& field, const Density& rho0,
                                                const std::vector<double>& sample_times,
                                                const ReferenceOptions& options) {
  const int d = field.dim();
  if (rho0.dim != d) throw InvalidInput("reference_solution: density dimension differs");
  if (options.n_particles < 1) throw InvalidInput("reference_solution: need n_particles >= 1");
  if (!(options.total_mass > 0.0)) throw InvalidInput("reference_solution: total_mass must be > 0");
  if (!(rho0.sup_bound > 0.0)) throw InvalidInput("reference_solution: density needs sup_bound > 0");
  const bool exact = field.has_exact_flow();
  if (!exact && !field.metadata().lipschitz)
    throw RoughFieldError("reference_solution: field '" + field.name() +
                          "' is rough and has no closed-form flow; use self_reference_solution");
  if (!exact && !(options.dt_ref > 0.0)) throw InvalidInput("reference_solution: dt_ref must be > 0");
  for (double t : sample_times)
    if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidInput("reference_solution: bad sample time");

  std::vector<TorusPoint> cloud;
  cloud.reserve(options.n_particles);
  double u[8];
  const std::uint64_t limit = 1000ULL * static_cast<std::uint64_t>(options.n_particles);
  for (std::uint64_t i = 0; static_cast<int>(cloud.size()) < options.n_particles; ++i) {
    if (i >= limit) throw InvalidInput("reference_solution: density rejection sampling stalled");
    halton_point(i, d + 1, u);
    Vec v(d);
    for (int k = 0; k < d; ++k) v[k] = u[k];
    const TorusPoint x = wrap(v);
    if (u[d] * rho0.sup_bound <= rho0(x)) cloud.push_back(x);
  }
  const std::vector<double> weights(cloud.size(), options.total_mass / options.n_particles);

  std::vector<DiscreteMeasure> out;
  out.reserve(sample_times.size());
  for (double t : sample_times) {
    std::vector<TorusPoint> pts;
    pts.reserve(cloud.size());
    for (const TorusPoint& x : cloud)
      pts.push_back(t == 0.0 ? x
                    : exact  ? field.exact_flow(t, x)
                             : reference_flow_map(field, x, t, options.dt_ref));
    out.emplace_back(std::move(pts), weights);
  }
  return out;
}

std::vector<DiscreteMeasure> self_reference_solution(const VelocityField& field, const Mesh& mesh,
                                                     const Density& rho0, const FlowConfig& fine,
                                                     std::uint64_t master_seed,
                                                     const std::vector<double>& sample_times) {
  return run_singular(field, mesh, rho0, fine, master_seed, sample_times).snapshots;
}

ErrorPoint measure_distance(const DiscreteMeasure& a, const DiscreteMeasure& b,
                            const GroundMetric& metric) {
  const auto support = [](const DiscreteMeasure& m) {
    std::size_t n = 0;
    for (double w : m.weights()) n += w >= kWeightFloor;
    return n;
  };
  ErrorPoint e;
  if (support(a) <= kExactSupportCap && support(b) <= kExactSupportCap) {
    e.distance = wasserstein_exact(a, b, metric).cost;
  } else {
    const int dim = a.empty() ? b.dim() : a.dim();
    e.distance = wasserstein_entropic(a, b, metric, 5e-3 * metric.diameter(dim)).upper;
    e.entropic = true;
  }
  return e;
}

std::vector<ErrorPoint> error_curve(const SchemeRun& run,
                                    const std::vector<DiscreteMeasure>& reference,
                                    const GroundMetric& metric) {
  if (reference.size() != run.snapshots.size())
    throw InvalidInput("error_curve: reference and run have different sample counts");
  std::vector<ErrorPoint> out;
  for (std::size_t k = 0; k < reference.size(); ++k) {
    ErrorPoint e = measure_distance(run.snapshots[k], reference[k], metric);
    e.t = run.sample_times[k];
    out.push_back(e);
  }
  return out;
}

}  // namespace lagflow
