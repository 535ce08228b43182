// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails. Optional arguments select criteria by
// number, e.g. `lagflow_acceptance 2 3`.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "lagflow/error.hpp"
#include "lagflow/experiment.hpp"
#include "lagflow/flow.hpp"
#include "lagflow/random.hpp"
#include "lagflow/solver.hpp"
#include "lagflow/transport.hpp"

using namespace lagflow;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

FlowConfig flow_config(const VelocityField& field, double dt, double T) {
  FlowConfig cfg;
  cfg.dt = dt;
  cfg.T = T;
  cfg.delta_rule = default_delta_rule(field);
  return cfg;
}

TorusPoint random_point(RandomStream& rng, int dim) {
  Vec v(dim);
  for (int k = 0; k < dim; ++k) v[k] = rng.uniform();
  return wrap(v);
}

DiscreteMeasure random_measure(RandomStream& rng, int n, int dim, double mass) {
  DiscreteMeasure m(dim);
  std::vector<double> w(n);
  for (double& x : w) x = rng.uniform(0.05, 1.0);
  const double s = std::accumulate(w.begin(), w.end(), 0.0);
  for (int i = 0; i < n; ++i) m.add(random_point(rng, dim), w[i] * mass / s);
  return m;
}

// Every snapshot of every run seen by the suite; criterion 11 audits them.
std::vector<SchemeRun> g_runs;

// ---------------------------------------------------------------------------
// 1. Constant fields are transported exactly.

Outcome exactness() {
  Outcome out;
  double worst = 0.0;
  int cases = 0;
  for (int dim : {1, 2}) {
    const Vec c = dim == 1 ? Vec{0.37} : Vec{0.37, -0.61};
    const VelocityField field = constant_field(c);
    RandomStream rng(11);
    std::vector<TorusPoint> x0;
    for (int i = 0; i < 64; ++i) x0.push_back(random_point(rng, dim));
    const auto err = [&](const TorusPoint& got, const TorusPoint& start, double t) {
      return periodic_distance(got, wrap(start.lift() + t * c));
    };
    for (int l = 2; l <= 6; ++l) {
      const FlowConfig cfg = flow_config(field, std::ldexp(1.0, -l), 1.0);
      const EulerFlow flow(field, cfg);
      for (double t : {0.25, 0.5, 1.0})
        for (const TorusPoint& x : x0) worst = std::max(worst, err(flow.map(t, x), x, t));
      if (l >= 4) {
        // The mollified branch must be exact too.
        FlowConfig smooth = cfg;
        smooth.delta_rule = DeltaRule::sqrt_dt;
        const EulerFlow mollified(field, smooth);
        for (const TorusPoint& x : x0) worst = std::max(worst, err(mollified.map(1.0, x), x, 1.0));
      }
      for (int n = 2; n <= 5; ++n) {
        const Mesh mesh = build_mesh(MeshKind::cartesian, dim, 1 << n);
        const std::vector<double> times{0.0, 0.5, 1.0};
        std::vector<TorusPoint> reps;
        for (std::size_t i = 0; i < mesh.size(); ++i) reps.push_back(mesh.cells()[i].anchor);
        const std::vector<Vec> off = mean_euler_flow_advance(field, cfg, mesh, reps, 1.0, 4);
        for (const Vec& v : off) worst = std::max(worst, (v - c).norm());

        SchemeRun sing = run_singular(field, mesh, uniform_density(dim), cfg, 5 + n, times);
        SchemeRun diff = run_diffuse(field, mesh,
                                     CellDensity::restricted(uniform_density(dim)), cfg, times, 4);
        for (const SchemeRun* run : {&sing, &diff})
          for (std::size_t k = 0; k < times.size(); ++k)
            for (std::size_t i = 0; i < run->snapshots[k].size(); ++i)
              worst = std::max(worst, err(run->snapshots[k].point(i), run->snapshots[0].point(i),
                                          times[k]));
        g_runs.push_back(std::move(sing));
        g_runs.push_back(std::move(diff));
        ++cases;
      }
    }
  }
  out.pass = worst <= 1e-12;
  out.detail = fmt("max error %.3e over %d (dt, dx) pairs", worst, cases);
  return out;
}

// ---------------------------------------------------------------------------
// 2. Exact solver against enumeration of basic plans; entropic brackets.

// Minimum cost over all spanning-tree basic solutions of the transportation
// polytope, each solved by leaf elimination.
double enumerate_plans(const std::vector<double>& a, const std::vector<double>& b,
                       const std::vector<std::vector<double>>& c) {
  const int n = static_cast<int>(a.size()), m = static_cast<int>(b.size());
  const int arcs = n * m, need = n + m - 1;
  double best = INFINITY;
  for (unsigned mask = 0; mask < (1u << arcs); ++mask) {
    if (std::popcount(mask) != need) continue;
    std::vector<int> parent(n + m);
    std::iota(parent.begin(), parent.end(), 0);
    const std::function<int(int)> root = [&](int u) {
      return parent[u] == u ? u : parent[u] = root(parent[u]);
    };
    bool tree = true;
    for (int e = 0; e < arcs && tree; ++e) {
      if (!(mask >> e & 1u)) continue;
      const int u = root(e / m), v = root(n + e % m);
      if (u == v) tree = false;
      parent[u] = v;
    }
    if (!tree) continue;
    std::vector<double> supply(a);
    supply.insert(supply.end(), b.begin(), b.end());
    std::vector<int> degree(n + m, 0);
    for (int e = 0; e < arcs; ++e)
      if (mask >> e & 1u) ++degree[e / m], ++degree[n + e % m];
    std::vector<double> flow(arcs, 0.0);
    unsigned left = mask;
    bool feasible = true;
    while (left && feasible) {
      int leaf = -1;
      for (int u = 0; u < n + m && leaf < 0; ++u)
        if (degree[u] == 1) leaf = u;
      int arc = -1;
      for (int e = 0; e < arcs; ++e)
        if ((left >> e & 1u) && (e / m == leaf || n + e % m == leaf)) arc = e;
      const double f = supply[leaf];
      if (f < -1e-12) feasible = false;
      flow[arc] = f;
      const int other = leaf < n ? n + arc % m : arc / m;
      supply[other] -= f;
      supply[leaf] = 0.0;
      --degree[leaf];
      --degree[other];
      left &= ~(1u << arc);
    }
    if (!feasible) continue;
    double cost = 0.0;
    for (int e = 0; e < arcs; ++e) cost += flow[e] * c[e / m][e % m];
    best = std::min(best, cost);
  }
  return best;
}

Outcome ot_oracle() {
  Outcome out;
  RandomStream rng(2024);
  double worst = 0.0;
  for (int inst = 0; inst < 100; ++inst) {
    const int n = 1 + static_cast<int>(rng.bits() % 4), m = 1 + static_cast<int>(rng.bits() % 4);
    const int dim = 1 + inst % 2;
    const DiscreteMeasure mu = random_measure(rng, n, dim, 1.0);
    const DiscreteMeasure nu = random_measure(rng, m, dim, mu.total_mass());
    const GroundMetric metric =
        inst % 3 == 0 ? GroundMetric::logarithmic(0.5, 0.05) : GroundMetric::euclidean();
    std::vector<std::vector<double>> c(n, std::vector<double>(m));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) c[i][j] = metric(mu.point(i), nu.point(j));
    const double brute = enumerate_plans(mu.weights(), nu.weights(), c);
    worst = std::max(worst, std::abs(wasserstein_exact(mu, nu, metric).cost - brute));
  }
  int bracket_failures = 0;
  double widest = 0.0;
  for (int inst = 0; inst < 20; ++inst) {
    const DiscreteMeasure mu = random_measure(rng, 64, 2, 1.0);
    const DiscreteMeasure nu = random_measure(rng, 64, 2, 1.0);
    const GroundMetric metric = GroundMetric::euclidean();
    const double exact = wasserstein_exact(mu, nu, metric).cost;
    const EntropicTransport ent = wasserstein_entropic(mu, nu, metric, 0.01);
    if (!(ent.lower <= exact + 1e-9 && exact <= ent.upper + 1e-9)) ++bracket_failures;
    widest = std::max(widest, ent.upper - ent.lower);
  }
  out.pass = worst <= 1e-9 && bracket_failures == 0;
  out.detail = fmt("enumeration max |diff| %.3e on 100; entropic bracket failures %d/20 "
                   "(widest %.3e)",
                   worst, bracket_failures, widest);
  return out;
}

// ---------------------------------------------------------------------------
// 3. Splitting upper bound on random decompositions.

Outcome splitting() {
  Outcome out;
  RandomStream rng(77);
  double worst = INFINITY;
  for (int inst = 0; inst < 50; ++inst) {
    const int parts = 2 + static_cast<int>(rng.bits() % 4);
    const int dim = 1 + inst % 2;
    std::vector<DiscreteMeasure> pm, pn;
    for (int k = 0; k < parts; ++k) {
      const double mass = rng.uniform(0.1, 1.0);
      pm.push_back(random_measure(rng, 1 + static_cast<int>(rng.bits() % 12), dim, mass));
      pn.push_back(random_measure(rng, 1 + static_cast<int>(rng.bits() % 12), dim, mass));
    }
    const GroundMetric metric =
        inst % 2 == 0 ? GroundMetric::euclidean() : GroundMetric::logarithmic(0.5, 0.1);
    const double whole = wasserstein_exact(concatenate(pm), concatenate(pn), metric).cost;
    worst = std::min(worst, splitting_upper_bound(pm, pn, metric) - whole);
  }
  out.pass = worst >= -1e-9;
  out.detail = fmt("min slack %.3e over 50 decompositions", worst);
  return out;
}

// ---------------------------------------------------------------------------
// 4 and 5. Mollified Euler flow of a rough vortex.

struct VortexLevel {
  int level;
  double min_det;
  BilipschitzBounds bounds;
};

std::vector<VortexLevel> vortex_levels() {
  CatalogParams params;
  params.alpha = 1.2;
  const VelocityField vortex = radial_vortex(params);
  RandomStream rng(3);
  std::vector<TorusPoint> pts;
  for (int i = 0; i < 1000; ++i) pts.push_back(random_point(rng, 2));
  std::vector<std::pair<TorusPoint, TorusPoint>> pairs;
  for (int i = 0; i < 10000; ++i) {
    const TorusPoint x = random_point(rng, 2);
    const double r = 0.05 * std::sqrt(rng.uniform()), a = 2.0 * std::numbers::pi * rng.uniform();
    pairs.emplace_back(x, translate(x, Vec{r * std::cos(a), r * std::sin(a)}));
  }
  std::vector<VortexLevel> out;
  for (int l = 4; l <= 8; ++l) {
    FlowConfig cfg = flow_config(vortex, std::ldexp(1.0, -l), 1.0);
    cfg.mollifier_quad = 16;
    const FlowEvaluator flow = FlowEvaluator::euler(vortex, cfg);
    const std::vector<double> dets = jacobian_determinants(flow, 1.0, pts, 1e-5);
    out.push_back({l, *std::min_element(dets.begin(), dets.end()),
                   bilipschitz_probe(flow, 1.0, pairs)});
  }
  return out;
}

const std::vector<VortexLevel>& cached_vortex_levels() {
  static const std::vector<VortexLevel> levels = vortex_levels();
  return levels;
}

Outcome compressibility() {
  Outcome out;
  const auto& levels = cached_vortex_levels();
  const double floor = 0.5 * levels.front().min_det;
  std::ostringstream os;
  os << fmt("kernel=%s floor %.4f;", std::string(to_string(FlowConfig{}.kernel)).c_str(), floor);
  for (const VortexLevel& v : levels) {
    os << fmt(" dt=2^-%d:%.4f", v.level, v.min_det);
    if (!(v.min_det > floor)) out.pass = false;
  }
  if (!(floor > 0.0)) out.pass = false;
  out.detail = os.str();
  return out;
}

Outcome bilipschitz() {
  Outcome out;
  std::ostringstream os;
  for (const VortexLevel& v : cached_vortex_levels()) {
    const double bound = std::exp(1.0 / std::sqrt(std::ldexp(1.0, -v.level)));
    os << fmt(" dt=2^-%d:[%.3f,%.3f]/%d", v.level, v.bounds.min_ratio, v.bounds.max_ratio,
              v.bounds.collisions);
    if (!(v.bounds.max_ratio <= bound && v.bounds.min_ratio >= 1.0 / bound) ||
        v.bounds.collisions != 0)
      out.pass = false;
  }
  out.detail = "ratios/collisions" + os.str();
  return out;
}

// ---------------------------------------------------------------------------
// 6. Smooth rotation: first-order convergence against RK4.

double slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

Outcome smooth_convergence() {
  Outcome out;
  const auto t0 = std::chrono::steady_clock::now();
  const VelocityField rot = rigid_rotation_patch(CatalogParams{});
  const FlowEvaluator ref = FlowEvaluator::reference(rot, 2.5e-4);
  std::vector<double> lx, ly;
  std::ostringstream os;
  for (int l = 7; l <= 10; ++l) {
    FlowConfig cfg = flow_config(rot, std::ldexp(1.0, -l), 1.0);
    const DiscrepancyNorms dn =
        discrepancy_norms(FlowEvaluator::euler(rot, cfg), ref, 1.0, 2.0, 1.0, 2000);
    lx.push_back(std::log(cfg.dt));
    ly.push_back(std::log(dn.lp_norm));
    os << fmt(" 2^-%d:%.3e", l, dn.lp_norm);
  }
  const double order = slope(lx, ly), secs = seconds_since(t0);
  out.pass = order >= 0.9 && secs <= 60.0;
  out.detail = fmt("order %.3f, %.1fs;", order, secs) + os.str();
  return out;
}

// ---------------------------------------------------------------------------
// 7. Rough vortex: log discrepancy bounded across levels.

Outcome rough_log_discrepancy() {
  Outcome out;
  CatalogParams params;
  params.alpha = 1.2;
  params.p = 2.4;
  const VelocityField vortex = radial_vortex(params);
  FlowConfig fine = flow_config(vortex, std::ldexp(1.0, -9), 1.0);
  fine.mollifier_quad = 16;
  const FlowEvaluator ref = FlowEvaluator::euler(vortex, fine);
  std::vector<double> vals;
  std::ostringstream os;
  for (int l = 4; l <= 7; ++l) {
    FlowConfig cfg = fine;
    cfg.dt = std::ldexp(1.0, -l);
    const DiscrepancyNorms dn =
        discrepancy_norms(FlowEvaluator::euler(vortex, cfg), ref, 1.0, params.p, cfg.dt, 4096);
    vals.push_back(dn.log_lp_norm);
    os << fmt(" 2^-%d:%.4f", l, dn.log_lp_norm);
  }
  const auto [lo, hi] = std::minmax_element(vals.begin(), vals.end());
  out.pass = *lo > 0.0 && *hi / *lo < 3.0;
  out.detail = fmt("p=%.1f kernel=%s max/min %.3f;", params.p,
                   fine.effective_delta() > 0.0 ? std::string(to_string(fine.kernel)).c_str() : "none", *hi / *lo) + os.str();
  return out;
}

// ---------------------------------------------------------------------------
// 8. Singular scheme error trend on the rotation patch.

std::vector<ResultRow> sweep_rows(bool logarithmic, const std::string& dir) {
  ExperimentConfig cfg;
  cfg.field.name = "rigid_rotation_patch";
  cfg.rho0.name = "sinusoidal_bump";
  cfg.rho0.amplitude = 0.5;
  cfg.scheme = Scheme::singular;
  cfg.metric.logarithmic = logarithmic;
  cfg.metric.alpha = 0.5;
  cfg.flow.T = 1.0;
  cfg.sweep.dt_levels = {3, 4, 5, 6};
  cfg.sweep.dx_levels = {3, 4, 5, 6};
  cfg.n_reps = 32;
  cfg.base_seed = 1;
  cfg.sample_times = {1.0};
  cfg.output = dir;
  const SweepResult result = run_sweep(cfg);
  for (const LevelOutcome& l : result.levels)
    if (!l.ok) throw Error("sweep failed: " + l.message);
  return result.rows;
}

Outcome singular_trend() {
  Outcome out;
  const std::filesystem::path base = std::filesystem::current_path() / "acceptance-runs";
  const std::vector<ResultRow> w1 = sweep_rows(false, (base / "singular_w1").string());
  const std::vector<ResultRow> lg = sweep_rows(true, (base / "singular_log").string());
  std::ostringstream os;
  os << "W1";
  for (std::size_t k = 0; k < w1.size(); ++k) {
    const double se = std::sqrt(w1[k].var_err / w1[k].n_reps);
    os << fmt(" %.4f+-%.1e", w1[k].mean_err, se);
    if (k > 0) {
      const double se_prev = std::sqrt(w1[k - 1].var_err / w1[k - 1].n_reps);
      if (!(w1[k].mean_err + se < w1[k - 1].mean_err - se_prev)) out.pass = false;
    }
  }
  double lo = INFINITY, hi = 0.0;
  os << "; log";
  for (const ResultRow& r : lg) {
    lo = std::min(lo, r.mean_err);
    hi = std::max(hi, r.mean_err);
    os << fmt(" %.4f", r.mean_err);
  }
  if (w1.size() != 4 || lg.size() != 4 || !(hi / lo <= 2.0)) out.pass = false;
  os << fmt(" max/min %.3f", hi / lo);
  std::vector<std::pair<double, double>> pts;
  for (const ResultRow& r : w1) pts.emplace_back(r.h, r.mean_err);
  const RateFit fit = fit_rate(pts, RateModel::power);
  if (!(fit.exponent >= 0.5)) out.pass = false;
  os << fmt("; W1 rate %.3f", fit.exponent);
  out.detail = os.str();
  return out;
}

// ---------------------------------------------------------------------------
// 9. Monte Carlo variance scaling and Chebyshev tail.

Outcome monte_carlo_structure() {
  Outcome out;
  const int outer = 200, n_max = 64;
  const VelocityField rot = rigid_rotation_patch(CatalogParams{});
  const Mesh mesh = build_mesh(MeshKind::cartesian, 2, 4);
  const Density rho0 = sinusoidal_bump(2, 0.5);
  const FlowConfig cfg = flow_config(rot, 0.125, 1.0);
  const std::vector<double> times{1.0};
  ReferenceOptions ropt;
  ropt.n_particles = 256;
  McOptions mopt;
  mopt.n_reps = outer * n_max;
  mopt.base_seed = 9000;
  const std::vector<double> masses = cell_masses(mesh, rho0);
  ropt.total_mass = std::accumulate(masses.begin(), masses.end(), 0.0);
  const auto reference = reference_solution(rot, rho0, times, ropt);
  const McSummary mc =
      monte_carlo(rot, mesh, rho0, cfg, GroundMetric::euclidean(), times, reference, mopt);
  std::vector<double> x;
  for (const auto& row : mc.errors) x.push_back(row[0]);
  const McTimeStats all = summarize_errors(1.0, x);

  std::ostringstream os;
  os << fmt("Var[X1] %.3e;", all.variance);
  for (int n : {4, 16, 64}) {
    std::vector<double> means;
    for (int g = 0; g < outer; ++g) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += x[static_cast<std::size_t>(g) * n_max + k];
      means.push_back(s / n);
    }
    const double ratio = summarize_errors(1.0, means).variance / (all.variance / n);
    os << fmt(" n=%d ratio %.3f", n, ratio);
    if (!(ratio <= 1.5 && ratio >= 1.0 / 1.5)) out.pass = false;
  }
  const double p = 1.0 / 9.0;
  const double sigma = std::sqrt(p * (1.0 - p) / static_cast<double>(x.size()));
  const double exceed = all.exceedance[1];
  os << fmt("; P(|X-m|>=3sd) %.4f <= %.4f", exceed, p + 3.0 * sigma);
  if (!(exceed <= p + 3.0 * sigma)) out.pass = false;
  out.detail = os.str();
  return out;
}

// ---------------------------------------------------------------------------
// 10. Diffuse scheme on a vortex with p > d.

Outcome diffuse_scheme() {
  Outcome out;
  CatalogParams params;
  params.alpha = 1.2;
  params.p = 2.4;
  const VelocityField vortex = radial_vortex(params);
  const Density rho0 = sinusoidal_bump(2, 0.5);
  const std::vector<double> times{0.0, 0.5, 1.0};
  bool identical = true, conserved = true;
  std::vector<double> errs;
  std::ostringstream os;
  for (int l = 3; l <= 5; ++l) {
    const Mesh mesh = build_mesh(MeshKind::cartesian, 2, 1 << l);
    const FlowConfig cfg = flow_config(vortex, std::ldexp(1.0, -l), 1.0);
    const CellDensity bar = CellDensity::piecewise_constant(mesh, cell_masses(mesh, rho0));
    SchemeRun a = run_diffuse(vortex, mesh, bar, cfg, times, 4);
    const SchemeRun b = run_diffuse(vortex, mesh, bar, cfg, times, 4);
    for (std::size_t k = 0; k < times.size(); ++k) {
      identical = identical && a.snapshots[k].points() == b.snapshots[k].points() &&
                  a.snapshots[k].weights() == b.snapshots[k].weights();
      conserved = conserved && a.snapshots[k].total_mass() == a.snapshots[0].total_mass();
    }
    ReferenceOptions ropt;
    ropt.n_particles = static_cast<int>(kExactSupportCap);
    ropt.total_mass = a.total_mass();
    const auto reference = reference_solution(vortex, rho0, {1.0}, ropt);
    const double e =
        wasserstein_exact(a.snapshots.back(), reference[0], GroundMetric::euclidean()).cost;
    errs.push_back(e);
    os << fmt(" h=2^-%d:%.4f", l, e);
    g_runs.push_back(std::move(a));
  }
  const bool monotone = errs[1] < errs[0] && errs[2] < errs[1];
  out.pass = identical && conserved && monotone;
  out.detail = fmt("bitwise reruns %s, mass %s, W1", identical ? "yes" : "no",
                   conserved ? "exact" : "drifted") +
               os.str();
  return out;
}

// ---------------------------------------------------------------------------
// 11. Total mass of every snapshot is bitwise constant.

Outcome mass_conservation() {
  Outcome out;
  CatalogParams vortex_rough;
  vortex_rough.alpha = 1.2;
  CatalogParams vortex_diffuse = vortex_rough;
  vortex_diffuse.p = 2.4;
  const std::vector<double> times{0.0, 0.125, 0.25, 0.5, 0.75, 1.0};
  for (int l = 3; l <= 5; ++l) {
    const Mesh cart = build_mesh(MeshKind::cartesian, 2, 1 << l);
    const Mesh jit = build_mesh(MeshKind::jittered, 2, 1 << l, 0.15, 4);
    const Mesh vor = build_mesh(MeshKind::voronoi, 2, 1 << l, 0.0, 4);
    // dt one level below dx keeps delta = sqrt(dt) <= 1/4 for the rough field.
    const double dt = std::ldexp(1.0, -l - 1);
    const Density rho0 = sinusoidal_bump(2, 0.5);
    for (const Mesh* mesh : {&cart, &jit, &vor}) {
      for (const VelocityField& f :
           {shear_sine(2, 0.5), rigid_rotation_patch(CatalogParams{}), radial_vortex(vortex_rough)}) {
        const FlowConfig cfg = flow_config(f, dt, 1.0);
        g_runs.push_back(run_singular(f, *mesh, rho0, cfg, 17, times));
        g_runs.push_back(
            run_singular(f, *mesh, rho0, cfg, 18, times, RepresentativeMode::density));
      }
      for (const VelocityField& f :
           {shear_sine(2, 0.5), rigid_rotation_patch(CatalogParams{}), radial_vortex(vortex_diffuse)})
        g_runs.push_back(
            run_diffuse(f, *mesh, CellDensity::restricted(rho0), flow_config(f, dt, 1.0), times, 4));
    }
  }
  std::size_t snapshots = 0, drifted = 0;
  for (const SchemeRun& run : g_runs)
    for (const DiscreteMeasure& s : run.snapshots) {
      ++snapshots;
      if (s.total_mass() != run.snapshots.front().total_mass()) ++drifted;
    }
  out.pass = drifted == 0 && snapshots > 0;
  out.detail = fmt("%zu runs, %zu snapshots, %zu drifted", g_runs.size(), snapshots, drifted);
  return out;
}

struct Criterion {
  int id;
  const char* name;
  Outcome (*run)();
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "exactness", exactness},
      {2, "ot-oracle", ot_oracle},
      {3, "splitting", splitting},
      {4, "compressibility", compressibility},
      {5, "bilipschitz", bilipschitz},
      {6, "smooth-convergence", smooth_convergence},
      {7, "rough-log-discrepancy", rough_log_discrepancy},
      {8, "singular-trend", singular_trend},
      {9, "monte-carlo", monte_carlo_structure},
      {10, "diffuse-scheme", diffuse_scheme},
      {11, "mass-conservation", mass_conservation},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::stoi(argv[i]));

  int failed = 0;
  for (const Criterion& c : all) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("[%s] %2d %-22s %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
