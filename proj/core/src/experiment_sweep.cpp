#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "lagflow/error.hpp"
#include "lagflow/experiment.hpp"

#ifndef LAGFLOW_VERSION
#define LAGFLOW_VERSION "unknown"
#endif

namespace lagflow {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kCsvHeader =
    "scheme,dt,dx,delta,metric,alpha,h,t,mean_err,var_err,n_reps,min_det,runtime_ms";

std::string num(double x) {
  if (std::isnan(x)) return "nan";
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

double parse_num(const std::string& s, std::size_t line) {
  if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size())
    throw IoError("results.csv line " + std::to_string(line) + ": bad number '" + s + "'");
  return v;
}

FlowConfig level_config(const ExperimentConfig& c, const VelocityField& field, double dt) {
  FlowConfig cfg;
  cfg.dt = dt;
  cfg.T = c.flow.T;
  cfg.delta_rule =
      c.flow.delta_rule == "auto" ? default_delta_rule(field) : parse_delta_rule(c.flow.delta_rule);
  cfg.delta = c.flow.delta;
  cfg.n_quad_time = c.flow.n_quad_time;
  cfg.kernel = c.flow.kernel;
  cfg.mollifier_quad = c.flow.mollifier_quad;
  return cfg;
}

struct LevelData {
  LevelOutcome outcome;
  std::vector<ResultRow> rows;
  json detail;
};

LevelData run_level(const ExperimentConfig& c, const SweepLevel& level) {
  LevelData out;
  LevelOutcome& o = out.outcome;
  o.level = level;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const VelocityField field = build_field(c.field);
    const int d = field.dim();
    const Density rho0 = build_density(c.rho0, d);
    const Mesh mesh = build_mesh(c.mesh.kind, d, 1 << level.dx_level, c.mesh.jitter, c.mesh.seed);
    o.dx_max = mesh.dx();
    o.min_volume_ratio = mesh.min_volume_ratio();
    const FlowConfig cfg = level_config(c, field, level.dt);
    o.h = std::max(level.dt, level.dx);
    const GroundMetric metric =
        c.metric.logarithmic
            ? GroundMetric::logarithmic(c.metric.alpha,
                                        c.metric.h_rule == HRule::max_dt_dx ? o.h : c.metric.h)
            : GroundMetric::euclidean();

    const std::vector<double> masses = cell_masses(mesh, rho0);
    double total = 0.0;
    std::size_t nonzero = 0;
    for (double m : masses) {
      total += m;
      nonzero += m > 0.0;
    }
    o.atoms = c.scheme == Scheme::singular ? nonzero : mesh.size() * c.quad_per_cell;

    std::vector<DiscreteMeasure> reference;
    if (field.has_exact_flow() || field.metadata().lipschitz) {
      ReferenceOptions ro;
      ro.n_particles = c.reference.n_particles > 0
                           ? c.reference.n_particles
                           : static_cast<int>(std::min<std::size_t>(kExactSupportCap, 16 * o.atoms));
      ro.dt_ref = c.reference.dt_ref;
      ro.total_mass = total;
      reference = reference_solution(field, rho0, c.sample_times, ro);
      o.reference_kind = field.has_exact_flow() ? "closed_form" : "rk4";
    } else {
      const int lt = c.reference.self_dt_level > 0
                         ? c.reference.self_dt_level
                         : *std::max_element(c.sweep.dt_levels.begin(), c.sweep.dt_levels.end()) + 2;
      const int lx = c.reference.self_dx_level > 0
                         ? c.reference.self_dx_level
                         : *std::max_element(c.sweep.dx_levels.begin(), c.sweep.dx_levels.end());
      const Mesh fine_mesh = build_mesh(c.mesh.kind, d, 1 << lx, c.mesh.jitter, c.mesh.seed);
      reference = self_reference_solution(field, fine_mesh, rho0,
                                          level_config(c, field, std::ldexp(1.0, -lt)),
                                          c.reference.master_seed, c.sample_times);
      o.reference_kind = "self";
    }
    o.reference_atoms = reference.empty() ? 0 : reference.front().size();

    std::vector<double> mean(c.sample_times.size()), var(c.sample_times.size(), 0.0);
    double min_det = std::numeric_limits<double>::quiet_NaN();
    int reps = 1;
    if (c.scheme == Scheme::singular && c.n_reps >= 2) {
      McOptions mo;
      mo.n_reps = c.n_reps;
      mo.base_seed = c.base_seed;
      mo.aggregate = c.aggregate;
      mo.rep_mode = c.rep_mode;
      mo.diagnostics = c.diagnostics;
      mo.workers = c.workers;
      const McSummary s = monte_carlo(field, mesh, rho0, cfg, metric, c.sample_times, reference, mo);
      for (std::size_t k = 0; k < s.per_time.size(); ++k) {
        mean[k] = s.per_time[k].mean;
        var[k] = s.per_time[k].variance;
      }
      min_det = s.min_det;
      reps = c.n_reps;
      out.detail = json::parse(mc_summary_to_json(s));
    } else {
      const SchemeRun run =
          c.scheme == Scheme::singular
              ? run_singular(EulerFlow(field, cfg), mesh, rho0, masses, c.base_seed,
                             c.sample_times, c.rep_mode, c.diagnostics)
              : run_diffuse(field, mesh, CellDensity::piecewise_constant(mesh, masses), cfg,
                            c.sample_times, c.quad_per_cell);
      const std::vector<ErrorPoint> curve = error_curve(run, reference, metric);
      for (std::size_t k = 0; k < curve.size(); ++k) mean[k] = curve[k].distance;
      min_det = run.min_det();
      o.atoms = run.snapshots.empty() ? o.atoms : run.snapshots.front().size();
    }

    o.runtime_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    for (std::size_t k = 0; k < c.sample_times.size(); ++k) {
      ResultRow r;
      r.scheme = std::string(to_string(c.scheme));
      r.dt = level.dt;
      r.dx = level.dx;
      r.delta = cfg.effective_delta();
      r.metric = c.metric.logarithmic ? "log" : "w1";
      r.alpha = c.metric.logarithmic ? c.metric.alpha : std::numeric_limits<double>::quiet_NaN();
      r.h = o.h;
      r.t = c.sample_times[k];
      r.mean_err = mean[k];
      r.var_err = var[k];
      r.n_reps = reps;
      r.min_det = min_det;
      r.runtime_ms = o.runtime_ms;
      out.rows.push_back(r);
    }
    o.ok = true;
  } catch (const Error& e) {
    o.ok = false;
    o.message = e.what();
    o.runtime_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  }
  return out;
}

json outcome_json(const LevelOutcome& o) {
  json j = {{"dt_level", o.level.dt_level},
            {"dx_level", o.level.dx_level},
            {"dt", o.level.dt},
            {"dx", o.level.dx},
            {"dx_max", o.dx_max},
            {"min_volume_ratio", o.min_volume_ratio},
            {"h", o.h},
            {"atoms", o.atoms},
            {"reference_atoms", o.reference_atoms},
            {"reference_kind", o.reference_kind},
            {"status", o.ok ? "ok" : "error"},
            {"runtime_ms", o.runtime_ms}};
  if (!o.ok) j["message"] = o.message;
  return j;
}

}  // namespace

bool SweepResult::partial() const {
  return std::any_of(levels.begin(), levels.end(), [](const LevelOutcome& o) { return !o.ok; });
}

SweepResult run_sweep(const ExperimentConfig& config) {
  SweepResult result;
  result.directory = config.output;
  json details = json::array();
  for (const SweepLevel& level : sweep_levels(config.sweep)) {
    LevelData data = run_level(config, level);
    result.levels.push_back(data.outcome);
    result.rows.insert(result.rows.end(), data.rows.begin(), data.rows.end());
    details.push_back(std::move(data.detail));
  }

  std::error_code ec;
  fs::create_directories(config.output, ec);
  if (ec) throw IoError("cannot create output directory '" + config.output + "': " + ec.message());
  const fs::path dir(config.output);
  write_results_csv((dir / "results.csv").string(), result.rows);

  json levels = json::array();
  double dx_max = 0.0, min_ratio = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < result.levels.size(); ++k) {
    json j = outcome_json(result.levels[k]);
    if (!details[k].is_null()) j["monte_carlo"] = details[k];
    levels.push_back(j);
    if (result.levels[k].dx_max > 0.0) {
      dx_max = std::max(dx_max, result.levels[k].dx_max);
      min_ratio = std::min(min_ratio, result.levels[k].min_volume_ratio);
    }
  }
  json summary = {
      {"config_hash", config_hash(config)},
      {"config", json::parse(config_to_json(config))},
      {"library_version", LAGFLOW_VERSION},
      {"seeds", {{"base_seed", config.base_seed},
                 {"replication_seeds", {config.base_seed, config.base_seed + std::max(config.n_reps, 1) - 1}},
                 {"mesh_seed", config.mesh.seed},
                 {"master_seed", config.reference.master_seed}}},
      {"mesh", {{"max_diameter", dx_max},
                {"min_volume_ratio", std::isfinite(min_ratio) ? json(min_ratio) : json(nullptr)}}},
      {"status", result.partial() ? "partial" : "complete"},
      {"levels", levels}};
  std::ofstream os(dir / "summary.json");
  if (!os) throw IoError("cannot write summary.json in '" + config.output + "'");
  os << summary.dump(2) << '\n';
  return result;
}

void write_results_csv(const std::string& path, const std::vector<ResultRow>& rows) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write '" + path + "'");
  os << kCsvHeader << '\n';
  for (const ResultRow& r : rows)
    os << r.scheme << ',' << num(r.dt) << ',' << num(r.dx) << ',' << num(r.delta) << ','
       << r.metric << ',' << (std::isnan(r.alpha) ? "" : num(r.alpha)) << ',' << num(r.h) << ','
       << num(r.t) << ',' << num(r.mean_err) << ',' << num(r.var_err) << ',' << r.n_reps << ','
       << num(r.min_det) << ',' << num(r.runtime_ms) << '\n';
  if (!os) throw IoError("write failed for '" + path + "'");
}

std::vector<ResultRow> read_results_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader)
    throw IoError("'" + path + "' does not start with the results header");
  std::vector<ResultRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> c;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) c.push_back(cell);
    if (line.back() == ',') c.emplace_back();
    if (c.size() != 13) throw IoError("results.csv line " + std::to_string(lineno) + ": expected 13 columns");
    ResultRow r;
    r.scheme = c[0];
    r.dt = parse_num(c[1], lineno);
    r.dx = parse_num(c[2], lineno);
    r.delta = parse_num(c[3], lineno);
    r.metric = c[4];
    r.alpha = parse_num(c[5], lineno);
    r.h = parse_num(c[6], lineno);
    r.t = parse_num(c[7], lineno);
    r.mean_err = parse_num(c[8], lineno);
    r.var_err = parse_num(c[9], lineno);
    r.n_reps = static_cast<int>(parse_num(c[10], lineno));
    r.min_det = parse_num(c[11], lineno);
    r.runtime_ms = parse_num(c[12], lineno);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace lagflow
