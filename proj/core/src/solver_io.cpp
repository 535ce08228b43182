#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"
#include "lagflow/error.hpp"
#include "lagflow/solver.hpp"

namespace lagflow {

namespace {

using nlohmann::json;

json config_json(const FlowConfig& cfg) {
  return {{"dt", cfg.dt},
          {"T", cfg.T},
          {"delta_rule", std::string(to_string(cfg.delta_rule))},
          {"delta", cfg.effective_delta()},
          {"n_quad_time", cfg.n_quad_time},
          {"kernel", std::string(to_string(cfg.kernel))},
          {"mollifier_quad", cfg.mollifier_quad}};
}

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json run_json(const SchemeRun& run) {
  json diag = json::array();
  for (const SnapshotDiagnostics& d : run.diagnostics)
    diag.push_back({{"t", d.t},
                    {"min_det", number_or_null(d.min_det)},
                    {"max_ratio", d.bilipschitz.max_ratio},
                    {"min_ratio", d.bilipschitz.min_ratio},
                    {"collisions", d.bilipschitz.collisions},
                    {"skipped", d.bilipschitz.skipped}});
  json snaps = json::array();
  for (std::size_t k = 0; k < run.snapshots.size(); ++k)
    snaps.push_back({{"t", run.sample_times[k]},
                     {"atoms", run.snapshots[k].size()},
                     {"file", "snapshot_" + std::to_string(k) + ".csv"}});
  json out = {{"scheme", std::string(to_string(run.scheme))},
              {"field", run.field_name},
              {"mesh", {{"kind", std::string(to_string(run.mesh_kind))},
                        {"resolution", run.mesh_resolution},
                        {"dx", run.dx}}},
              {"flow", config_json(run.cfg)},
              {"sample_times", run.sample_times},
              {"total_mass", run.total_mass()},
              {"diagnostics", diag},
              {"snapshots", snaps}};
  if (run.scheme == Scheme::singular) {
    out["seed"] = run.seed;
    out["rep_mode"] = std::string(to_string(run.rep_mode));
  } else {
    out["quad_per_cell"] = run.quad_per_cell;
  }
  return out;
}

}  // namespace

std::string scheme_run_to_json(const SchemeRun& run) { return run_json(run).dump(2); }

std::string mc_summary_to_json(const McSummary& summary) {
  json times = json::array();
  for (const McTimeStats& s : summary.per_time) {
    json exceed = json::array();
    for (std::size_t k = 0; k < kChebyshevK.size(); ++k)
      exceed.push_back({{"k", kChebyshevK[k]},
                        {"fraction", s.exceedance[k]},
                        {"bound", 1.0 / (kChebyshevK[k] * kChebyshevK[k])}});
    times.push_back({{"t", s.t},
                     {"mean", s.mean},
                     {"variance", s.variance},
                     {"stderr", s.stderr_mean()},
                     {"min", s.min},
                     {"max", s.max},
                     {"chebyshev", exceed},
                     {"mean_of_n_distance", number_or_null(s.mean_of_n_distance)},
                     {"entropic", s.entropic}});
  }
  json out = {{"n_reps", summary.n_reps},
              {"aggregate", std::string(to_string(summary.aggregate))},
              {"base_seed", summary.base_seed},
              {"min_det", number_or_null(summary.min_det)},
              {"per_time", times},
              {"errors", summary.errors}};
  return out.dump(2);
}

void write_scheme_run(const std::string& directory, const SchemeRun& run) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(directory, ec);
  if (ec) throw IoError("cannot create directory '" + directory + "': " + ec.message());
  const fs::path dir(directory);
  {
    std::ofstream os(dir / "run.json");
    if (!os) throw IoError("cannot write " + (dir / "run.json").string());
    os << scheme_run_to_json(run) << '\n';
  }
  for (std::size_t k = 0; k < run.snapshots.size(); ++k) {
    const fs::path p = dir / ("snapshot_" + std::to_string(k) + ".csv");
    std::ofstream os(p);
    if (!os) throw IoError("cannot write " + p.string());
    write_measure_csv(os, run.snapshots[k]);
  }
}

}  // namespace lagflow
