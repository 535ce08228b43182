#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>

#include "lagflow/error.hpp"
#include "lagflow/solver.hpp"

namespace lagflow {

namespace {

// Runs task(i) for i in [0, n) on up to `workers` threads.
template <class Task>
void parallel_for(int n, int workers, const Task& task) {
  std::vector<std::exception_ptr> errors(n);
  const auto guarded = [&](int i) {
    try {
      task(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  workers = std::max(1, std::min(workers, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) guarded(i);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (int i = next++; i < n; i = next++) guarded(i);
      });
    for (std::thread& t : pool) t.join();
  }
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

int worker_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("LAGFLOW_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<int>(std::min<long>(v, 1024));
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

double McTimeStats::stderr_mean() const { return n > 0 ? std::sqrt(variance / n) : 0.0; }

McTimeStats summarize_errors(double t, const std::vector<double>& errors) {
  McTimeStats s;
  s.t = t;
  s.n = static_cast<int>(errors.size());
  if (errors.empty()) return s;
  const double n = static_cast<double>(errors.size());
  for (double e : errors) s.mean += e;
  s.mean /= n;
  s.min = *std::min_element(errors.begin(), errors.end());
  s.max = *std::max_element(errors.begin(), errors.end());
  if (errors.size() > 1) {
    for (double e : errors) s.variance += (e - s.mean) * (e - s.mean);
    s.variance /= n - 1.0;
  }
  const double sd = std::sqrt(s.variance);
  for (std::size_t k = 0; k < kChebyshevK.size(); ++k) {
    if (sd == 0.0) continue;
    int count = 0;
    for (double e : errors) count += std::abs(e - s.mean) >= kChebyshevK[k] * sd;
    s.exceedance[k] = count / n;
  }
  return s;
}

McSummary monte_carlo(const VelocityField& field, const Mesh& mesh, const Density& rho0,
                      const FlowConfig& cfg, const GroundMetric& metric,
                      const std::vector<double>& sample_times,
                      const std::vector<DiscreteMeasure>& reference, const McOptions& options) {
  if (options.n_reps < 2) throw InvalidInput("monte_carlo: n_reps must be >= 2");
  if (reference.size() != sample_times.size())
    throw InvalidInput("monte_carlo: one reference snapshot per sample time required");
  if (field.dim() != mesh.dim() || rho0.dim != mesh.dim())
    throw InvalidInput("monte_carlo: field, mesh and density dimensions differ");

  const EulerFlow flow(field, cfg);
  const std::vector<double> masses = cell_masses(mesh, rho0);
  const int n = options.n_reps;
  const std::size_t nt = sample_times.size();
  const bool keep = options.aggregate == Aggregate::mean_of_n;

  McSummary out;
  out.n_reps = n;
  out.aggregate = options.aggregate;
  out.base_seed = options.base_seed;
  out.errors.assign(n, std::vector<double>(nt, 0.0));
  std::vector<std::vector<char>> flagged(n, std::vector<char>(nt, 0));
  std::vector<std::vector<DiscreteMeasure>> snapshots(keep ? n : 0);
  std::vector<double> min_dets(n, std::numeric_limits<double>::quiet_NaN());

  parallel_for(n, worker_count(options.workers), [&](int r) {
    SchemeRun run = run_singular(flow, mesh, rho0, masses, options.base_seed + r, sample_times,
                                 options.rep_mode, options.diagnostics);
    for (std::size_t k = 0; k < nt; ++k) {
      const ErrorPoint e = measure_distance(run.snapshots[k], reference[k], metric);
      out.errors[r][k] = e.distance;
      flagged[r][k] = e.entropic;
    }
    min_dets[r] = run.min_det();
    if (keep) snapshots[r] = std::move(run.snapshots);
  });

  for (double m : min_dets)
    if (!std::isnan(m) && !(m >= out.min_det)) out.min_det = m;

  for (std::size_t k = 0; k < nt; ++k) {
    std::vector<double> column(n);
    bool entropic = false;
    for (int r = 0; r < n; ++r) {
      column[r] = out.errors[r][k];
      entropic = entropic || flagged[r][k];
    }
    McTimeStats s = summarize_errors(sample_times[k], column);
    if (keep) {
      std::vector<DiscreteMeasure> parts(n);
      for (int r = 0; r < n; ++r) parts[r] = snapshots[r][k];
      const ErrorPoint e =
          measure_distance(concatenate(parts, 1.0 / n), reference[k], metric);
      s.mean_of_n_distance = e.distance;
      entropic = entropic || e.entropic;
    }
    s.entropic = entropic;
    out.per_time.push_back(s);
  }
  return out;
}

}  // namespace lagflow
