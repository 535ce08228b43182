#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "lagflow/error.hpp"
#include "lagflow/experiment.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kRuntimeError = 3;

int cmd_validate(const std::string& path) {
  try {
    const lagflow::ExperimentConfig c = lagflow::load_config(path);
    std::cout << "valid: " << path << "\nconfig_hash: " << lagflow::config_hash(c)
              << "\nlevels: " << lagflow::sweep_levels(c.sweep).size() << '\n';
    return kOk;
  } catch (const lagflow::Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }
}

int cmd_run(const std::string& path, const std::string& output, int workers) {
  lagflow::ExperimentConfig c;
  try {
    c = lagflow::load_config(path);
  } catch (const lagflow::Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  if (!output.empty()) c.output = output;
  if (workers > 0) c.workers = workers;
  try {
    const lagflow::SweepResult r = lagflow::run_sweep(c);
    for (const lagflow::LevelOutcome& o : r.levels) {
      std::printf("dt=2^-%d dx=2^-%d  %s  %.0f ms", o.level.dt_level, o.level.dx_level,
                  o.ok ? "ok" : "FAILED", o.runtime_ms);
      if (!o.ok) std::printf("  (%s)", o.message.c_str());
      std::printf("\n");
    }
    std::cout << "results: " << (std::filesystem::path(r.directory) / "results.csv").string() << '\n';
    return r.partial() ? kRuntimeError : kOk;
  } catch (const lagflow::Error& e) {
    std::cerr << "run failed: " << e.what() << '\n';
    return kRuntimeError;
  }
}

int cmd_fit(const std::string& dir) {
  try {
    const auto rows = lagflow::read_results_csv((std::filesystem::path(dir) / "results.csv").string());
    const auto reports = lagflow::fit_rates(rows);
    const std::filesystem::path out = std::filesystem::path(dir) / "fits.json";
    std::ofstream os(out);
    if (!os) throw lagflow::IoError("cannot write " + out.string());
    os << lagflow::fit_reports_to_json(reports) << '\n';
    for (const lagflow::FitReport& r : reports) {
      std::printf("%s %s t=%g  power: C=%.4g beta=%.4f rms=%.3g%s  log_inverse: C=%.4g q=%.4f rms=%.3g%s  better=%s\n",
                  r.scheme.c_str(), r.metric.c_str(), r.t, r.power.C, r.power.exponent,
                  r.power.residual_rms, r.power.low_confidence ? " (low confidence)" : "",
                  r.log_inverse.C, r.log_inverse.exponent, r.log_inverse.residual_rms,
                  r.log_inverse.low_confidence ? " (low confidence)" : "",
                  std::string(lagflow::to_string(r.better)).c_str());
    }
    if (reports.empty()) std::printf("no series with at least 3 positive errors\n");
    std::cout << "fits: " << out.string() << '\n';
    return kOk;
  } catch (const lagflow::Error& e) {
    std::cerr << "fit failed: " << e.what() << '\n';
    return kRuntimeError;
  }
}

int cmd_plotdata(const std::string& dir) {
  try {
    for (const std::string& p : lagflow::emit_plotdata(dir)) std::cout << p << '\n';
    return kOk;
  } catch (const lagflow::Error& e) {
    std::cerr << "plotdata failed: " << e.what() << '\n';
    return kRuntimeError;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Euler-flow particle schemes for the continuity equation on the torus"};
  app.set_version_flag("--version", std::string(LAGFLOW_VERSION));
  app.require_subcommand(1);

  std::string config, dir, output;
  int workers = 0;

  CLI::App* run = app.add_subcommand("run", "Run the sweep described by a config file");
  run->add_option("config", config, "Experiment config (JSON)")->required();
  run->add_option("-o,--output", output, "Override the output directory");
  run->add_option("-w,--workers", workers, "Worker threads (default: LAGFLOW_WORKERS or all cores)");

  CLI::App* fit = app.add_subcommand("fit", "Fit power and log-inverse rates to a run");
  fit->add_option("rundir", dir, "Run directory containing results.csv")->required();

  CLI::App* plot = app.add_subcommand("plotdata", "Write gnuplot .dat files for a run");
  plot->add_option("rundir", dir, "Run directory containing results.csv")->required();

  CLI::App* validate = app.add_subcommand("validate", "Check a config file without running it");
  validate->add_option("config", config, "Experiment config (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfigError;
  }

  if (*run) return cmd_run(config, output, workers);
  if (*fit) return cmd_fit(dir);
  if (*plot) return cmd_plotdata(dir);
  return cmd_validate(config);
}
