#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "lagflow/error.hpp"
#include "lagflow/experiment.hpp"

namespace lagflow {

namespace {

namespace fs = std::filesystem;

constexpr const char* kColumns = "# h mean_err stderr fit_power fit_log_inverse";

std::string series_name(const ResultRow& r) {
  std::string name = r.scheme + "_" + r.metric;
  if (!std::isnan(r.alpha)) {
    std::ostringstream os;
    os << "_a" << r.alpha;
    name += os.str();
  }
  return name;
}

std::string num(double x) {
  if (!std::isfinite(x)) return "nan";
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

}  // namespace

std::vector<std::string> emit_plotdata(const std::string& run_dir) {
  const fs::path csv = fs::path(run_dir) / "results.csv";
  if (!fs::exists(csv)) throw IoError("no results.csv in '" + run_dir + "'");
  const std::vector<ResultRow> rows = read_results_csv(csv.string());
  const fs::path out_dir = fs::path(run_dir) / "plotdata";
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create '" + out_dir.string() + "'");

  std::vector<std::string> written;
  if (rows.empty()) {
    const fs::path p = out_dir / "results.dat";
    std::ofstream os(p);
    if (!os) throw IoError("cannot write '" + p.string() + "'");
    os << kColumns << '\n';
    written.push_back(p.string());
    return written;
  }

  // series -> t -> rows, in file order.
  std::map<std::string, std::map<double, std::vector<ResultRow>>> series;
  for (const ResultRow& r : rows) series[series_name(r)][r.t].push_back(r);

  for (const auto& [name, by_t] : series) {
    const fs::path p = out_dir / (name + ".dat");
    std::ofstream os(p);
    if (!os) throw IoError("cannot write '" + p.string() + "'");
    os << kColumns << '\n';
    bool first = true;
    for (const auto& [t, block] : by_t) {
      if (!first) os << "\n\n";
      first = false;
      std::vector<std::pair<double, double>> pts;
      for (const ResultRow& r : block) pts.emplace_back(r.h, r.mean_err);
      RateFit power, loginv;
      bool have_power = true, have_log = true;
      try {
        power = fit_rate(pts, RateModel::power);
      } catch (const InvalidInput&) {
        have_power = false;
      }
      try {
        loginv = fit_rate(pts, RateModel::log_inverse);
      } catch (const InvalidInput&) {
        have_log = false;
      }
      os << "# t = " << num(t) << '\n';
      std::vector<ResultRow> sorted = block;
      std::stable_sort(sorted.begin(), sorted.end(),
                       [](const ResultRow& a, const ResultRow& b) { return a.h > b.h; });
      for (const ResultRow& r : sorted) {
        const double se = r.n_reps > 0 ? std::sqrt(std::max(0.0, r.var_err) / r.n_reps) : 0.0;
        os << num(r.h) << ' ' << num(r.mean_err) << ' ' << num(se) << ' '
           << (have_power ? num(power.evaluate(r.h)) : "nan") << ' '
           << (have_log && r.h < 1.0 ? num(loginv.evaluate(r.h)) : "nan") << '\n';
      }
    }
    written.push_back(p.string());
  }
  return written;
}

}  // namespace lagflow
