#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <tuple>

#include "json.hpp"
#include "lagflow/error.hpp"
#include "lagflow/experiment.hpp"

namespace lagflow {

namespace {

bool monotone(std::vector<std::pair<double, double>> pts) {
  std::sort(pts.begin(), pts.end());
  bool up = true, down = true;
  for (std::size_t k = 1; k < pts.size(); ++k) {
    if (pts[k].second < pts[k - 1].second) up = false;
    if (pts[k].second > pts[k - 1].second) down = false;
  }
  return up || down;
}

std::string alpha_key(double alpha) {
  if (std::isnan(alpha)) return "";
  std::ostringstream os;
  os.precision(17);
  os << alpha;
  return os.str();
}

nlohmann::json fit_json(const RateFit& f) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& [h, e] : f.points) pts.push_back({h, e});
  return {{"model", std::string(to_string(f.model))},
          {"C", f.C},
          {f.model == RateModel::power ? "beta" : "q", f.exponent},
          {"exponent_stderr", f.exponent_stderr},
          {"residual_rms", f.residual_rms},
          {"low_confidence", f.low_confidence},
          {"points", pts}};
}

}  // namespace

std::string_view to_string(RateModel model) {
  return model == RateModel::power ? "power" : "log_inverse";
}

double RateFit::evaluate(double h) const {
  if (model == RateModel::power) return C * std::pow(h, exponent);
  return C * std::pow(std::abs(std::log(h)), -exponent);
}

RateFit fit_rate(const std::vector<std::pair<double, double>>& points, RateModel model) {
  RateFit f;
  f.model = model;
  std::vector<double> xs, ys;
  for (const auto& [h, e] : points) {
    if (!(e > 0.0) || !(h > 0.0) || !std::isfinite(e)) continue;
    if (model == RateModel::log_inverse && !(h < 1.0)) continue;
    f.points.emplace_back(h, e);
    xs.push_back(model == RateModel::power ? std::log(h) : std::log(std::abs(std::log(h))));
    ys.push_back(std::log(e));
  }
  const std::size_t n = xs.size();
  if (n < 3) throw InvalidInput("fit_rate: need at least 3 points with positive error");
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    mx += xs[k];
    my += ys[k];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    sxx += (xs[k] - mx) * (xs[k] - mx);
    sxy += (xs[k] - mx) * (ys[k] - my);
  }
  if (!(sxx > 0.0)) throw InvalidInput("fit_rate: all points share the same h");
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  double ss = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double r = ys[k] - (intercept + slope * xs[k]);
    ss += r * r;
  }
  f.C = std::exp(intercept);
  f.exponent = model == RateModel::power ? slope : -slope;
  f.residual_rms = std::sqrt(ss / n);
  f.exponent_stderr = std::sqrt(ss / (n - 2) / sxx);
  f.low_confidence = !monotone(f.points);
  return f;
}

std::vector<FitReport> fit_rates(const std::vector<ResultRow>& rows) {
  using Key = std::tuple<std::string, std::string, std::string, double>;
  std::map<Key, std::vector<std::pair<double, double>>> groups;
  std::map<Key, double> alphas;
  for (const ResultRow& r : rows) {
    const Key key{r.scheme, r.metric, alpha_key(r.alpha), r.t};
    groups[key].emplace_back(r.h, r.mean_err);
    alphas[key] = r.alpha;
  }
  std::vector<FitReport> out;
  for (const auto& [key, pts] : groups) {
    FitReport rep;
    rep.scheme = std::get<0>(key);
    rep.metric = std::get<1>(key);
    rep.alpha = alphas[key];
    rep.t = std::get<3>(key);
    try {
      rep.power = fit_rate(pts, RateModel::power);
      rep.log_inverse = fit_rate(pts, RateModel::log_inverse);
    } catch (const InvalidInput&) {
      continue;
    }
    rep.better = rep.log_inverse.residual_rms < rep.power.residual_rms ? RateModel::log_inverse
                                                                       : RateModel::power;
    out.push_back(std::move(rep));
  }
  return out;
}

std::string fit_reports_to_json(const std::vector<FitReport>& reports) {
  nlohmann::json arr = nlohmann::json::array();
  for (const FitReport& r : reports) {
    nlohmann::json j = {{"scheme", r.scheme},
                        {"metric", r.metric},
                        {"t", r.t},
                        {"power", fit_json(r.power)},
                        {"log_inverse", fit_json(r.log_inverse)},
                        {"better", std::string(to_string(r.better))}};
    j["alpha"] = std::isnan(r.alpha) ? nlohmann::json(nullptr) : nlohmann::json(r.alpha);
    arr.push_back(j);
  }
  return arr.dump(2);
}

}  // namespace lagflow
