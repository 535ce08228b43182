#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "lagflow/error.hpp"
#include "lagflow/flow.hpp"
#include "lagflow/quadrature.hpp"

namespace lagflow {

namespace {

double determinant(const double (&m)[kMaxDim][kMaxDim], int d) {
  switch (d) {
    case 1: return m[0][0];
    case 2: return m[0][0] * m[1][1] - m[0][1] * m[1][0];
    default:
      return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
             m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
             m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  }
}

struct MeanAndError {
  double norm = 0.0;
  double stderr_ = 0.0;
};

// (mean v^p)^(1/p) and its delta-method standard error.
MeanAndError lp_from_samples(const std::vector<double>& v, double p) {
  const double n = static_cast<double>(v.size());
  double mean = 0.0;
  for (double x : v) mean += std::pow(x, p);
  mean /= n;
  double var = 0.0;
  for (double x : v) {
    const double r = std::pow(x, p) - mean;
    var += r * r;
  }
  var /= (n - 1.0);
  MeanAndError out;
  out.norm = std::pow(mean, 1.0 / p);
  if (mean > 0.0) out.stderr_ = std::pow(mean, 1.0 / p - 1.0) / p * std::sqrt(var / n);
  return out;
}

}  // namespace

std::vector<double> jacobian_determinants(const FlowEvaluator& flow, double t,
                                          const std::vector<TorusPoint>& xs, double fd_step) {
  if (!(fd_step >= 1e-7 && fd_step <= 1e-3))
    throw InvalidInput("jacobian_determinant: fd_step must lie in [1e-7, 1e-3]");
  const int d = flow.dim();
  std::vector<TorusPoint> probes;
  probes.reserve(xs.size() * 2 * d);
  for (const TorusPoint& x : xs) {
    if (x.dim() != d) throw InvalidInput("jacobian_determinant: dimension mismatch");
    for (int a = 0; a < d; ++a) {
      Vec e(d);
      e[a] = fd_step;
      probes.push_back(translate(x, e));
      probes.push_back(translate(x, -1.0 * e));
    }
  }
  const std::vector<TorusPoint> img = flow(t, probes);
  std::vector<double> dets(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double m[kMaxDim][kMaxDim] = {};
    for (int a = 0; a < d; ++a) {
      const std::size_t k = (i * d + a) * 2;
      const TorusVector diff = periodic_displacement(img[k + 1], img[k]);
      for (int r = 0; r < d; ++r) m[r][a] = diff[r] / (2.0 * fd_step);
    }
    dets[i] = determinant(m, d);
  }
  return dets;
}

double jacobian_determinant(const FlowEvaluator& flow, double t, const TorusPoint& x,
                            double fd_step) {
  return jacobian_determinants(flow, t, {x}, fd_step).front();
}

BilipschitzBounds bilipschitz_probe(const FlowEvaluator& flow, double t,
                                    const std::vector<std::pair<TorusPoint, TorusPoint>>& pairs) {
  std::vector<TorusPoint> pts;
  pts.reserve(2 * pairs.size());
  for (const auto& [x, y] : pairs) {
    pts.push_back(x);
    pts.push_back(y);
  }
  const std::vector<TorusPoint> img = flow(t, pts);
  BilipschitzBounds b;
  b.min_ratio = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double d0 = periodic_distance(pairs[i].first, pairs[i].second);
    if (d0 == 0.0) {
      ++b.skipped;
      continue;
    }
    const double d1 = periodic_distance(img[2 * i], img[2 * i + 1]);
    if (d1 == 0.0) ++b.collisions;
    b.max_ratio = std::max(b.max_ratio, d1 / d0);
    b.min_ratio = std::min(b.min_ratio, d1 / d0);
  }
  if (b.skipped == static_cast<int>(pairs.size())) b.min_ratio = 0.0;
  return b;
}

DiscrepancyNorms discrepancy_norms(const FlowEvaluator& a, const FlowEvaluator& b, double t,
                                   double p, double scale, int n_mc) {
  if (n_mc < 1000) throw InvalidInput("discrepancy_norms: n_mc must be >= 1000");
  if (!(scale > 0.0)) throw InvalidInput("discrepancy_norms: scale must be > 0");
  if (!(p >= 1.0) || !std::isfinite(p)) throw InvalidInput("discrepancy_norms: need finite p >= 1");
  if (a.dim() != b.dim()) throw InvalidInput("discrepancy_norms: dimension mismatch");
  const int d = a.dim();
  std::vector<TorusPoint> xs;
  xs.reserve(n_mc);
  double u[8];
  for (int i = 0; i < n_mc; ++i) {
    halton_point(static_cast<std::uint64_t>(i), d, u);
    Vec v(d);
    for (int k = 0; k < d; ++k) v[k] = u[k];
    xs.push_back(wrap(v));
  }
  const std::vector<TorusPoint> ia = a(t, xs), ib = b(t, xs);
  std::vector<double> dist(n_mc), logd(n_mc);
  for (int i = 0; i < n_mc; ++i) {
    dist[i] = periodic_distance(ia[i], ib[i]);
    logd[i] = std::log1p(dist[i] / scale);
  }
  const MeanAndError l = lp_from_samples(dist, p), g = lp_from_samples(logd, p);
  return {l.norm, l.stderr_, g.norm, g.stderr_};
}

}  // namespace lagflow
