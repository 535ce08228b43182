#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "lagflow/error.hpp"
#include "lagflow/transport.hpp"

namespace lagflow {

namespace {

constexpr double kViolationTol = 1e-6;
constexpr std::size_t kMaxStoredCosts = std::size_t{1} << 25;

class CostTable {
 public:
  CostTable(const std::vector<TorusPoint>& x, const std::vector<TorusPoint>& y,
            const GroundMetric& metric)
      : x_(x), y_(y), metric_(metric) {
    if (x.size() * y.size() <= kMaxStoredCosts) {
      table_.resize(x.size() * y.size());
      for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = 0; j < y.size(); ++j) table_[i * y.size() + j] = metric(x[i], y[j]);
    }
  }
  double operator()(std::size_t i, std::size_t j) const {
    return table_.empty() ? metric_(x_[i], y_[j]) : table_[i * y_.size() + j];
  }
  std::size_t rows() const { return x_.size(); }
  std::size_t cols() const { return y_.size(); }

 private:
  const std::vector<TorusPoint>& x_;
  const std::vector<TorusPoint>& y_;
  const GroundMetric& metric_;
  std::vector<double> table_;
};

struct Cloud {
  std::vector<TorusPoint> points;
  std::vector<double> weights;
  std::vector<double> log_weights;
};

Cloud probability_cloud(const DiscreteMeasure& m) {
  const double total = m.total_mass();
  Cloud c;
  for (std::size_t k = 0; k < m.size(); ++k) {
    if (m.weight(k) < kWeightFloor) continue;
    c.points.push_back(m.point(k));
    c.weights.push_back(m.weight(k) / total);
  }
  for (double w : c.weights) c.log_weights.push_back(std::log(w));
  return c;
}

// -eps * log sum_k exp((pot_k - C(., k)) / eps + logw_k) for every row of `rows`.
template <class Cost>
void soft_min(const Cost& cost, std::size_t rows, std::size_t cols, const std::vector<double>& pot,
              const std::vector<double>& logw, double eps, std::vector<double>& out) {
  std::vector<double> z(cols);
  for (std::size_t r = 0; r < rows; ++r) {
    double zmax = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < cols; ++k) {
      z[k] = (pot[k] - cost(r, k)) / eps + logw[k];
      zmax = std::max(zmax, z[k]);
    }
    double s = 0.0;
    for (std::size_t k = 0; k < cols; ++k) s += std::exp(z[k] - zmax);
    out[r] = -eps * (zmax + std::log(s));
  }
}

struct Potentials {
  std::vector<double> f;
  std::vector<double> g;
  double violation = 0.0;
  int iterations = 0;
};

double row_violation(const CostTable& c, const Cloud& a, const Cloud& b, const Potentials& p,
                     double eps) {
  double v = 0.0;
  for (std::size_t i = 0; i < c.rows(); ++i) {
    double r = 0.0;
    for (std::size_t j = 0; j < c.cols(); ++j)
      r += std::exp((p.f[i] + p.g[j] - c(i, j)) / eps + a.log_weights[i] + b.log_weights[j]);
    v += std::abs(r - a.weights[i]);
  }
  return v;
}

Potentials sinkhorn(const CostTable& c, const Cloud& a, const Cloud& b, double eps, int max_iter) {
  Potentials p;
  p.f.assign(c.rows(), 0.0);
  p.g.assign(c.cols(), 0.0);
  const auto cost_t = [&](std::size_t j, std::size_t i) { return c(i, j); };
  for (int it = 1; it <= max_iter; ++it) {
    soft_min(c, c.rows(), c.cols(), p.g, b.log_weights, eps, p.f);
    soft_min(cost_t, c.cols(), c.rows(), p.f, a.log_weights, eps, p.g);
    p.iterations = it;
    if (it % 10 == 0 || it == max_iter) {
      p.violation = row_violation(c, a, b, p, eps);
      if (p.violation <= kViolationTol) return p;
    }
  }
  throw ConvergenceError("wasserstein_entropic: marginal violation " +
                             std::to_string(p.violation) + " after " + std::to_string(max_iter) +
                             " iterations",
                         p.violation);
}

// Symmetric problem a vs a; returns the regularized dual value.
double symmetric_value(const Cloud& a, const GroundMetric& metric, double eps, int max_iter) {
  CostTable c(a.points, a.points, metric);
  std::vector<double> f(a.points.size(), 0.0), t(a.points.size());
  double value = 0.0;
  for (int it = 1; it <= max_iter; ++it) {
    soft_min(c, c.rows(), c.cols(), f, a.log_weights, eps, t);
    double change = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k) {
      const double nf = 0.5 * (f[k] + t[k]);
      change = std::max(change, std::abs(nf - f[k]));
      f[k] = nf;
    }
    value = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k) value += 2.0 * a.weights[k] * f[k];
    if (change <= kViolationTol * eps) return value;
  }
  throw ConvergenceError("wasserstein_entropic: symmetric problem did not converge", 0.0);
}

}  // namespace

EntropicTransport wasserstein_entropic(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                       const GroundMetric& metric, double epsilon, int max_iter) {
  if (!mu.empty() && !nu.empty() && mu.dim() != nu.dim())
    throw InvalidInput("wasserstein_entropic: dimension mismatch");
  const double ma = mu.total_mass(), mb = nu.total_mass();
  if (std::abs(ma - mb) > 1e-8 * std::max({ma, mb, 1e-300}))
    throw InvalidInput("wasserstein_entropic: total masses differ");
  if (max_iter < 1) throw InvalidInput("wasserstein_entropic: max_iter must be >= 1");
  EntropicTransport out;
  if (!(ma > 0.0)) return out;
  const int dim = mu.dim();
  if (!(epsilon >= 1e-3 * metric.diameter(dim)) || !std::isfinite(epsilon))
    throw InvalidInput("wasserstein_entropic: epsilon must be >= 1e-3 * metric diameter");

  const Cloud a = probability_cloud(mu), b = probability_cloud(nu);
  const CostTable c(a.points, b.points, metric);
  const Potentials p = sinkhorn(c, a, b, epsilon, max_iter);
  const std::size_t n = c.rows(), m = c.cols();

  // Plan, its cost, and the rounding onto the exact marginals.
  std::vector<double> plan(n * m);
  double primal = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const double pij =
          std::exp((p.f[i] + p.g[j] - c(i, j)) / epsilon + a.log_weights[i] + b.log_weights[j]);
      plan[i * m + j] = pij;
      primal += pij * c(i, j);
    }
  std::vector<double> row(n, 0.0), col(m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) row[i] += plan[i * m + j];
    const double s = std::min(1.0, a.weights[i] / row[i]);
    for (std::size_t j = 0; j < m; ++j) plan[i * m + j] *= s;
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) col[j] += plan[i * m + j];
  for (std::size_t j = 0; j < m; ++j) {
    const double s = std::min(1.0, b.weights[j] / col[j]);
    for (std::size_t i = 0; i < n; ++i) plan[i * m + j] *= s;
  }
  std::vector<double> ea(a.weights), eb(b.weights);
  double deficit = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) ea[i] -= plan[i * m + j];
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t i = 0; i < n; ++i) eb[j] -= plan[i * m + j];
  for (double x : ea) deficit += std::max(0.0, x);
  double upper = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      double pij = plan[i * m + j];
      if (deficit > 0.0) pij += std::max(0.0, ea[i]) * std::max(0.0, eb[j]) / deficit;
      upper += pij * c(i, j);
    }

  // c-transform pair: feasible for the dual, so its value is a lower bound.
  std::vector<double> fc(n), gc(m);
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m; ++j) best = std::min(best, c(i, j) - p.g[j]);
    fc[i] = best;
  }
  for (std::size_t j = 0; j < m; ++j) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) best = std::min(best, c(i, j) - fc[i]);
    gc[j] = best;
  }
  double lower = 0.0;
  for (std::size_t i = 0; i < n; ++i) lower += a.weights[i] * fc[i];
  for (std::size_t j = 0; j < m; ++j) lower += b.weights[j] * gc[j];

  double dual = 0.0;
  for (std::size_t i = 0; i < n; ++i) dual += a.weights[i] * p.f[i];
  for (std::size_t j = 0; j < m; ++j) dual += b.weights[j] * p.g[j];
  const double debiased = dual - 0.5 * symmetric_value(a, metric, epsilon, max_iter) -
                          0.5 * symmetric_value(b, metric, epsilon, max_iter);

  out.upper = upper * ma;
  out.lower = std::min(lower, upper) * ma;
  out.debiased = debiased * ma;
  out.primal = primal * ma;
  out.marginal_violation = p.violation;
  out.iterations = p.iterations;
  return out;
}

}  // namespace lagflow
