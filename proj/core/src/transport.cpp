#include "lagflow/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "lagflow/error.hpp"
#include "network_simplex.hpp"

namespace lagflow {

namespace {

void check_weight(double w) {
  if (!(w >= 0.0) || !std::isfinite(w))
    throw InvalidInput("DiscreteMeasure: weights must be finite and >= 0");
}

struct Support {
  std::vector<std::size_t> index;
  std::vector<double> weight;
};

Support support_of(const DiscreteMeasure& m) {
  Support s;
  for (std::size_t k = 0; k < m.size(); ++k) {
    if (m.weight(k) < kWeightFloor) continue;
    s.index.push_back(k);
    s.weight.push_back(m.weight(k));
  }
  return s;
}

void check_pair(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const char* who) {
  if (!mu.empty() && !nu.empty() && mu.dim() != nu.dim())
    throw InvalidInput(std::string(who) + ": dimension mismatch");
  const double a = mu.total_mass(), b = nu.total_mass();
  if (std::abs(a - b) > 1e-8 * std::max({a, b, 1e-300}))
    throw InvalidInput(std::string(who) + ": total masses differ (" + std::to_string(a) + " vs " +
                       std::to_string(b) + ")");
}

struct ExactSolve {
  ExactTransport result;
  Support sa, sb;
  std::vector<double> f, g;
};

ExactSolve solve_exact(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                       const GroundMetric& metric) {
  check_pair(mu, nu, "wasserstein_exact");
  ExactSolve out;
  out.sa = support_of(mu);
  out.sb = support_of(nu);
  if (out.sa.index.size() > kExactSupportCap || out.sb.index.size() > kExactSupportCap)
    throw CapacityError("wasserstein_exact: support of " +
                        std::to_string(std::max(out.sa.index.size(), out.sb.index.size())) +
                        " atoms exceeds the cap of " + std::to_string(kExactSupportCap) +
                        "; use wasserstein_entropic");
  if (out.sa.index.empty() || out.sb.index.empty()) return out;
  const auto& pa = mu.points();
  const auto& pb = nu.points();
  const Support& sa = out.sa;
  const Support& sb = out.sb;
  const auto cost = [&](std::size_t i, std::size_t j) {
    return metric(pa[sa.index[i]], pb[sb.index[j]]);
  };
  const auto cost_row = [&](std::size_t i, double* row) {
    const TorusPoint& x = pa[sa.index[i]];
    for (std::size_t j = 0; j < sb.index.size(); ++j) row[j] = metric(x, pb[sb.index[j]]);
  };
  detail::TransportSolution sol =
      detail::solve_transportation(sa.weight, sb.weight, cost_row, metric.diameter(mu.dim()));
  double total = 0.0;
  for (PlanEntry& e : sol.plan) {
    total += e.mass * cost(e.i, e.j);
    e.i = sa.index[e.i];
    e.j = sb.index[e.j];
  }
  out.result.cost = total;
  out.result.plan = std::move(sol.plan);
  out.f = std::move(sol.f);
  out.g = std::move(sol.g);
  return out;
}

}  // namespace

DiscreteMeasure::DiscreteMeasure(int dim) : dim_(dim) {
  if (dim < 1 || dim > kMaxDim) throw InvalidInput("DiscreteMeasure: dimension must be 1..3");
}

DiscreteMeasure::DiscreteMeasure(std::vector<TorusPoint> points, std::vector<double> weights)
    : points_(std::move(points)), weights_(std::move(weights)) {
  if (points_.size() != weights_.size())
    throw InvalidInput("DiscreteMeasure: points and weights differ in length");
  for (double w : weights_) check_weight(w);
  if (!points_.empty()) {
    dim_ = points_.front().dim();
    for (const TorusPoint& p : points_)
      if (p.dim() != dim_) throw InvalidInput("DiscreteMeasure: mixed dimensions");
  }
}

void DiscreteMeasure::add(const TorusPoint& point, double weight) {
  check_weight(weight);
  if (dim_ == 0) dim_ = point.dim();
  if (point.dim() != dim_) throw InvalidInput("DiscreteMeasure: dimension mismatch");
  points_.push_back(point);
  weights_.push_back(weight);
}

double DiscreteMeasure::total_mass() const noexcept {
  double s = 0.0;
  for (double w : weights_) s += w;
  return s;
}

DiscreteMeasure DiscreteMeasure::scaled(double s) const {
  check_weight(s);
  DiscreteMeasure out = *this;
  for (double& w : out.weights_) w *= s;
  return out;
}

DiscreteMeasure DiscreteMeasure::normalized() const {
  const double m = total_mass();
  if (!(m > 0.0)) throw InvalidInput("DiscreteMeasure: cannot normalize zero mass");
  return scaled(1.0 / m);
}

DiscreteMeasure concatenate(const std::vector<DiscreteMeasure>& parts, double scale) {
  DiscreteMeasure out;
  for (const DiscreteMeasure& p : parts)
    for (std::size_t k = 0; k < p.size(); ++k) out.add(p.point(k), p.weight(k) * scale);
  return out;
}

GroundMetric GroundMetric::euclidean() { return GroundMetric(); }

GroundMetric GroundMetric::logarithmic(double alpha, double h) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidInput("GroundMetric: alpha must lie in [0, 1]");
  if (!(h > 0.0) || !std::isfinite(h)) throw InvalidInput("GroundMetric: h must be > 0");
  GroundMetric g;
  g.kind_ = Kind::logarithmic;
  g.alpha_ = alpha;
  g.h_ = h;
  g.scale_ = std::pow(h, alpha);
  return g;
}

double GroundMetric::of_distance(double r) const noexcept {
  if (kind_ == Kind::euclidean_torus) return r;
  return std::log1p(r / scale_);
}

double GroundMetric::operator()(const TorusPoint& x, const TorusPoint& y) const {
  return of_distance(detail::periodic_distance_unchecked(x, y));
}

double GroundMetric::diameter(int dim) const noexcept { return of_distance(0.5 * std::sqrt(double(dim))); }

std::string GroundMetric::name() const {
  if (kind_ == Kind::euclidean_torus) return "w1";
  std::ostringstream os;
  os.precision(17);
  os << "log(alpha=" << alpha_ << ",h=" << h_ << ")";
  return os.str();
}

DiscreteMeasure pushforward(const DiscreteMeasure& measure,
                            const std::function<TorusPoint(const TorusPoint&)>& map) {
  std::vector<TorusPoint> pts;
  pts.reserve(measure.size());
  for (const TorusPoint& p : measure.points()) pts.push_back(map(p));
  return DiscreteMeasure(std::move(pts), measure.weights());
}

ExactTransport wasserstein_exact(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                 const GroundMetric& metric) {
  return solve_exact(mu, nu, metric).result;
}

double splitting_upper_bound(const std::vector<DiscreteMeasure>& parts_mu,
                             const std::vector<DiscreteMeasure>& parts_nu,
                             const GroundMetric& metric) {
  if (parts_mu.size() != parts_nu.size())
    throw InvalidInput("splitting_upper_bound: part lists differ in length");
  double bound = 0.0;
  for (std::size_t k = 0; k < parts_mu.size(); ++k) {
    const double ma = parts_mu[k].total_mass(), mb = parts_nu[k].total_mass();
    if (std::abs(ma - mb) > 1e-8 * std::max({ma, mb, 1e-300}))
      throw InvalidInput("splitting_upper_bound: part " + std::to_string(k) + " is not mass-matched");
    if (ma <= 0.0) continue;
    bound += ma * wasserstein_exact(parts_mu[k].normalized(), parts_nu[k].normalized(), metric).cost;
  }
  return bound;
}

double kr_dual_gap(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                   const GroundMetric& metric, const std::vector<double>& potential) {
  if (potential.size() != mu.size() + nu.size())
    throw InvalidInput("kr_dual_gap: potential must hold one value per atom of mu and nu");
  std::vector<TorusPoint> pts = mu.points();
  pts.insert(pts.end(), nu.points().begin(), nu.points().end());
  for (std::size_t a = 0; a < pts.size(); ++a)
    for (std::size_t b = a + 1; b < pts.size(); ++b)
      if (std::abs(potential[a] - potential[b]) > metric(pts[a], pts[b]) + 1e-10)
        throw InvalidInput("kr_dual_gap: potential is not 1-Lipschitz (atoms " + std::to_string(a) +
                           ", " + std::to_string(b) + ")");
  double pairing = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) pairing += potential[i] * mu.weight(i);
  for (std::size_t j = 0; j < nu.size(); ++j) pairing -= potential[mu.size() + j] * nu.weight(j);
  return wasserstein_exact(mu, nu, metric).cost - pairing;
}

namespace detail {

std::vector<double> optimal_kr_potential(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                         const GroundMetric& metric) {
  const ExactSolve s = solve_exact(mu, nu, metric);
  std::vector<TorusPoint> pts = mu.points();
  pts.insert(pts.end(), nu.points().begin(), nu.points().end());
  std::vector<double> phi(pts.size(), 0.0);
  if (s.sb.index.empty()) return phi;
  for (std::size_t z = 0; z < pts.size(); ++z) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < s.sb.index.size(); ++j)
      best = std::min(best, metric(pts[z], nu.point(s.sb.index[j])) - s.g[j]);
    phi[z] = best;
  }
  return phi;
}

}  // namespace detail

}  // namespace lagflow
