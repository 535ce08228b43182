#include <algorithm>
#include <cmath>
#include <string>

#include "lagflow/error.hpp"
#include "lagflow/mesh.hpp"
#include "mesh_internal.hpp"
#include "site_locator.hpp"

namespace lagflow {

namespace detail {

SiteLocator::SiteLocator(int dim, std::vector<TorusPoint> sites)
    : dim_(dim), buckets_(1), sites_(std::move(sites)) {
  if (dim < 1 || dim > 2) throw InvalidInput("site locator supports d <= 2");
  if (sites_.empty()) throw InvalidInput("site locator needs at least one site");
  const double n = static_cast<double>(sites_.size());
  buckets_ = std::max(1, static_cast<int>(std::floor(dim == 1 ? n : std::sqrt(n))));
  bins_.assign(dim == 1 ? buckets_ : buckets_ * buckets_, {});
  for (std::size_t i = 0; i < sites_.size(); ++i) {
    if (sites_[i].dim() != dim) throw InvalidInput("site locator: dimension mismatch");
    int b = bucket_of(sites_[i][0]);
    if (dim == 2) b += buckets_ * bucket_of(sites_[i][1]);
    bins_[b].push_back(static_cast<int>(i));
  }
}

int SiteLocator::bucket_of(double coord) const noexcept {
  return std::min(buckets_ - 1, static_cast<int>(coord * buckets_));
}

template <typename Visit>
void SiteLocator::visit_ring(const int* center, int ring, Visit&& visit) const {
  const int b = buckets_;
  auto bin = [&](int i, int j) {
    i = ((i % b) + b) % b;
    j = ((j % b) + b) % b;
    for (int id : bins_[dim_ == 1 ? i : i + b * j]) visit(id);
  };
  if (dim_ == 1) {
    bin(center[0] - ring, 0);
    if (ring > 0) bin(center[0] + ring, 0);
    return;
  }
  if (ring == 0) {
    bin(center[0], center[1]);
    return;
  }
  for (int di = -ring; di <= ring; ++di) {
    bin(center[0] + di, center[1] - ring);
    bin(center[0] + di, center[1] + ring);
  }
  for (int dj = -ring + 1; dj <= ring - 1; ++dj) {
    bin(center[0] - ring, center[1] + dj);
    bin(center[0] + ring, center[1] + dj);
  }
}

int SiteLocator::nearest(const TorusPoint& x) const {
  if (x.dim() != dim_) throw InvalidInput("nearest site: dimension mismatch");
  int best = -1;
  double best_d = 0.0;
  auto consider = [&](int id) {
    const double d = periodic_distance_unchecked(x, sites_[id]);
    if (best < 0 || d < best_d || (d == best_d && id < best)) {
      best = id;
      best_d = d;
    }
  };
  const int center[2] = {bucket_of(x[0]), dim_ == 2 ? bucket_of(x[1]) : 0};
  for (int ring = 0;; ++ring) {
    if (2 * ring + 1 >= buckets_) {
      for (std::size_t i = 0; i < sites_.size(); ++i) consider(static_cast<int>(i));
      return best;
    }
    visit_ring(center, ring, consider);
    // Unvisited sites sit at least ring / B away.
    if (best >= 0 && best_d < static_cast<double>(ring) / buckets_) return best;
  }
}

std::vector<int> SiteLocator::within(const TorusPoint& x, double radius) const {
  if (x.dim() != dim_) throw InvalidInput("site query: dimension mismatch");
  std::vector<int> out;
  auto consider = [&](int id) {
    if (periodic_distance_unchecked(x, sites_[id]) <= radius) out.push_back(id);
  };
  const int rings = static_cast<int>(std::ceil(radius * buckets_)) + 1;
  if (2 * rings + 1 >= buckets_) {
    for (std::size_t i = 0; i < sites_.size(); ++i) consider(static_cast<int>(i));
  } else {
    const int center[2] = {bucket_of(x[0]), dim_ == 2 ? bucket_of(x[1]) : 0};
    for (int ring = 0; ring <= rings; ++ring) visit_ring(center, ring, consider);
    std::sort(out.begin(), out.end());
  }
  return out;
}

}  // namespace detail

namespace {

struct Edge {
  Vec start;
  int label;  // neighbor site across the edge, -1 for the initial square
};

using Polygon = std::vector<Edge>;

double cross(const Vec& a, const Vec& b) { return a[0] * b[1] - a[1] * b[0]; }

// Keeps the half plane closer to s than to the image p.
Polygon clip(const Polygon& poly, const Vec& s, const Vec& p, int label) {
  const Vec normal = p - s;
  const Vec mid = 0.5 * (s + p);
  auto side = [&](const Vec& y) { return (y - mid).dot(normal); };
  Polygon out;
  const std::size_t n = poly.size();
  for (std::size_t k = 0; k < n; ++k) {
    const Edge& e = poly[k];
    const Vec& q = poly[(k + 1) % n].start;
    const double fs = side(e.start), fq = side(q);
    const bool in_s = fs <= 0.0, in_q = fq <= 0.0;
    if (in_s) out.push_back(e);
    if (in_s != in_q) {
      const double t = fs / (fs - fq);
      const Vec cut = e.start + t * (q - e.start);
      out.push_back({cut, in_s ? label : e.label});
    }
  }
  return out;
}

double max_radius(const Polygon& poly, const Vec& s) {
  double r = 0.0;
  for (const Edge& e : poly) r = std::max(r, (e.start - s).norm());
  return r;
}

Polygon voronoi_polygon(const detail::SiteLocator& loc, int self, int resolution) {
  const std::vector<TorusPoint>& sites = loc.sites();
  const Vec s = sites[self].lift();
  Polygon square = {{s + Vec{-0.5, -0.5}, -1},
                    {s + Vec{0.5, -0.5}, -1},
                    {s + Vec{0.5, 0.5}, -1},
                    {s + Vec{-0.5, 0.5}, -1}};
  auto check_duplicate = [&](int j, const Vec& z) {
    if (z.norm() < 1e-12)
      throw ConstructionError("voronoi: duplicate sites " + std::to_string(self) + " and " +
                              std::to_string(j));
  };
  for (double radius = 3.0 / resolution; radius < 0.5; radius *= 2.0) {
    Polygon poly = square;
    for (int j : loc.within(sites[self], radius)) {
      if (j == self) continue;
      const Vec z = periodic_displacement(sites[self], sites[j]).as_vec();
      check_duplicate(j, z);
      poly = clip(poly, s, s + z, j);
    }
    if (2.0 * max_radius(poly, s) <= radius) return poly;
  }
  // Large cells: every site in the 3 x 3 neighborhood of images.
  Polygon poly = square;
  for (std::size_t j = 0; j < sites.size(); ++j) {
    if (static_cast<int>(j) == self) continue;
    const Vec z = periodic_displacement(sites[self], sites[j]).as_vec();
    check_duplicate(static_cast<int>(j), z);
    for (int a = -1; a <= 1; ++a)
      for (int b = -1; b <= 1; ++b) poly = clip(poly, s, s + z + Vec{double(a), double(b)}, int(j));
  }
  return poly;
}

Cell voronoi_cell_2d(const detail::SiteLocator& loc, int self, int resolution) {
  const Polygon poly = voronoi_polygon(loc, self, resolution);
  const Vec s = loc.sites()[self].lift();
  Cell c;
  c.id = self;
  c.site = self;
  for (std::size_t k = 0; k < poly.size(); ++k) {
    const Vec& a = poly[k].start;
    const Vec& b = poly[(k + 1) % poly.size()].start;
    if ((b - a).norm() < 1e-14) continue;
    c.polygon.push_back(a);
    if (poly[k].label >= 0) c.neighbors.push_back(poly[k].label);
    if (0.5 * std::abs(cross(a - s, b - s)) < 1e-12) continue;
    c.pieces.emplace_back(2, std::vector<Vec>{s, a, b});
  }
  if (c.pieces.empty()) throw ConstructionError("voronoi: cell " + std::to_string(self) + " is empty");
  std::sort(c.neighbors.begin(), c.neighbors.end());
  c.neighbors.erase(std::unique(c.neighbors.begin(), c.neighbors.end()), c.neighbors.end());
  summarize_pieces(c, 2);
  c.anchor = loc.sites()[self];
  return c;
}

std::vector<Cell> voronoi_cells_1d(const std::vector<TorusPoint>& sites) {
  const int n = static_cast<int>(sites.size());
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return sites[a][0] < sites[b][0] || (sites[a][0] == sites[b][0] && a < b);
  });
  std::vector<Cell> cells(n);
  for (int k = 0; k < n; ++k) {
    const int self = order[k], prev = order[(k + n - 1) % n], next = order[(k + 1) % n];
    const double s = sites[self][0];
    auto gap = [](double r) { return r - std::floor(r); };
    const double dl = -gap(s - sites[prev][0]);
    const double dr = gap(sites[next][0] - s);
    if (dl > -1e-12 || dr < 1e-12)
      throw ConstructionError("voronoi: duplicate sites near " + std::to_string(self));
    Cell& c = cells[self];
    c.id = self;
    c.site = self;
    c.neighbors = {std::min(prev, next), std::max(prev, next)};
    c.neighbors.erase(std::unique(c.neighbors.begin(), c.neighbors.end()), c.neighbors.end());
    c.pieces.emplace_back(1, std::vector<Vec>{Vec{s + 0.5 * dl}, Vec{s + 0.5 * dr}});
    summarize_pieces(c, 1);
    c.anchor = sites[self];
  }
  return cells;
}

}  // namespace

Mesh MeshBuilder::voronoi(int dim, int resolution, std::uint64_t seed) {
  const std::size_t count = dim == 1 ? resolution : static_cast<std::size_t>(resolution) * resolution;
  RandomStream rng(seed);
  std::vector<TorusPoint> sites;
  sites.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Vec v(dim);
    for (int a = 0; a < dim; ++a) v[a] = rng.uniform();
    sites.push_back(wrap(v));
  }
  std::vector<Cell> cells;
  if (dim == 1) {
    cells = voronoi_cells_1d(sites);
  } else {
    const detail::SiteLocator loc(2, sites);
    cells.reserve(count);
    for (std::size_t i = 0; i < count; ++i)
      cells.push_back(voronoi_cell_2d(loc, static_cast<int>(i), resolution));
  }
  return assemble(MeshKind::voronoi, dim, resolution, 0.0, seed, std::move(cells),
                  std::move(sites));
}

}  // namespace lagflow
