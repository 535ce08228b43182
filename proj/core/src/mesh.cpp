#include "lagflow/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "lagflow/error.hpp"
#include "mesh_internal.hpp"
#include "site_locator.hpp"

namespace lagflow {

namespace {

constexpr double kMinCellVolume = 1e-12;
constexpr double kLocateSlack = 1e-12;
constexpr std::size_t kMaxCells = std::size_t{1} << 22;

int factorial(int n) { return n <= 1 ? 1 : n * factorial(n - 1); }

std::size_t ipow(int base, int exp) {
  std::size_t r = 1;
  for (int k = 0; k < exp; ++k) r *= static_cast<std::size_t>(base);
  return r;
}

// Multi-index of a cell id; axis 0 varies fastest.
std::array<int, kMaxDim> unflatten(std::size_t id, int dim, int n) {
  std::array<int, kMaxDim> idx{};
  for (int a = 0; a < dim; ++a) {
    idx[a] = static_cast<int>(id % n);
    id /= n;
  }
  return idx;
}

std::size_t flatten(const std::array<int, kMaxDim>& idx, int dim, int n) {
  std::size_t id = 0;
  for (int a = dim - 1; a >= 0; --a) id = id * n + static_cast<std::size_t>((idx[a] % n + n) % n);
  return id;
}

// Cartesian index along one axis with grid-line points sent to the lower box.
int grid_index(double x, int n) {
  const double s = x * n;
  int i = static_cast<int>(std::floor(s));
  if (i >= n) i = n - 1;
  if (i > 0 && s == static_cast<double>(i)) --i;
  return i;
}

bool piece_contains(const Cell& cell, const Vec& y, double slack) {
  for (const Simplex& s : cell.pieces)
    if (s.min_barycentric(y) >= -slack) return true;
  return false;
}

Mesh build_cartesian(int dim, int n) {
  std::vector<Cell> cells(ipow(n, dim));
  const double h = 1.0 / n;
  for (std::size_t id = 0; id < cells.size(); ++id) {
    const auto idx = unflatten(id, dim, n);
    Cell& c = cells[id];
    c.id = static_cast<int>(id);
    c.bbox_lo = Vec(dim);
    c.bbox_hi = Vec(dim);
    Vec mid(dim);
    c.volume = 1.0;
    for (int a = 0; a < dim; ++a) {
      c.bbox_lo[a] = idx[a] * h;
      c.bbox_hi[a] = (idx[a] + 1) * h;
      mid[a] = (idx[a] + 0.5) * h;
      c.volume *= h;
    }
    c.diameter = (c.bbox_hi - c.bbox_lo).norm();
    c.anchor = wrap(mid);
  }
  return MeshBuilder::assemble(MeshKind::cartesian, dim, n, 0.0, 0, std::move(cells), {});
}

Mesh build_jittered(int dim, int n, double jitter, std::uint64_t seed) {
  const std::size_t count = ipow(n, dim);
  RandomStream rng(seed);
  std::vector<Vec> disp(count, Vec(dim));
  for (Vec& v : disp)
    for (int a = 0; a < dim; ++a) v[a] = jitter / n * rng.uniform(-1.0, 1.0);

  std::array<int, kMaxDim> perm{};
  std::iota(perm.begin(), perm.begin() + dim, 0);
  std::vector<std::array<int, kMaxDim>> perms;
  std::vector<int> signs;
  do {
    perms.push_back(perm);
    int inversions = 0;
    for (int i = 0; i < dim; ++i)
      for (int j = i + 1; j < dim; ++j) inversions += perm[i] > perm[j];
    signs.push_back(inversions % 2 ? -1 : 1);
  } while (std::next_permutation(perm.begin(), perm.begin() + dim));

  auto vertex = [&](std::array<int, kMaxDim> raw) {
    Vec v(dim);
    for (int a = 0; a < dim; ++a) v[a] = static_cast<double>(raw[a]) / n;
    return v + disp[flatten(raw, dim, n)];
  };

  std::vector<Cell> cells(count);
  for (std::size_t id = 0; id < count; ++id) {
    Cell& c = cells[id];
    c.id = static_cast<int>(id);
    const auto base = unflatten(id, dim, n);
    for (std::size_t p = 0; p < perms.size(); ++p) {
      std::vector<Vec> verts;
      auto corner = base;
      verts.push_back(vertex(corner));
      for (int k = 0; k < dim; ++k) {
        ++corner[perms[p][k]];
        verts.push_back(vertex(corner));
      }
      Simplex s(dim, verts);
      if (s.orientation() * signs[p] <= 0.0)
        throw ConstructionError("jittered mesh: cell " + std::to_string(id) +
                                " folds over; reduce the jitter");
      c.pieces.push_back(s);
    }
    summarize_pieces(c, dim);
  }
  return MeshBuilder::assemble(MeshKind::jittered, dim, n, jitter, seed, std::move(cells), {});
}

}  // namespace

std::string_view to_string(MeshKind kind) {
  switch (kind) {
    case MeshKind::cartesian: return "cartesian";
    case MeshKind::jittered: return "jittered";
    case MeshKind::voronoi: return "voronoi";
  }
  return "?";
}

MeshKind parse_mesh_kind(std::string_view name) {
  if (name == "cartesian") return MeshKind::cartesian;
  if (name == "jittered") return MeshKind::jittered;
  if (name == "voronoi") return MeshKind::voronoi;
  throw InvalidInput("unknown mesh kind '" + std::string(name) + "'");
}

std::string_view to_string(RepresentativeMode mode) {
  return mode == RepresentativeMode::uniform ? "uniform" : "density";
}

RepresentativeMode parse_representative_mode(std::string_view name) {
  if (name == "uniform") return RepresentativeMode::uniform;
  if (name == "density") return RepresentativeMode::density;
  throw InvalidInput("unknown representative mode '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Simplex

Simplex::Simplex(int dim, const std::vector<Vec>& vertices) : dim_(dim) {
  if (dim < 1 || dim > kMaxDim || static_cast<int>(vertices.size()) != dim + 1)
    throw InvalidInput("simplex needs d + 1 vertices");
  for (int k = 0; k <= dim; ++k) {
    if (vertices[k].dim() != dim) throw InvalidInput("simplex vertex has the wrong dimension");
    v_[k] = vertices[k];
  }
  // Gauss-Jordan on the edge matrix E (columns v_k - v_0), partial pivoting.
  double e[kMaxDim][2 * kMaxDim] = {};
  for (int r = 0; r < dim; ++r) {
    for (int c = 0; c < dim; ++c) e[r][c] = v_[c + 1][r] - v_[0][r];
    e[r][dim + r] = 1.0;
  }
  double det = 1.0;
  for (int c = 0; c < dim; ++c) {
    int piv = c;
    for (int r = c + 1; r < dim; ++r)
      if (std::abs(e[r][c]) > std::abs(e[piv][c])) piv = r;
    if (e[piv][c] == 0.0) throw ConstructionError("degenerate simplex");
    if (piv != c) {
      for (int k = 0; k < 2 * dim; ++k) std::swap(e[piv][k], e[c][k]);
      det = -det;
    }
    const double p = e[c][c];
    det *= p;
    for (int k = 0; k < 2 * dim; ++k) e[c][k] /= p;
    for (int r = 0; r < dim; ++r) {
      if (r == c) continue;
      const double f = e[r][c];
      for (int k = 0; k < 2 * dim; ++k) e[r][k] -= f * e[c][k];
    }
  }
  for (int r = 0; r < dim; ++r)
    for (int c = 0; c < dim; ++c) inv_[r * kMaxDim + c] = e[r][dim + c];
  det_ = det;
  volume_ = std::abs(det) / factorial(dim);
  if (!(volume_ >= kMinCellVolume)) throw ConstructionError("degenerate simplex");
}

double Simplex::min_barycentric(const Vec& x) const noexcept {
  double rest = 1.0, lo = 1.0;
  for (int r = 0; r < dim_; ++r) {
    double s = 0.0;
    for (int c = 0; c < dim_; ++c) s += inv_[r * kMaxDim + c] * (x[c] - v_[0][c]);
    rest -= s;
    lo = std::min(lo, s);
  }
  return std::min(lo, rest);
}

Vec Simplex::from_sorted(const double* s) const noexcept {
  Vec x = v_[0];
  for (int k = 0; k < dim_; ++k) x += s[k] * (v_[k + 1] - v_[k]);
  return x;
}

void summarize_pieces(Cell& cell, int dim) {
  std::vector<Vec> verts;
  cell.volume = 0.0;
  const Simplex* largest = nullptr;
  for (const Simplex& s : cell.pieces) {
    cell.volume += s.volume();
    if (!largest || s.volume() > largest->volume()) largest = &s;
    for (int k = 0; k <= dim; ++k) verts.push_back(s.vertex(k));
  }
  if (!largest) throw ConstructionError("cell without pieces");
  cell.bbox_lo = verts.front();
  cell.bbox_hi = verts.front();
  double diam2 = 0.0;
  for (std::size_t i = 0; i < verts.size(); ++i) {
    for (int a = 0; a < dim; ++a) {
      cell.bbox_lo[a] = std::min(cell.bbox_lo[a], verts[i][a]);
      cell.bbox_hi[a] = std::max(cell.bbox_hi[a], verts[i][a]);
    }
    for (std::size_t j = i + 1; j < verts.size(); ++j) {
      const Vec d = verts[i] - verts[j];
      diam2 = std::max(diam2, d.dot(d));
    }
  }
  cell.diameter = std::sqrt(diam2);
  Vec centroid(dim);
  for (int k = 0; k <= dim; ++k) centroid += largest->vertex(k);
  cell.anchor = wrap((1.0 / (dim + 1)) * centroid);
}

// ---------------------------------------------------------------------------
// Mesh

Mesh MeshBuilder::assemble(MeshKind kind, int dim, int resolution, double jitter,
                           std::uint64_t seed, std::vector<Cell> cells,
                           std::vector<TorusPoint> sites) {
  Mesh m;
  m.kind_ = kind;
  m.dim_ = dim;
  m.resolution_ = resolution;
  m.jitter_ = jitter;
  m.seed_ = seed;
  m.cells_ = std::move(cells);
  m.sites_ = std::move(sites);
  if (kind == MeshKind::voronoi) {
    if (m.sites_.size() != m.cells_.size())
      throw ConstructionError("voronoi mesh: one site per cell required");
    m.locator_ = std::make_shared<const detail::SiteLocator>(dim, m.sites_);
  }
  m.finalize();
  return m;
}

void Mesh::finalize() {
  if (cells_.empty()) throw ConstructionError("mesh has no cells");
  double total = 0.0, vmin = cells_.front().volume;
  dx_ = 0.0;
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    const Cell& c = cells_[i];
    if (c.id != static_cast<int>(i)) throw ConstructionError("cell ids must be 0..n-1 in order");
    if (!(c.volume >= kMinCellVolume))
      throw ConstructionError("cell " + std::to_string(i) + " is degenerate (volume " +
                              std::to_string(c.volume) + ")");
    total += c.volume;
    vmin = std::min(vmin, c.volume);
    dx_ = std::max(dx_, c.diameter);
  }
  if (std::abs(total - 1.0) > 1e-8)
    throw ConstructionError("cells do not partition the torus: total volume " +
                            std::to_string(total));
  min_volume_ratio_ = vmin / std::pow(dx_, dim_);
}

const Cell& Mesh::cell(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= cells_.size())
    throw InvalidInput("cell id " + std::to_string(id) + " out of range");
  return cells_[id];
}

int Mesh::locate(const TorusPoint& x) const {
  if (x.dim() != dim_) throw InvalidInput("locate: dimension mismatch");
  switch (kind_) {
    case MeshKind::cartesian: {
      std::array<int, kMaxDim> idx{};
      for (int a = 0; a < dim_; ++a) idx[a] = grid_index(x[a], resolution_);
      return static_cast<int>(flatten(idx, dim_, resolution_));
    }
    case MeshKind::jittered: return locate_jittered(x);
    case MeshKind::voronoi: return locator_->nearest(x);
  }
  return 0;
}

int Mesh::locate_jittered(const TorusPoint& x) const {
  const int n = resolution_;
  std::array<int, kMaxDim> base{};
  for (int a = 0; a < dim_; ++a) base[a] = static_cast<int>(std::floor(x[a] * n));
  int best = -1, fallback = -1;
  double fallback_score = -1e300;
  const int combos = static_cast<int>(ipow(3, dim_));
  for (int k = 0; k < combos; ++k) {
    std::array<int, kMaxDim> raw{};
    Vec y = x.lift();
    int rem = k;
    for (int a = 0; a < dim_; ++a) {
      raw[a] = base[a] + rem % 3 - 1;
      rem /= 3;
      const int m = ((raw[a] % n) + n) % n;
      y[a] += static_cast<double>(m - raw[a]) / n;
    }
    const int id = static_cast<int>(flatten(raw, dim_, n));
    if (best >= 0 && id >= best) continue;
    const Cell& c = cells_[id];
    double score = -1e300;
    for (const Simplex& s : c.pieces) score = std::max(score, s.min_barycentric(y));
    if (score >= -kLocateSlack) {
      best = id;
    } else if (score > fallback_score) {
      fallback_score = score;
      fallback = id;
    }
  }
  return best >= 0 ? best : fallback;
}

CellQuadrature Mesh::cell_quadrature(int id, int min_nodes) const {
  const Cell& c = cell(id);
  if (min_nodes < 1) throw InvalidInput("cell_quadrature: need at least one node");
  const int pieces = c.is_box() ? 1 : static_cast<int>(c.pieces.size());
  int m = 1;
  while (static_cast<std::size_t>(pieces) * ipow(m, dim_) < static_cast<std::size_t>(min_nodes)) ++m;
  const std::size_t per_piece = ipow(m, dim_);
  CellQuadrature q;
  q.points.reserve(per_piece * pieces);
  q.weights.reserve(per_piece * pieces);
  double s[kMaxDim];
  for (int p = 0; p < pieces; ++p) {
    const double w = (c.is_box() ? c.volume : c.pieces[p].volume()) / static_cast<double>(per_piece);
    for (std::size_t j = 0; j < per_piece; ++j) {
      std::size_t r = j;
      for (int a = 0; a < dim_; ++a) {
        s[a] = (static_cast<double>(r % m) + 0.5) / m;
        r /= m;
      }
      Vec x(dim_);
      if (c.is_box()) {
        for (int a = 0; a < dim_; ++a) x[a] = c.bbox_lo[a] + s[a] * (c.bbox_hi[a] - c.bbox_lo[a]);
      } else {
        std::sort(s, s + dim_, std::greater<>());
        x = c.pieces[p].from_sorted(s);
      }
      q.points.push_back(wrap(x));
      q.weights.push_back(w);
    }
  }
  return q;
}

Mesh build_mesh(MeshKind kind, int dim, int resolution, double jitter, std::uint64_t seed) {
  static_cast<void>(Vec(dim));
  if (resolution < 2) throw InvalidInput("mesh resolution must be >= 2");
  if (ipow(resolution, dim) > kMaxCells) throw InvalidInput("mesh too large");
  if (!(jitter >= 0.0 && jitter < 0.5)) throw InvalidInput("jitter must be in [0, 1/2)");
  switch (kind) {
    case MeshKind::cartesian: return build_cartesian(dim, resolution);
    case MeshKind::jittered: return build_jittered(dim, resolution, jitter, seed);
    case MeshKind::voronoi:
      if (dim > 2) throw InvalidInput("voronoi meshes are available for d <= 2");
      return MeshBuilder::voronoi(dim, resolution, seed);
  }
  throw InvalidInput("unknown mesh kind");
}

// ---------------------------------------------------------------------------
// Masses and sampling

double cell_mass(const Mesh& mesh, int id, const Density& rho0, int quad_per_cell) {
  if (quad_per_cell < 32) throw InvalidInput("cell_mass: quad_per_cell must be >= 32");
  if (rho0.dim != mesh.dim()) throw InvalidInput("cell_mass: density dimension mismatch");
  const CellQuadrature q = mesh.cell_quadrature(id, quad_per_cell);
  double m = 0.0;
  for (std::size_t k = 0; k < q.points.size(); ++k) {
    const double r = rho0(q.points[k]);
    if (!(r >= 0.0)) throw InvalidInput("density '" + rho0.name + "' is negative or NaN");
    m += q.weights[k] * r;
  }
  return m;
}

std::vector<double> cell_masses(const Mesh& mesh, const Density& rho0, int quad_per_cell) {
  std::vector<double> out(mesh.size());
  for (std::size_t i = 0; i < mesh.size(); ++i)
    out[i] = cell_mass(mesh, static_cast<int>(i), rho0, quad_per_cell);
  return out;
}

TorusPoint sample_uniform(const Mesh& mesh, int id, RandomStream& rng) {
  const Cell& c = mesh.cell(id);
  const int d = mesh.dim();
  Vec y(d);
  for (int attempt = 0; attempt < 1000000; ++attempt) {
    for (int a = 0; a < d; ++a) y[a] = rng.uniform(c.bbox_lo[a], c.bbox_hi[a]);
    if (c.is_box() || piece_contains(c, y, 0.0)) return wrap(y);
  }
  throw Error("sample_uniform: rejection sampler exhausted on cell " + std::to_string(id));
}

TorusPoint sample_density(const Mesh& mesh, int id, RandomStream& rng, const Density& rho0,
                          double mass) {
  if (!(mass > 0.0)) throw EmptyCellError(id);
  if (!(rho0.sup_bound > 0.0)) throw InvalidInput("sample_density: density needs sup_bound > 0");
  for (int attempt = 0; attempt < 1000000; ++attempt) {
    const TorusPoint x = sample_uniform(mesh, id, rng);
    if (rng.uniform() * rho0.sup_bound < rho0(x)) return x;
  }
  throw Error("sample_density: rejection sampler exhausted on cell " + std::to_string(id));
}

TorusPoint sample_representative(const Mesh& mesh, int id, RandomStream& rng,
                                 RepresentativeMode mode, const Density* rho0, double mass) {
  if (mode == RepresentativeMode::uniform) return sample_uniform(mesh, id, rng);
  if (!rho0) throw InvalidInput("density-mode sampling needs a density");
  return sample_density(mesh, id, rng, *rho0, mass);
}

}  // namespace lagflow
