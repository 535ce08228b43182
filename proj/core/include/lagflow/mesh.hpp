#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "lagflow/density.hpp"
#include "lagflow/random.hpp"
#include "lagflow/torus.hpp"

namespace lagflow {

enum class MeshKind { cartesian, jittered, voronoi };
enum class RepresentativeMode { uniform, density };

std::string_view to_string(MeshKind kind);
MeshKind parse_mesh_kind(std::string_view name);
std::string_view to_string(RepresentativeMode mode);
RepresentativeMode parse_representative_mode(std::string_view name);

/// Simplex with vertices in lifted (unwrapped) coordinates.
class Simplex {
 public:
  Simplex() = default;
  /// Throws ConstructionError when the simplex is degenerate.
  Simplex(int dim, const std::vector<Vec>& vertices);

  int dim() const noexcept { return dim_; }
  const Vec& vertex(int k) const noexcept { return v_[k]; }
  double volume() const noexcept { return volume_; }
  /// Signed determinant of the edge matrix.
  double orientation() const noexcept { return det_; }
  /// Smallest barycentric coordinate of x; x lies in the closed simplex iff >= 0.
  double min_barycentric(const Vec& x) const noexcept;
  /// Image of a point of the standard sorted simplex 1 >= s_1 >= ... >= s_d >= 0.
  Vec from_sorted(const double* s) const noexcept;

 private:
  int dim_ = 0;
  std::array<Vec, kMaxDim + 1> v_{};
  std::array<double, kMaxDim * kMaxDim> inv_{};
  double det_ = 0.0;
  double volume_ = 0.0;
};

struct Cell {
  int id = 0;
  double volume = 0.0;
  double diameter = 0.0;
  /// Deterministic interior point.
  TorusPoint anchor;
  /// Lifted bounding box.
  Vec bbox_lo, bbox_hi;
  /// Convex pieces; empty for axis-aligned boxes (the bounding box is the cell).
  std::vector<Simplex> pieces;
  /// Voronoi payload.
  int site = -1;
  std::vector<int> neighbors;
  std::vector<Vec> polygon;

  bool is_box() const noexcept { return pieces.empty(); }
};

/// Quadrature nodes on one cell; weights sum to the cell volume.
struct CellQuadrature {
  std::vector<TorusPoint> points;
  std::vector<double> weights;
};

namespace detail {
class SiteLocator;
}

/// Partition of the torus into cells of diameter at most dx. Immutable.
class Mesh {
 public:
  MeshKind kind() const noexcept { return kind_; }
  int dim() const noexcept { return dim_; }
  int resolution() const noexcept { return resolution_; }
  double jitter() const noexcept { return jitter_; }
  std::uint64_t seed() const noexcept { return seed_; }
  /// Diameter bound: max cell diameter.
  double dx() const noexcept { return dx_; }
  /// Measured min |Q_i| / dx^d.
  double min_volume_ratio() const noexcept { return min_volume_ratio_; }

  std::size_t size() const noexcept { return cells_.size(); }
  const std::vector<Cell>& cells() const noexcept { return cells_; }
  const Cell& cell(int id) const;
  const std::vector<TorusPoint>& sites() const noexcept { return sites_; }

  /// Id of the cell containing x; points on shared boundaries go to the lowest id.
  int locate(const TorusPoint& x) const;

  /// Deterministic equal-weight lattice nodes mapped onto each convex piece.
  /// At least `min_nodes` nodes are produced.
  CellQuadrature cell_quadrature(int id, int min_nodes) const;

 private:
  friend struct MeshBuilder;
  Mesh() = default;
  void finalize();
  int locate_jittered(const TorusPoint& x) const;

  MeshKind kind_ = MeshKind::cartesian;
  int dim_ = 0;
  int resolution_ = 0;
  double jitter_ = 0.0;
  std::uint64_t seed_ = 0;
  double dx_ = 0.0;
  double min_volume_ratio_ = 0.0;
  std::vector<Cell> cells_;
  std::vector<TorusPoint> sites_;
  std::shared_ptr<const detail::SiteLocator> locator_;
};

/// cartesian: N^d boxes of side 1/N. jittered: Cartesian vertices displaced
/// by up to jitter/N per axis; each cell is the image of its box under the
/// piecewise-affine Kuhn map (d! convex simplices). Jitter below 1/6 never
/// folds a simplex; above it a fold throws ConstructionError. voronoi:
/// periodic Voronoi diagram of N^d seeded uniform sites (d <= 2).
Mesh build_mesh(MeshKind kind, int dim, int resolution, double jitter = 0.0,
                std::uint64_t seed = 0);

/// M_i: quadrature of rho0 over cell `id`. Throws InvalidInput on a negative sample.
double cell_mass(const Mesh& mesh, int id, const Density& rho0, int quad_per_cell = 256);
std::vector<double> cell_masses(const Mesh& mesh, const Density& rho0, int quad_per_cell = 256);

/// Uniform point of the cell by rejection from its bounding box.
TorusPoint sample_uniform(const Mesh& mesh, int id, RandomStream& rng);
/// Point of the cell with density rho0 / M_i, by rejection against rho0.
/// Throws EmptyCellError when mass == 0.
TorusPoint sample_density(const Mesh& mesh, int id, RandomStream& rng, const Density& rho0,
                          double mass);
TorusPoint sample_representative(const Mesh& mesh, int id, RandomStream& rng,
                                 RepresentativeMode mode, const Density* rho0 = nullptr,
                                 double mass = 1.0);

/// JSON export/import: {kind, d, dx, resolution, ..., cells:[{id, volume, diameter, geometry}]}.
std::string mesh_to_json(const Mesh& mesh);
Mesh mesh_from_json(std::string_view json);

}  // namespace lagflow
