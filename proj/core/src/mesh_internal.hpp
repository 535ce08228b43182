#pragma once

#include <cstdint>
#include <vector>

#include "lagflow/mesh.hpp"

namespace lagflow {

struct MeshBuilder {
  static Mesh voronoi(int dim, int resolution, std::uint64_t seed);
  /// Takes ownership of fully formed cells and validates the partition.
  static Mesh assemble(MeshKind kind, int dim, int resolution, double jitter, std::uint64_t seed,
                       std::vector<Cell> cells, std::vector<TorusPoint> sites);
};

/// Fills volume, diameter, bounding box and anchor from the convex pieces.
void summarize_pieces(Cell& cell, int dim);

}  // namespace lagflow
