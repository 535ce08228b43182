#pragma once

#include <cstdint>
#include <vector>

namespace lagflow {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1].
QuadratureRule gauss_legendre(int n);

/// Radical inverse of `index` in `base` (van der Corput).
double radical_inverse(std::uint64_t index, int base);

/// Halton point `index` (0-based, skipping the origin) in `dim` dimensions.
/// Supports dim <= 8.
void halton_point(std::uint64_t index, int dim, double* out);

}  // namespace lagflow
