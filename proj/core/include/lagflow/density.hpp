#pragma once

#include <functional>
#include <string>
#include <vector>

#include "lagflow/torus.hpp"

namespace lagflow {

/// Nonnegative bounded initial density on the torus.
struct Density {
  std::string name;
  int dim = 0;
  std::function<double(const TorusPoint&)> fn;
  /// Essential supremum; rejection samplers draw against it.
  double sup_bound = 0.0;

  double operator()(const TorusPoint& x) const { return fn(x); }
};

Density uniform_density(int dim);
/// 1 + amplitude * prod_k sin(2 pi x_k); |amplitude| < 1.
Density sinusoidal_bump(int dim, double amplitude = 0.5);
/// min(|x - center|^-exponent, K), the truncation of an unbounded density
/// at a caller-chosen level K. Requires 0 < exponent < d.
Density truncated_singular(int dim, double exponent, double level, std::vector<double> center = {});

}  // namespace lagflow
