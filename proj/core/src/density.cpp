#include "lagflow/density.hpp"

#include <cmath>
#include <numbers>

#include "lagflow/error.hpp"

namespace lagflow {

Density uniform_density(int dim) {
  static_cast<void>(Vec(dim));  // validates the dimension
  return {"uniform", dim, [](const TorusPoint&) { return 1.0; }, 1.0};
}

Density sinusoidal_bump(int dim, double amplitude) {
  static_cast<void>(Vec(dim));
  if (!(std::abs(amplitude) < 1.0)) throw InvalidInput("sinusoidal_bump: need |amplitude| < 1");
  return {"sinusoidal_bump", dim,
          [amplitude](const TorusPoint& x) {
            double s = 1.0;
            for (int k = 0; k < x.dim(); ++k) s *= std::sin(2.0 * std::numbers::pi * x[k]);
            return 1.0 + amplitude * s;
          },
          1.0 + std::abs(amplitude)};
}

Density truncated_singular(int dim, double exponent, double level, std::vector<double> center) {
  Vec c(dim);
  for (int k = 0; k < dim; ++k) c[k] = 0.5;
  if (!center.empty()) {
    if (static_cast<int>(center.size()) != dim)
      throw InvalidInput("truncated_singular: center dimension mismatch");
    for (int k = 0; k < dim; ++k) c[k] = center[k];
  }
  if (!(exponent > 0.0 && exponent < dim))
    throw InvalidInput("truncated_singular: exponent must lie in (0, d)");
  if (!(level > 0.0 && std::isfinite(level)))
    throw InvalidInput("truncated_singular: truncation level K must be positive and finite");
  const TorusPoint cp = wrap(c);
  return {"truncated_singular", dim,
          [cp, exponent, level](const TorusPoint& x) {
            const double r = periodic_distance(cp, x);
            if (r == 0.0) return level;
            return std::min(std::pow(r, -exponent), level);
          },
          level};
}

}  // namespace lagflow
