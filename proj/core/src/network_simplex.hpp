#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "lagflow/transport.hpp"

namespace lagflow::detail {

struct TransportSolution {
  std::vector<PlanEntry> plan;
  /// Dual potentials with f_i + g_j <= c_ij, tight on the plan support.
  std::vector<double> f;
  std::vector<double> g;
};

/// Balanced transportation problem on the complete bipartite graph.
/// a and b must be positive. cost_row(i, row) fills row[0..b.size()) with
/// c(i, j) in [0, cost_bound].
TransportSolution solve_transportation(const std::vector<double>& a,
                                       const std::vector<double>& b,
                                       const std::function<void(std::size_t, double*)>& cost_row,
                                       double cost_bound);

}  // namespace lagflow::detail
