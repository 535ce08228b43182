#pragma once

#include <vector>

#include "lagflow/torus.hpp"

namespace lagflow::detail {

/// Bucket grid over periodic sites for nearest-site and radius queries (d <= 2).
class SiteLocator {
 public:
  SiteLocator(int dim, std::vector<TorusPoint> sites);

  /// Nearest site; equal distances resolve to the lowest id.
  int nearest(const TorusPoint& x) const;
  /// Ids of all sites whose minimal-image distance to x is <= radius.
  std::vector<int> within(const TorusPoint& x, double radius) const;

  const std::vector<TorusPoint>& sites() const noexcept { return sites_; }

 private:
  int bucket_of(double coord) const noexcept;
  template <typename Visit>
  void visit_ring(const int* center, int ring, Visit&& visit) const;

  int dim_;
  int buckets_;
  std::vector<TorusPoint> sites_;
  std::vector<std::vector<int>> bins_;
};

}  // namespace lagflow::detail
