#include "lagflow/torus.hpp"

#include <ostream>
#include <string>

#include "lagflow/error.hpp"

namespace lagflow {

Vec::Vec(int dim) : dim_(dim) {
  if (dim < 1 || dim > kMaxDim)
    throw InvalidInput("dimension must be in [1, " + std::to_string(kMaxDim) + "], got " +
                       std::to_string(dim));
}

Vec::Vec(std::initializer_list<double> values) : Vec(static_cast<int>(values.size())) {
  int k = 0;
  for (double v : values) c_[k++] = v;
}

bool Vec::finite() const noexcept {
  for (int k = 0; k < dim_; ++k)
    if (!std::isfinite(c_[k])) return false;
  return true;
}

bool operator==(const Vec& a, const Vec& b) noexcept {
  if (a.dim_ != b.dim_) return false;
  for (int k = 0; k < a.dim_; ++k)
    if (a.c_[k] != b.c_[k]) return false;
  return true;
}

std::ostream& operator<<(std::ostream& os, const Vec& v) {
  os << '(';
  for (int k = 0; k < v.dim(); ++k) os << (k ? ", " : "") << v[k];
  return os << ')';
}

std::ostream& operator<<(std::ostream& os, const TorusPoint& p) { return os << p.lift(); }

TorusPoint wrap(const Vec& raw) {
  if (raw.dim() < 1) throw InvalidInput("wrap: empty coordinate vector");
  if (!raw.finite()) throw InvalidInput("wrap: non-finite coordinate");
  Vec c(raw.dim());
  for (int k = 0; k < raw.dim(); ++k) {
    double r = raw[k] - std::floor(raw[k]);
    // -tiny - floor(-tiny) rounds to exactly 1.0
    if (r >= 1.0) r = 0.0;
    c[k] = r;
  }
  return TorusPoint(c);
}

TorusPoint wrap(std::initializer_list<double> raw) { return wrap(Vec(raw)); }

TorusVector periodic_displacement(const TorusPoint& x, const TorusPoint& y) {
  if (x.dim() != y.dim())
    throw InvalidInput("periodic_displacement: dimension mismatch (" + std::to_string(x.dim()) +
                       " vs " + std::to_string(y.dim()) + ")");
  Vec v(x.dim());
  for (int k = 0; k < x.dim(); ++k) {
    double r = y[k] - x[k];
    r -= std::floor(r);
    if (r > 0.5) r -= 1.0;
    v[k] = r;
  }
  return TorusVector(v);
}

double periodic_distance(const TorusPoint& x, const TorusPoint& y) {
  return periodic_displacement(x, y).norm();
}

}  // namespace lagflow
