#pragma once

#include <array>
#include <cmath>
#include <initializer_list>
#include <iosfwd>

namespace lagflow {

inline constexpr int kMaxDim = 3;

/// Small real vector of runtime dimension 1..kMaxDim, stored inline.
class Vec {
 public:
  Vec() = default;
  explicit Vec(int dim);
  Vec(std::initializer_list<double> values);

  int dim() const noexcept { return dim_; }
  double operator[](int k) const noexcept { return c_[k]; }
  double& operator[](int k) noexcept { return c_[k]; }

  const double* begin() const noexcept { return c_.data(); }
  const double* end() const noexcept { return c_.data() + dim_; }

  Vec& operator+=(const Vec& o) noexcept {
    for (int k = 0; k < dim_; ++k) c_[k] += o.c_[k];
    return *this;
  }
  Vec& operator-=(const Vec& o) noexcept {
    for (int k = 0; k < dim_; ++k) c_[k] -= o.c_[k];
    return *this;
  }
  Vec& operator*=(double s) noexcept {
    for (int k = 0; k < dim_; ++k) c_[k] *= s;
    return *this;
  }

  double dot(const Vec& o) const noexcept {
    double s = 0.0;
    for (int k = 0; k < dim_; ++k) s += c_[k] * o.c_[k];
    return s;
  }
  double norm() const noexcept { return std::sqrt(dot(*this)); }
  bool finite() const noexcept;

  friend bool operator==(const Vec& a, const Vec& b) noexcept;

 private:
  std::array<double, kMaxDim> c_{};
  int dim_ = 0;
};

inline Vec operator+(Vec a, const Vec& b) noexcept { return a += b; }
inline Vec operator-(Vec a, const Vec& b) noexcept { return a -= b; }
inline Vec operator*(double s, Vec a) noexcept { return a *= s; }
inline Vec operator*(Vec a, double s) noexcept { return a *= s; }

std::ostream& operator<<(std::ostream& os, const Vec& v);

/// Point of the flat torus [0,1)^d.
class TorusPoint {
 public:
  TorusPoint() = default;

  int dim() const noexcept { return coords_.dim(); }
  double operator[](int k) const noexcept { return coords_[k]; }
  /// Representative in the fundamental cell [0,1)^d.
  const Vec& lift() const noexcept { return coords_; }

  friend bool operator==(const TorusPoint& a, const TorusPoint& b) noexcept {
    return a.coords_ == b.coords_;
  }

 private:
  friend TorusPoint wrap(const Vec& raw);
  explicit TorusPoint(const Vec& c) : coords_(c) {}
  Vec coords_;
};

/// Minimal periodic displacement; every component lies in (-1/2, 1/2].
class TorusVector {
 public:
  TorusVector() = default;

  int dim() const noexcept { return v_.dim(); }
  double operator[](int k) const noexcept { return v_[k]; }
  const Vec& as_vec() const noexcept { return v_; }
  double norm() const noexcept { return v_.norm(); }

 private:
  friend TorusVector periodic_displacement(const TorusPoint& x, const TorusPoint& y);
  explicit TorusVector(const Vec& v) : v_(v) {}
  Vec v_;
};

/// Reduces every coordinate mod 1 into [0,1). Throws InvalidInput on NaN/inf.
TorusPoint wrap(const Vec& raw);
TorusPoint wrap(std::initializer_list<double> raw);

/// Componentwise minimal representative of y - x; ties at 1/2 go to +1/2.
TorusVector periodic_displacement(const TorusPoint& x, const TorusPoint& y);

/// Geodesic distance on the flat torus. Always <= sqrt(d)/2.
double periodic_distance(const TorusPoint& x, const TorusPoint& y);

/// wrap(x + v).
inline TorusPoint translate(const TorusPoint& x, const Vec& v) { return wrap(x.lift() + v); }

std::ostream& operator<<(std::ostream& os, const TorusPoint& p);

namespace detail {
/// Unchecked variant for wrapped points of equal dimension.
inline double periodic_distance_unchecked(const TorusPoint& x, const TorusPoint& y) noexcept {
  double s = 0.0;
  for (int k = 0; k < x.dim(); ++k) {
    double r = std::abs(y[k] - x[k]);
    if (r > 0.5) r = 1.0 - r;
    s += r * r;
  }
  return std::sqrt(s);
}
}  // namespace detail

}  // namespace lagflow
