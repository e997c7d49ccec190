#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace sacflow {

/// A point or vector in R^n, n <= 2. Unused components are zero.
using Point = std::array<double, 2>;

/// Row-major 2x2 matrix; for n = 1 only entry (0,0) is meaningful.
struct Matrix2 {
  std::array<double, 4> a{0.0, 0.0, 0.0, 0.0};

  double& operator()(int i, int j) { return a[static_cast<std::size_t>(2 * i + j)]; }
  double operator()(int i, int j) const { return a[static_cast<std::size_t>(2 * i + j)]; }

  static Matrix2 identity() { return Matrix2{{1.0, 0.0, 0.0, 1.0}}; }
};

inline double det(const Matrix2& m, int dim) {
  return dim == 1 ? m(0, 0) : m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
}

inline Matrix2 inverse(const Matrix2& m, int dim) {
  Matrix2 r;
  if (dim == 1) {
    r(0, 0) = 1.0 / m(0, 0);
    return r;
  }
  const double d = det(m, 2);
  r(0, 0) = m(1, 1) / d;
  r(0, 1) = -m(0, 1) / d;
  r(1, 0) = -m(1, 0) / d;
  r(1, 1) = m(0, 0) / d;
  return r;
}

/// m * m^T
inline Matrix2 gram(const Matrix2& m, int dim) {
  Matrix2 r;
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) {
      double s = 0.0;
      for (int k = 0; k < dim; ++k) s += m(i, k) * m(j, k);
      r(i, j) = s;
    }
  return r;
}

/// Smallest eigenvalue of a symmetric matrix.
inline double min_eigenvalue_sym(const Matrix2& m, int dim) {
  if (dim == 1) return m(0, 0);
  const double tr = 0.5 * (m(0, 0) + m(1, 1));
  const double dd = 0.5 * (m(0, 0) - m(1, 1));
  const double off = 0.5 * (m(0, 1) + m(1, 0));
  return tr - std::sqrt(dd * dd + off * off);
}

inline double norm(const Point& p, int dim) {
  return dim == 1 ? std::abs(p[0]) : std::hypot(p[0], p[1]);
}

inline double distance(const Point& a, const Point& b, int dim) {
  return norm(Point{a[0] - b[0], a[1] - b[1]}, dim);
}

}  // namespace sacflow
