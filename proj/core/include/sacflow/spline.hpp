#pragma once

#include <span>
#include <vector>

#include "sacflow/geometry.hpp"
#include "sacflow/grid.hpp"

namespace sacflow {

/// Cubic spline interpolant of a scalar lattice field with zero normal slope on the box boundary.
///
/// The zero-slope end condition is exact for the fields this library interpolates: phase fields obey
/// homogeneous Neumann data and flow displacements are flat where the modes vanish. In 1D this is the
/// clamped cubic spline; in 2D the tensor-product bicubic spline assembled from Hermite patches.
/// The interpolant is C^2 (C^1 across patch edges in 2D).
class LatticeSpline {
 public:
  LatticeSpline() = default;
  LatticeSpline(const Lattice& lattice, std::span<const double> values);

  /// Value at x. Points outside the box by more than a rounding tolerance throw DomainError.
  double value(const Point& x) const;
  /// Value and gradient at x.
  double value_and_gradient(const Point& x, Point& grad) const;

 private:
  struct Cell {
    int i0, i1;
    double u, v;
  };
  Cell locate(const Point& x) const;

  Lattice lattice_{};
  std::vector<double> f_, fx_, fy_, fxy_;
};

/// Slopes of the clamped (zero end slope) uniform cubic spline through `y` with spacing `h`.
void clamped_spline_slopes(std::span<const double> y, double h, std::span<double> slopes, std::vector<double>& scratch);

}  // namespace sacflow
