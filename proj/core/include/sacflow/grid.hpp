#pragma once

#include <array>
#include <cstddef>

#include "sacflow/geometry.hpp"

namespace sacflow {

/// Axis-aligned box in R^dim.
struct Box {
  int dim = 1;
  Point lo{0.0, 0.0};
  Point hi{1.0, 1.0};

  double edge(int axis) const { return hi[static_cast<std::size_t>(axis)] - lo[static_cast<std::size_t>(axis)]; }
  bool contains(const Point& x) const;
  bool strictly_contains(const Point& x) const;
  Box shrunk(double margin) const;
};

/// Uniform node lattice over a box, `cells[a] + 1` nodes per axis, axis 0 fastest.
class Lattice {
 public:
  Lattice() = default;
  Lattice(const Box& box, std::array<int, 2> cells);

  const Box& box() const { return box_; }
  int dim() const { return box_.dim; }
  int cells(int axis) const { return cells_[static_cast<std::size_t>(axis)]; }
  int nodes_along(int axis) const { return axis < dim() ? cells(axis) + 1 : 1; }
  double spacing(int axis) const { return spacing_[static_cast<std::size_t>(axis)]; }
  std::size_t size() const { return size_; }

  std::size_t index(int i0, int i1 = 0) const {
    return static_cast<std::size_t>(i0) + static_cast<std::size_t>(nodes_along(0)) * static_cast<std::size_t>(i1);
  }
  std::array<int, 2> coords(std::size_t j) const {
    const auto n0 = static_cast<std::size_t>(nodes_along(0));
    return {static_cast<int>(j % n0), static_cast<int>(j / n0)};
  }
  Point node(std::size_t j) const;
  /// Node lies on the outer ring of the lattice (the box boundary).
  bool on_boundary_ring(std::size_t j) const;

  /// Halve the spacing along every axis.
  Lattice refined() const;

 private:
  Box box_{};
  std::array<int, 2> cells_{1, 0};
  std::array<double, 2> spacing_{1.0, 0.0};
  std::size_t size_ = 2;
};

/// Uniform partition 0 = t_0 < ... < t_M = T.
class TimeGrid {
 public:
  TimeGrid() = default;
  TimeGrid(double horizon, int steps);

  double horizon() const { return horizon_; }
  int steps() const { return steps_; }
  int nodes() const { return steps_ + 1; }
  double dt() const { return horizon_ / steps_; }
  double time(int m) const { return m == steps_ ? horizon_ : horizon_ * m / steps_; }
  /// Index of node `t`; throws ParameterError if `t` is not a grid node.
  int node_index(double t) const;

  TimeGrid refined() const { return TimeGrid(horizon_, 2 * steps_); }

 private:
  double horizon_ = 1.0;
  int steps_ = 1;
};

}  // namespace sacflow
