#include "sacflow/grid.hpp"

#include <cmath>
#include <string>

#include "sacflow/error.hpp"

namespace sacflow {

bool Box::contains(const Point& x) const {
  for (int a = 0; a < dim; ++a) {
    const auto k = static_cast<std::size_t>(a);
    if (x[k] < lo[k] || x[k] > hi[k]) return false;
  }
  return true;
}

bool Box::strictly_contains(const Point& x) const {
  for (int a = 0; a < dim; ++a) {
    const auto k = static_cast<std::size_t>(a);
    if (x[k] <= lo[k] || x[k] >= hi[k]) return false;
  }
  return true;
}

Box Box::shrunk(double margin) const {
  Box b = *this;
  for (int a = 0; a < dim; ++a) {
    const auto k = static_cast<std::size_t>(a);
    b.lo[k] += margin;
    b.hi[k] -= margin;
    if (b.hi[k] <= b.lo[k]) throw ParameterError("box margin " + std::to_string(margin) + " leaves an empty domain");
  }
  return b;
}

Lattice::Lattice(const Box& box, std::array<int, 2> cells) : box_(box), cells_(cells) {
  if (box.dim != 1 && box.dim != 2) throw ParameterError("dimension must be 1 or 2");
  size_ = 1;
  for (int a = 0; a < box.dim; ++a) {
    const auto k = static_cast<std::size_t>(a);
    if (cells[k] < 2) throw ParameterError("lattice needs at least 2 cells per axis");
    if (!(box.edge(a) > 0.0)) throw ParameterError("box edge must be positive");
    spacing_[k] = box.edge(a) / cells[k];
    size_ *= static_cast<std::size_t>(cells[k] + 1);
  }
  if (box.dim == 1) {
    cells_[1] = 0;
    spacing_[1] = 0.0;
  }
}

Point Lattice::node(std::size_t j) const {
  const auto c = coords(j);
  Point p{0.0, 0.0};
  for (int a = 0; a < dim(); ++a) {
    const auto k = static_cast<std::size_t>(a);
    p[k] = c[k] == cells_[k] ? box_.hi[k] : box_.lo[k] + c[k] * spacing_[k];
  }
  return p;
}

bool Lattice::on_boundary_ring(std::size_t j) const {
  const auto c = coords(j);
  for (int a = 0; a < dim(); ++a) {
    const auto k = static_cast<std::size_t>(a);
    if (c[k] == 0 || c[k] == cells_[k]) return true;
  }
  return false;
}

Lattice Lattice::refined() const {
  return Lattice(box_, {2 * cells_[0], dim() == 2 ? 2 * cells_[1] : 0});
}

TimeGrid::TimeGrid(double horizon, int steps) : horizon_(horizon), steps_(steps) {
  if (!(horizon > 0.0)) throw ParameterError("time horizon must be positive");
  if (steps < 1) throw ParameterError("time grid needs at least 2 nodes");
}

int TimeGrid::node_index(double t) const {
  const double r = t / dt();
  const long m = std::lround(r);
  if (m < 0 || m > steps_ || std::abs(r - static_cast<double>(m)) > 1e-9)
    throw ParameterError("time " + std::to_string(t) + " is not a node of the time grid");
  return static_cast<int>(m);
}

}  // namespace sacflow
