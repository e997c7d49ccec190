#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "sacflow/field.hpp"
#include "sacflow/grid.hpp"

namespace testing {

inline sacflow::Box unit_box(int dim = 1) {
  sacflow::Box b;
  b.dim = dim;
  return b;
}

inline sacflow::Lattice line(int cells) { return sacflow::Lattice(unit_box(), {cells, 0}); }

/// One plateau mode of height c, flat on the inner half of the unit interval.
inline sacflow::ModeSet plateau_mode(double c, int dim = 1) {
  std::vector<sacflow::Mode> modes(2);
  modes[1] = sacflow::Mode{sacflow::ModeShape::plateau, c, 0, {1, 1}};
  return sacflow::ModeSet(unit_box(dim), 0.0, modes, 0.5);
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

/// Upper tail of the standard normal.
inline double normal_tail(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

}  // namespace testing
