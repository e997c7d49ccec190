#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sacflow/geometry.hpp"
#include "sacflow/grid.hpp"

namespace sacflow {

class KeyValueText;

enum class ModeShape {
  zero,     ///< identically zero
  sine,     ///< amplitude * prod_a sin(w_a pi xhat_a) (1 - s_a^2)^4
  plateau,  ///< amplitude * prod_a h(s_a): constant on the inner box, C-infinity cutoff to 0 at the support boundary
  linear,   ///< amplitude * x_component * prod_a h(s_a)
};

std::string to_string(ModeShape shape);
ModeShape parse_mode_shape(const std::string& name);

/// One vector field X^(l) = (scalar shape) * e_component.
struct Mode {
  ModeShape shape = ModeShape::zero;
  double amplitude = 0.0;
  int component = 0;
  std::array<int, 2> wave{1, 1};
};

/// Common factor 1 + amplitude * sin(2 pi frequency t) applied to every mode.
struct TimeModulation {
  double amplitude = 0.0;
  double frequency = 0.0;
  double factor(double t) const;
};

/// The vector fields X^(0), ..., X^(L) driving the Brownian field
///   X_sigma(t, x) = sqrt(sigma) sum_{l>=1} X^(l)(t, x) B_l(t) + int_0^t X^(0)(s, x) ds.
///
/// All modes vanish on and outside the support box U, which is the enclosing box shrunk by `margin`.
/// Normalized coordinates on U are xhat in [0,1] and s = 2 xhat - 1 in [-1,1].
class ModeSet {
 public:
  ModeSet(const Box& box, double margin, std::vector<Mode> modes, double plateau_inner = 0.5,
          TimeModulation modulation = {});

  /// Default library: L sine bumps with amplitudes c / l^2 and no drift. In 2D mode l points along
  /// axis (l - 1) % 2 with wave numbers ((l + 1) / 2, (l + 1) / 2).
  static ModeSet sine_law(const Box& box, int modes, double amplitude, double margin = 0.0);

  /// Reads the `field.*` keys; see README for the schema.
  static ModeSet from_config(const KeyValueText& kv, const std::string& prefix = "field.");

  int dim() const { return box_.dim; }
  const Box& box() const { return box_; }
  const Box& support() const { return support_; }
  double margin() const { return margin_; }
  /// Number of noise modes L (the drift mode is extra).
  int noise_modes() const { return static_cast<int>(modes_.size()) - 1; }
  const Mode& mode(int l) const { return modes_[static_cast<std::size_t>(l)]; }
  const std::vector<Mode>& modes() const { return modes_; }
  double plateau_inner() const { return plateau_inner_; }
  const TimeModulation& modulation() const { return modulation_; }

  /// Copy with every noise-mode amplitude multiplied by `factor`.
  ModeSet scaled(double factor) const;
  /// Copy with a replaced drift mode.
  ModeSet with_drift(const Mode& drift) const;

  /// X^(l)(t, x); zero outside the support. No box check.
  Point value(int l, double t, const Point& x) const;
  /// X^(l)(t, x) and its Jacobian (DX)_{ik} = d_k X^i.
  Point value(int l, double t, const Point& x, Matrix2& jacobian) const;

  /// sum_{l>=1} weights[l-1] X^(l)(t,x) + drift_weight X^(0)(t,x)
  Point combination(double t, const Point& x, const double* weights, double drift_weight) const;

  /// Throws DomainError if x is outside the enclosing box.
  void require_in_box(const Point& x) const;

 private:
  double shape_value(const Mode& m, const Point& x, Point* grad) const;

  Box box_;
  Box support_;
  double margin_;
  std::vector<Mode> modes_;
  double plateau_inner_;
  TimeModulation modulation_;
  bool all_sine_law_ = false;
};

/// One sampled realization of X_sigma on a time grid, stored as scaled increments sqrt(sigma) dB_l.
class FieldPath {
 public:
  FieldPath(TimeGrid grid, int modes, std::vector<double> increments, double sigma, std::uint64_t seed);

  const TimeGrid& grid() const { return grid_; }
  int modes() const { return modes_; }
  double sigma() const { return sigma_; }
  std::uint64_t seed() const { return seed_; }
  /// sqrt(sigma) dB_l(t_m), l = 1..L.
  double increment(int step, int l) const {
    return increments_[static_cast<std::size_t>(step) * static_cast<std::size_t>(modes_) + static_cast<std::size_t>(l - 1)];
  }
  const double* step_increments(int step) const {
    return increments_.data() + static_cast<std::size_t>(step) * static_cast<std::size_t>(modes_);
  }
  const std::vector<double>& increments() const { return increments_; }

  /// CSV with columns step,mode,increment.
  void write_csv(std::ostream& out) const;

 private:
  TimeGrid grid_;
  int modes_;
  std::vector<double> increments_;
  double sigma_;
  std::uint64_t seed_;
};

/// a(t,x,y) = sum_{i=1..L} X^(i)(t,x) X^(i)(t,y)^T.
Matrix2 covariance(const ModeSet& spec, double t, const Point& x, const Point& y);

/// sup over lattice nodes of int_0^T sum_i |X^(i)(r,x)|^2 dr (trapezoid rule on the time grid).
double sup_trace_bound(const ModeSet& spec, const Lattice& lattice, const TimeGrid& grid);

/// Independent increments dB_l(t_m) ~ N(0, dt), scaled by sqrt(sigma). Deterministic in `seed`.
FieldPath sample_path(const ModeSet& spec, const TimeGrid& grid, double sigma, std::uint64_t seed);

/// The same realization on the grid with half the time step: each increment is split by a Brownian bridge
/// draw from `seed`, so the two fine increments sum to the coarse one.
FieldPath refine_path(const FieldPath& path, std::uint64_t seed);

/// X_sigma(t_{m+1}, x) - X_sigma(t_m, x) = sum_l X^(l)(t_m,x) sqrt(sigma) dB_l + X^(0)(t_m,x) dt.
Point evaluate_field_increment(const ModeSet& spec, const FieldPath& path, int step, const Point& x);

}  // namespace sacflow
