#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "sacflow/field.hpp"
#include "sacflow/geometry.hpp"
#include "sacflow/grid.hpp"

namespace sacflow {

enum class FlowKind { stratonovich, ito, controlled };

std::string to_string(FlowKind kind);

/// Residuals measured when a FlowPath was produced by `invert_flow`.
struct InversionResidual {
  /// max_j |phi(phi^{-1}(x_j)) - x_j|, phi evaluated by spline (Newton residual)
  double newton = 0.0;
  /// max_j |phi^{-1}(phi(x_j)) - x_j|, phi^{-1} evaluated by spline
  double composition = 0.0;
};

/// Discrete flow phi_{0,t_m}(x_j) on a space-time grid with finite-difference Jacobians: fourth-order centered
/// stencils in the interior, second-order centered next to the ring and second-order one-sided on the ring.
///
/// Positions are stored slice by slice, node-major, `dim` components per node.
class FlowPath {
 public:
  FlowPath(Lattice lattice, TimeGrid grid, FlowKind kind, std::vector<double> positions, bool is_inverse = false);

  const Lattice& lattice() const { return lattice_; }
  const TimeGrid& grid() const { return grid_; }
  FlowKind kind() const { return kind_; }
  bool is_inverse() const { return is_inverse_; }
  int dim() const { return lattice_.dim(); }

  Point position(int step, std::size_t node) const {
    const double* p = positions_.data() + offset(step, node);
    return {p[0], dim() == 2 ? p[1] : 0.0};
  }
  Matrix2 jacobian(int step, std::size_t node) const;
  double jacobian_det(int step, std::size_t node) const { return det(jacobian(step, node), dim()); }
  /// Component `axis` of every node at `step` (a scalar lattice field).
  std::vector<double> component(int step, int axis) const;
  /// Displacement phi(x_j) - x_j of component `axis` at `step`.
  std::vector<double> displacement(int step, int axis) const;
  const std::vector<double>& positions() const { return positions_; }

  double min_jacobian_det() const;

  const std::optional<InversionResidual>& inversion_residual() const { return residual_; }
  void set_inversion_residual(InversionResidual r) { residual_ = r; }

  /// CSV: time,node,x0[,x1],det_jacobian
  void write_csv(std::ostream& out) const;
  void write_binary(std::ostream& out) const;
  static FlowPath read_binary(std::istream& in);

 private:
  std::size_t offset(int step, std::size_t node) const {
    return (static_cast<std::size_t>(step) * lattice_.size() + node) * static_cast<std::size_t>(dim());
  }
  void compute_jacobians();

  Lattice lattice_;
  TimeGrid grid_;
  FlowKind kind_;
  bool is_inverse_;
  std::vector<double> positions_;
  std::vector<double> jacobians_;  // dim*dim per node per slice
  std::optional<InversionResidual> residual_;
};

/// Square-integrable control f_l(t), piecewise constant on `segments` equal blocks of the time grid.
/// The block length must be a whole number of time steps.
class Control {
 public:
  Control(TimeGrid grid, int modes, int segments, std::vector<double> coefficients);
  static Control zero(const TimeGrid& grid, int modes, int segments);
  /// f_l = value on every segment for mode l (others zero).
  static Control constant(const TimeGrid& grid, int modes, int segments, int mode, double value);

  const TimeGrid& grid() const { return grid_; }
  int modes() const { return modes_; }
  int segments() const { return segments_; }
  int steps_per_segment() const { return grid_.steps() / segments_; }
  double segment_duration() const { return grid_.dt() * steps_per_segment(); }
  int segment_of(int step) const { return step / steps_per_segment(); }

  double coefficient(int segment, int l) const { return coefficients_[index(segment, l)]; }
  double& coefficient(int segment, int l) { return coefficients_[index(segment, l)]; }
  double at_step(int step, int l) const { return coefficient(segment_of(step), l); }
  const double* segment_coefficients(int segment) const {
    return coefficients_.data() + static_cast<std::size_t>(segment) * static_cast<std::size_t>(modes_);
  }
  std::vector<double>& coefficients() { return coefficients_; }
  const std::vector<double>& coefficients() const { return coefficients_; }

  Control scaled(double factor) const;

 private:
  std::size_t index(int segment, int l) const {
    return static_cast<std::size_t>(segment) * static_cast<std::size_t>(modes_) + static_cast<std::size_t>(l - 1);
  }
  TimeGrid grid_;
  int modes_;
  int segments_;
  std::vector<double> coefficients_;
};

/// Stratonovich flow d phi = -X_sigma(o dt, phi) by the stochastic Heun scheme.
/// Throws StepSizeError if a Jacobian determinant becomes non-positive or a node leaves the support.
FlowPath integrate_stratonovich(const ModeSet& spec, const FieldPath& path, const Lattice& lattice);

/// Ito flow d phi = -X_sigma(dt, phi) by Euler-Maruyama.
FlowPath integrate_ito(const ModeSet& spec, const FieldPath& path, const Lattice& lattice);

/// Controlled skeleton flow d phi / dt = -b_f(t, phi), b_f = sum_l f_l X^(l) + X^(0), by Heun's RK2.
/// The sign matches the stochastic flows driven by -X_sigma.
FlowPath integrate_controlled(const ModeSet& spec, const Control& control, const Lattice& lattice);

/// Unit-sigma Ito-minus-Stratonovich drift -1/2 sum_i (DX^(i)) X^(i) at (t, x).
/// The Ito flow equals the Stratonovich flow plus sigma times this drift.
Point stratonovich_correction(const ModeSet& spec, double t, const Point& x);

/// Pointwise integration of a set of starting points from step `from` to step `to` (exclusive of
/// lattice bookkeeping). `kind` selects Heun (stratonovich) or Euler-Maruyama (ito).
std::vector<Point> integrate_points(const ModeSet& spec, const FieldPath& path, std::vector<Point> points,
                                    FlowKind kind, int from, int to);
std::vector<Point> integrate_points(const ModeSet& spec, const Control& control, std::vector<Point> points);

/// phi^{-1} on the same lattice: per slice Newton on the spline interpolant of phi, seeded from the
/// previous slice. Throws InversionError after 50 iterations without convergence.
FlowPath invert_flow(const FlowPath& flow);

/// max_j |phi_{s,tau}(x_j) - phi_{t,tau}(phi_{s,t}(x_j))| for the Stratonovich flow of `path`,
/// phi_{t,tau} evaluated off-lattice by spline interpolation. s <= t <= tau must be grid nodes.
double cocycle_defect(const ModeSet& spec, const FieldPath& path, const Lattice& lattice, double s, double t,
                      double tau);

/// Lattice flow of the Stratonovich scheme started at step `from` (identity there), slices from..to.
/// Used by cocycle_defect; exposed for diagnostics.
FlowPath integrate_stratonovich_from(const ModeSet& spec, const FieldPath& path, const Lattice& lattice, int from,
                                     int to);

}  // namespace sacflow
