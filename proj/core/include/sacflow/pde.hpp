#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "sacflow/field.hpp"
#include "sacflow/flow.hpp"
#include "sacflow/grid.hpp"
#include "sacflow/transform.hpp"

namespace sacflow {

enum class PhaseKind { transformed, controlled, direct };
std::string to_string(PhaseKind kind);

/// Scalar phase field on a lattice at a sequence of times. Boundary data is always homogeneous Neumann.
/// A full trajectory holds every node of the solver's time grid; a final-only solve holds the first and
/// last slice.
class PhaseField {
 public:
  PhaseField(Lattice lattice, std::vector<double> times, std::vector<double> values, PhaseKind kind);

  const Lattice& lattice() const { return lattice_; }
  PhaseKind kind() const { return kind_; }
  std::size_t slices() const { return times_.size(); }
  const std::vector<double>& times() const { return times_; }
  double time(std::size_t k) const { return times_[k]; }
  std::span<const double> slice(std::size_t k) const { return {values_.data() + k * lattice_.size(), lattice_.size()}; }
  std::span<const double> final_slice() const { return slice(slices() - 1); }
  const std::vector<double>& values() const { return values_; }
  double sup_norm() const;

  /// CSV: time,node,value
  void write_csv(std::ostream& out) const;
  void write_binary(std::ostream& out) const;
  static PhaseField read_binary(std::istream& in);

 private:
  Lattice lattice_;
  std::vector<double> times_;
  std::vector<double> values_;
  PhaseKind kind_;
};

/// Initial condition u0.
class InitialData {
 public:
  enum class Kind { constant, tanh, samples };

  static InitialData constant(double value);
  /// tanh((x_axis - center) / width): a planar interface normal to `axis`.
  /// Throws ParameterError unless the profile is flat to 1e-6 at the box faces normal to `axis`
  /// (checked when sampled, since the box is needed).
  static InitialData tanh_profile(double center, double width, int axis = 0);
  static InitialData samples(std::vector<double> values);

  Kind kind() const { return kind_; }
  /// Center of a tanh profile, or the value of a constant.
  double center() const { return a_; }
  double width() const { return b_; }
  int axis() const { return axis_; }
  const std::vector<double>& samples() const { return values_; }
  /// Values on the lattice nodes.
  std::vector<double> sample(const Lattice& lattice) const;
  /// Normal derivative of the analytic profile on the box faces (0 for constants and samples).
  double neumann_defect(const Box& box) const;

 private:
  Kind kind_ = Kind::constant;
  double a_ = 0.0, b_ = 1.0;
  int axis_ = 0;
  std::vector<double> values_;
};

inline constexpr double kNeumannTolerance = 1e-6;

struct SolveOptions {
  /// Keep every time slice, or only the first and the last.
  bool full_trajectory = true;
  /// Allowed excess over max(1, |u0|_inf) before a StabilityError (transformed and controlled solves).
  double tol_max = 1e-3;
};

/// d_t w = R : D^2 w + S . grad w + w - w^3 with Neumann data. R frozen per step and treated implicitly,
/// S . grad w and the reaction explicitly.
PhaseField solve_transformed(const CoefficientField& coeffs, const InitialData& u0, const SolveOptions& opts = {});

/// d_t u = Lap u + grad u . b_f + u - u^3 with b_f = sum_l f_l X^(l) + X^(0).
PhaseField solve_controlled(const ModeSet& spec, const Control& control, const Lattice& lattice, const InitialData& u0,
                            const SolveOptions& opts = {});

/// du = (Lap u + u - u^3) dt + grad u . X_sigma(o dt): implicit diffusion, explicit reaction and Heun transport.
/// Throws StabilityError if a field increment exceeds one cell.
PhaseField solve_direct_spde(const ModeSet& spec, const FieldPath& path, const Lattice& lattice, const InitialData& u0,
                             const SolveOptions& opts = {});

/// u(t, x_j) = w(t, psi_t(x_j)) where psi = phi^{-1} is the inverse flow and w(t, x) = u(t, phi_t(x)).
/// Every slice of w must sit on a node of the inverse flow's time grid.
PhaseField pull_back(const PhaseField& w, const FlowPath& inverse);

/// int_0^T int eps (d_t u)^2 + (1/eps)(-eps Lap u + W'(u)/eps)^2 with W'(u) = u^3 - u, by the midpoint rule
/// in time and the trapezoid rule in space.
double action_functional(const PhaseField& u, double eps);

}  // namespace sacflow
