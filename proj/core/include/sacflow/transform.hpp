#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "sacflow/flow.hpp"
#include "sacflow/geometry.hpp"
#include "sacflow/grid.hpp"

namespace sacflow {

/// Random coefficients of the transformed Allen-Cahn equation
///   d_t w - R : D^2 w - S . grad w - w + w^3 = 0
/// on every space-time node.
class CoefficientField {
 public:
  CoefficientField(Lattice lattice, TimeGrid grid, std::vector<double> diffusion, std::vector<double> drift);
  /// R = Id, S = 0 everywhere.
  static CoefficientField identity(const Lattice& lattice, const TimeGrid& grid);

  const Lattice& lattice() const { return lattice_; }
  const TimeGrid& grid() const { return grid_; }
  int dim() const { return lattice_.dim(); }

  Matrix2 R(int step, std::size_t node) const;
  Point S(int step, std::size_t node) const;
  /// Smallest eigenvalue of R over all nodes.
  double ellipticity() const { return ellipticity_; }

  /// Flat per-slice views: R stores dim*dim entries per node, S stores dim entries per node.
  std::vector<double> diffusion_slice(int step) const;
  std::vector<double> drift_slice(int step) const;

  /// CSV of one time slice: node,x0[,x1],R00[,R01,R10,R11],S0[,S1]
  void write_csv(std::ostream& out, int step) const;
  /// {"ellipticity":..., "min_step":..., "min_node":...}
  std::string ellipticity_json() const;

 private:
  Lattice lattice_;
  TimeGrid grid_;
  std::vector<double> R_;
  std::vector<double> S_;
  double ellipticity_ = 0.0;
  int min_step_ = 0;
  std::size_t min_node_ = 0;
};

inline constexpr double kEllipticityFloor = 1e-10;

/// R^{ij} = sum_k d_k(phi^{-1})^i(phi(x)) d_k(phi^{-1})^j(phi(x)),
/// S^i = sum_k d_k^2 (phi^{-1})^i(phi(x)).
/// Derivatives of phi^{-1} are taken by finite differences on its lattice and composed with phi by
/// spline interpolation. The boundary ring is set to R = Id, S = 0 exactly.
/// Throws DegenerateCoefficientError when the ellipticity drops to 1e-10 or below.
CoefficientField build_coefficients(const FlowPath& flow, const FlowPath& inverse);

/// The chain-rule route (D phi(x))^{-1} (D phi(x))^{-T} for R, used to cross-check build_coefficients.
Matrix2 chain_rule_diffusion(const FlowPath& flow, int step, std::size_t node);

struct CoefficientHolderReport {
  double gamma = 0.0;
  double space_exponent = 0.0;
  double R_time = 0.0;
  double S_time = 0.0;
  double R_space = 0.0;
  double S_space = 0.0;
};

/// Discrete Hoelder seminorms of R and S: exponent gamma in time and min(2 gamma, 1) in space.
CoefficientHolderReport coefficient_holder_report(const CoefficientField& coeffs, double gamma);

std::string to_json(const CoefficientHolderReport& r);

}  // namespace sacflow
