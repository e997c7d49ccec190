#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sacflow/grid.hpp"

namespace sacflow {

/// Time-indexed states, each a flat vector of `width` numbers (a lattice field or a point).
struct StateSeries {
  std::vector<double> times;
  std::size_t width = 1;
  std::vector<double> data;

  std::size_t size() const { return times.size(); }
  std::span<const double> state(std::size_t i) const { return {data.data() + i * width, width}; }
  void push(double t, std::span<const double> values);
};

enum class StateNormKind {
  sup,  ///< max |v_i|
  c1,   ///< max |v_i| + max |finite-difference gradient| on the lattice
};

/// Norm on the state space. `c1` requires a lattice whose size times `components` equals the state width.
struct StateNorm {
  StateNormKind kind = StateNormKind::sup;
  Lattice lattice{};
  int components = 1;

  double operator()(std::span<const double> v) const;
};

struct HolderReport {
  double exponent = 0.0;
  double seminorm = 0.0;
  double sup_norm = 0.0;
  std::size_t pair_count = 0;
};

/// sup over all grid pairs s < t of ||f(t) - f(s)|| / |t - s|^alpha, exact over all O(M^2) pairs.
/// alpha = 0 gives the oscillation.
HolderReport holder_seminorm(const StateSeries& values, const StateNorm& norm, double alpha);

/// Right-hand side of the Garsia-Rodemich-Rumsey bound,
///   ( int int ||f(x) - f(y)||^p / |x - y|^(alpha p + 2) dx dy )^(1/p),
/// by the trapezoid rule over all off-diagonal grid pairs (|x - y| >= dt).
double grr_rhs(const StateSeries& values, const StateNorm& norm, double alpha, double p);

struct MomentHolderReport {
  double p = 0.0;
  double q = 0.0;
  std::vector<double> lags;
  std::vector<double> moments;  ///< E ||f(t+h) - f(t)||^p per lag
  double slope = 0.0;           ///< fitted log-log slope
  double expected_slope = 0.0;  ///< p / (2q)
  double lambda_hat = 0.0;      ///< max over lags of moment / h^(p/2q)
  double alpha = 0.0;           ///< 1/(2q) - 1/p - 0.05
  double mean_seminorm_power = 0.0;
  /// E[seminorm^p] / (lambda_hat + 1): the empirical constant in the moment-to-Hoelder bound
  double empirical_constant = 0.0;
  bool hypothesis_verified = false;
};

/// Empirical check of the moment hypothesis E||f(t)-f(s)||^p <= Lambda |t-s|^(p/2q) and the resulting
/// Hoelder moment bound. Requires an ensemble of at least 100 paths on a common uniform grid.
MomentHolderReport moment_holder_check(const std::vector<StateSeries>& ensemble, const StateNorm& norm, double p,
                                       double q);

/// Spatial Hoelder seminorm of a lattice field with `components` values per node: all node pairs in 1D,
/// pairs along lattice lines in 2D.
double spatial_holder_seminorm(const Lattice& lattice, std::span<const double> values, int components, double beta);

std::string to_json(const HolderReport& r);
std::string to_json(const MomentHolderReport& r);

}  // namespace sacflow
