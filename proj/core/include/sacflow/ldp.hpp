#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sacflow/field.hpp"
#include "sacflow/flow.hpp"
#include "sacflow/pde.hpp"

namespace sacflow {

/// 1/2 int_0^T |f(s)|^2 ds, exact for piecewise-constant controls.
double control_cost(const Control& control);

struct RateOptions {
  int segments = 1;            ///< control pieces in time (must divide the number of steps)
  double mu0 = 100.0;          ///< first penalty weight
  double mu_factor = 10.0;     ///< continuation factor between stages
  int stages = 3;
  int max_iterations = 200;    ///< quasi-Newton iterations per stage
  double gradient_step = 1e-6; ///< central-difference step
  double gradient_tolerance = 1e-10;
  unsigned threads = 1;        ///< parallel finite-difference evaluations
};

struct RateResult {
  double cost = 0.0;
  Control control = Control::zero(TimeGrid(), 1, 1);
  double achieved_target_distance = 0.0;
  int iterations = 0;
  bool converged = false;
  double final_mu = 0.0;
  int truncation_modes = 0;     ///< number of noise modes L the control could use
  int truncation_segments = 0;  ///< number of time pieces
};

enum class Constraint { equal, at_least, at_most };
std::string to_string(Constraint c);
Constraint parse_constraint(const std::string& name);

/// Endpoint predicate for the controlled flow: each probe p_i is asked to reach targets[i]. With
/// at_least/at_most only coordinate `axis` is constrained.
struct FlowTarget {
  std::vector<Point> probes;
  std::vector<Point> targets;
  Constraint constraint = Constraint::equal;
  int axis = 0;
};

/// Observables on the terminal state.
enum class Observable {
  flow_probe_displacement,  ///< phi_{0,T}(probe)_axis - probe_axis (Stratonovich flow of the field)
  interface_position,       ///< zero crossing of u(T) along `axis`, averaged over lattice lines in 2D
  probe_value,              ///< u(T, probe) by spline interpolation
  whole_space,              ///< the event is certain
};
std::string to_string(Observable o);
Observable parse_observable(const std::string& name);

/// Zero crossing of a phase field along `axis`: the first sign change, located by linear interpolation.
/// Profiles are taken to be negative on the low side, so a line that is positive throughout contributes the
/// low face and a negative line the high face. Continuous in the sup norm where the crossing is transversal.
double interface_position(const Lattice& lattice, std::span<const double> u, int axis = 0);

/// Target for the controlled Allen-Cahn endpoint: either a whole field (mean squared distance) or a
/// constraint on one observable.
struct PhaseTarget {
  enum class Kind { field, observable };
  Kind kind = Kind::field;
  std::vector<double> field;
  Observable observable = Observable::interface_position;
  Point probe{0.0, 0.0};
  int axis = 0;
  double value = 0.0;
  Constraint constraint = Constraint::equal;
};

/// min 1/2 int |f|^2 subject to the controlled flow hitting `target`, by quadratic penalty with
/// continuation and BFGS on finite-difference gradients. The control lives on `grid`.
RateResult minimize_rate_flow(const FlowTarget& target, const ModeSet& spec, const TimeGrid& grid,
                              const RateOptions& opts = {});

/// As minimize_rate_flow with solve_controlled in the loop.
RateResult minimize_rate_ac(const PhaseTarget& target, const ModeSet& spec, const Lattice& lattice,
                            const TimeGrid& grid, const InitialData& u0, const RateOptions& opts = {});

enum class Direction { above, below, two_sided };
std::string to_string(Direction d);
Direction parse_direction(const std::string& name);

/// Rare event {delta >= threshold} (above), {delta <= -threshold} (below) or {|delta| >= threshold}
/// (two-sided) with delta = observable - reference. Without a reference the observable of the
/// noise-free solution is used.
struct EventSpec {
  Observable observable = Observable::whole_space;
  Point probe{0.0, 0.0};
  int axis = 0;
  double threshold = 0.0;
  Direction direction = Direction::above;
  std::optional<double> reference;

  bool contains(double value, double ref) const;
};

enum class Route { flow, direct };
std::string to_string(Route r);
Route parse_route(const std::string& name);

struct ScanOptions {
  Route route = Route::flow;
  unsigned threads = 1;
};

struct ScanRow {
  double sigma = 0.0;
  std::size_t samples = 0;
  std::size_t hits = 0;
  double p_hat = 0.0;
  double wilson_lo = 0.0;
  double wilson_hi = 0.0;
  /// sigma log p_hat; with zero hits, sigma log(1/samples), an upper bound for sigma log P
  double sigma_log_p = 0.0;
  bool lower_bound_only = false;
};

struct ScanTable {
  EventSpec event;
  Route route = Route::flow;
  double reference = 0.0;
  std::uint64_t seed = 0;
  std::vector<ScanRow> rows;

  /// CSV: sigma,samples,hits,p_hat,wilson_lo,wilson_hi,sigma_log_p,lower_bound_only
  void write_csv(std::ostream& out) const;
};

/// Wilson score interval at 95% for `hits` out of `n`.
std::pair<double, double> wilson_interval(std::size_t hits, std::size_t n);

/// Monte Carlo estimate of P(event) at each sigma. Sample i uses the seed derived from (seed, i) at every
/// sigma, so rungs share their Brownian increments up to the sqrt(sigma) scale. Requires samples >= 100 and
/// sigmas positive and strictly decreasing. `lattice` and `u0` are ignored by flow-probe events.
ScanTable mc_probability_scan(const EventSpec& event, const ModeSet& spec, const Lattice& lattice, const TimeGrid& grid,
                              const InitialData& u0, const std::vector<double>& sigmas, std::size_t samples,
                              std::uint64_t seed, const ScanOptions& opts = {});

/// Observable of one realization, as used by mc_probability_scan.
double sample_observable(const EventSpec& event, const ModeSet& spec, const Lattice& lattice, const InitialData& u0,
                         const FieldPath& path, Route route);

struct ReportOptions {
  /// Linear fit of sigma log p_hat against sigma over this many smallest-sigma rows with hits.
  std::size_t fit_rows = 2;
  /// Hit count that makes a rung trustworthy for the direct comparison.
  std::size_t min_hits = 30;
};

/// JSON juxtaposing sigma log p_hat with -cost and the linear-in-sigma extrapolation to sigma = 0.
std::string ldp_report(const ScanTable& scan, const RateResult& rate, const ReportOptions& opts = {});

}  // namespace sacflow
