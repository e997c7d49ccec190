#include "sacflow/ldp.hpp"

#include <ceres/gradient_problem.h>
#include <ceres/gradient_problem_solver.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>
#include <thread>

#include "sacflow/error.hpp"
#include "sacflow/rng.hpp"
#include "sacflow/spline.hpp"

namespace sacflow {

double control_cost(const Control& control) {
  double sum = 0.0;
  for (double c : control.coefficients()) sum += c * c;
  return 0.5 * sum * control.segment_duration();
}

std::string to_string(Constraint c) {
  switch (c) {
    case Constraint::equal: return "equal";
    case Constraint::at_least: return "at_least";
    case Constraint::at_most: return "at_most";
  }
  return "equal";
}

Constraint parse_constraint(const std::string& name) {
  if (name == "equal") return Constraint::equal;
  if (name == "at_least") return Constraint::at_least;
  if (name == "at_most") return Constraint::at_most;
  throw ParameterError("unknown constraint '" + name + "' (expected equal, at_least or at_most)");
}

std::string to_string(Observable o) {
  switch (o) {
    case Observable::flow_probe_displacement: return "flow_probe_displacement";
    case Observable::interface_position: return "interface_position";
    case Observable::probe_value: return "probe_value";
    case Observable::whole_space: return "whole_space";
  }
  return "whole_space";
}

Observable parse_observable(const std::string& name) {
  for (auto o : {Observable::flow_probe_displacement, Observable::interface_position, Observable::probe_value,
                 Observable::whole_space})
    if (name == to_string(o)) return o;
  throw ParameterError("unknown observable '" + name + "'");
}

std::string to_string(Direction d) {
  switch (d) {
    case Direction::above: return "above";
    case Direction::below: return "below";
    case Direction::two_sided: return "two_sided";
  }
  return "above";
}

Direction parse_direction(const std::string& name) {
  if (name == "above") return Direction::above;
  if (name == "below") return Direction::below;
  if (name == "two_sided") return Direction::two_sided;
  throw ParameterError("unknown direction '" + name + "' (expected above, below or two_sided)");
}

std::string to_string(Route r) { return r == Route::flow ? "flow" : "direct"; }

Route parse_route(const std::string& name) {
  if (name == "flow") return Route::flow;
  if (name == "direct") return Route::direct;
  throw ParameterError("unknown route '" + name + "' (expected flow or direct)");
}

double interface_position(const Lattice& lattice, std::span<const double> u, int axis) {
  if (u.size() != lattice.size()) throw ParameterError("phase field does not match the lattice");
  if (axis < 0 || axis >= lattice.dim()) throw ParameterError("interface axis out of range");
  const int other = lattice.dim() == 2 ? 1 - axis : 1;
  const int lines = lattice.dim() == 2 ? lattice.nodes_along(other) : 1;
  const int last = lattice.cells(axis);
  const double h = lattice.spacing(axis);
  const double lo = lattice.box().lo[static_cast<std::size_t>(axis)], hi = lattice.box().hi[static_cast<std::size_t>(axis)];
  double total = 0.0;
  for (int o = 0; o < lines; ++o) {
    const auto at = [&](int i) { return u[axis == 0 ? lattice.index(i, o) : lattice.index(o, i)]; };
    double pos = at(0) > 0.0 ? lo : hi;
    for (int i = 0; i < last; ++i) {
      const double a = at(i), b = at(i + 1);
      if (a == 0.0) {
        pos = lo + i * h;
        break;
      }
      if ((a < 0.0) != (b < 0.0) && b != 0.0) {
        pos = lo + (i + a / (a - b)) * h;
        break;
      }
      if (b == 0.0) {
        pos = lo + (i + 1) * h;
        break;
      }
    }
    total += pos;
  }
  return total / lines;
}

namespace {

double constraint_gap(double value, double target, Constraint c) {
  switch (c) {
    case Constraint::equal: return value - target;
    case Constraint::at_least: return std::min(0.0, value - target);
    case Constraint::at_most: return std::max(0.0, value - target);
  }
  return 0.0;
}

// Squared distance to the target set as a function of the flat control coefficients.
using Distance = std::function<double(const Control&)>;

class PenalizedObjective final : public ceres::FirstOrderFunction {
 public:
  PenalizedObjective(const Control& shape, const Distance& distance, double mu, const RateOptions& opts)
      : shape_(shape), distance_(distance), mu_(mu), opts_(opts) {}

  int NumParameters() const override { return static_cast<int>(shape_.coefficients().size()); }

  bool Evaluate(const double* x, double* cost, double* gradient) const override {
    const auto n = static_cast<std::size_t>(NumParameters());
    std::vector<double> base(x, x + n);
    const auto value = objective(base);
    if (!value) return false;
    *cost = *value;
    if (gradient == nullptr) return true;

    std::vector<double> grad(n, 0.0);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> ok{true};
    const auto worker = [&] {
      std::vector<double> probe = base;
      for (std::size_t i = next++; i < n && ok; i = next++) {
        const double h = opts_.gradient_step * std::max(1.0, std::abs(base[i]));
        probe[i] = base[i] + h;
        const auto up = objective(probe);
        probe[i] = base[i] - h;
        const auto down = objective(probe);
        probe[i] = base[i];
        if (!up || !down) {
          ok = false;
          return;
        }
        grad[i] = (*up - *down) / (2.0 * h);
      }
    };
    const unsigned threads = std::max(1u, std::min<unsigned>(opts_.threads, static_cast<unsigned>(n)));
    if (threads == 1) {
      worker();
    } else {
      std::vector<std::jthread> pool;
      for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    if (!ok) return false;
    std::copy(grad.begin(), grad.end(), gradient);
    return true;
  }

 private:
  std::optional<double> objective(const std::vector<double>& coeffs) const {
    try {
      const Control c(shape_.grid(), shape_.modes(), shape_.segments(), coeffs);
      const double d2 = distance_(c);
      if (!std::isfinite(d2)) return std::nullopt;
      return control_cost(c) + mu_ * d2;
    } catch (const Error&) {
      // trial points that break the solvers are rejected; the line search backs off
      return std::nullopt;
    }
  }

  const Control& shape_;
  const Distance& distance_;
  double mu_;
  const RateOptions& opts_;
};

RateResult penalized_minimization(const Control& start, const Distance& distance, const RateOptions& opts) {
  if (opts.stages < 1 || !(opts.mu0 > 0.0) || !(opts.mu_factor >= 1.0) || opts.max_iterations < 1 ||
      !(opts.gradient_step > 0.0))
    throw ParameterError("invalid rate optimizer options");
  RateResult result;
  result.truncation_modes = start.modes();
  result.truncation_segments = start.segments();
  std::vector<double> x = start.coefficients();
  double mu = opts.mu0;

  const double d0 = distance(start);
  if (d0 == 0.0) {
    result.control = start;
    result.cost = control_cost(start);
    result.converged = true;
    result.final_mu = mu;
    if (result.cost == 0.0) return result;
  }

  for (int stage = 0; stage < opts.stages; ++stage, mu *= opts.mu_factor) {
    ceres::GradientProblem problem(new PenalizedObjective(start, distance, mu, opts));
    ceres::GradientProblemSolver::Options options;
    options.line_search_direction_type = ceres::BFGS;
    options.max_num_iterations = opts.max_iterations;
    options.gradient_tolerance = opts.gradient_tolerance;
    options.function_tolerance = 1e-14;
    options.parameter_tolerance = 1e-12;
    options.logging_type = ceres::SILENT;
    ceres::GradientProblemSolver::Summary summary;
    ceres::Solve(options, problem, x.data(), &summary);
    if (!summary.IsSolutionUsable()) throw SolverError("rate minimization failed: " + summary.message);
    result.iterations += static_cast<int>(summary.iterations.size()) - 1;
    result.converged = summary.termination_type == ceres::CONVERGENCE;
    result.final_mu = mu;
  }
  result.control = Control(start.grid(), start.modes(), start.segments(), x);
  result.cost = control_cost(result.control);
  result.achieved_target_distance = std::sqrt(distance(result.control));
  return result;
}

std::vector<double> terminal_state(const ModeSet& spec, const Control& control, const Lattice& lattice,
                                   const InitialData& u0) {
  SolveOptions opts;
  opts.full_trajectory = false;
  const PhaseField u = solve_controlled(spec, control, lattice, u0, opts);
  const auto last = u.final_slice();
  return {last.begin(), last.end()};
}

double phase_observable(Observable o, const Lattice& lattice, std::span<const double> u, const Point& probe, int axis) {
  switch (o) {
    case Observable::interface_position: return interface_position(lattice, u, axis);
    case Observable::probe_value: return LatticeSpline(lattice, u).value(probe);
    case Observable::whole_space: return 0.0;
    case Observable::flow_probe_displacement: break;
  }
  throw ParameterError("observable is not a functional of the phase field");
}

}  // namespace

RateResult minimize_rate_flow(const FlowTarget& target, const ModeSet& spec, const TimeGrid& grid,
                              const RateOptions& opts) {
  if (target.probes.empty() || target.probes.size() != target.targets.size())
    throw ParameterError("flow target needs matching probe and target lists");
  if (target.axis < 0 || target.axis >= spec.dim()) throw ParameterError("flow target axis out of range");
  const int dim = spec.dim();
  const Distance distance = [&](const Control& c) {
    const auto end = integrate_points(spec, c, target.probes);
    double d2 = 0.0;
    for (std::size_t i = 0; i < end.size(); ++i) {
      if (target.constraint == Constraint::equal) {
        for (int a = 0; a < dim; ++a) {
          const double g = end[i][static_cast<std::size_t>(a)] - target.targets[i][static_cast<std::size_t>(a)];
          d2 += g * g;
        }
      } else {
        const auto a = static_cast<std::size_t>(target.axis);
        const double g = constraint_gap(end[i][a], target.targets[i][a], target.constraint);
        d2 += g * g;
      }
    }
    return d2;
  };
  return penalized_minimization(Control::zero(grid, spec.noise_modes(), opts.segments), distance, opts);
}

RateResult minimize_rate_ac(const PhaseTarget& target, const ModeSet& spec, const Lattice& lattice,
                            const TimeGrid& grid, const InitialData& u0, const RateOptions& opts) {
  if (target.kind == PhaseTarget::Kind::field && target.field.size() != lattice.size())
    throw ParameterError("target field does not match the lattice");
  const Distance distance = [&](const Control& c) {
    const auto u = terminal_state(spec, c, lattice, u0);
    if (target.kind == PhaseTarget::Kind::field) {
      double d2 = 0.0;
      for (std::size_t j = 0; j < u.size(); ++j) d2 += (u[j] - target.field[j]) * (u[j] - target.field[j]);
      return d2 / static_cast<double>(u.size());
    }
    const double g = constraint_gap(phase_observable(target.observable, lattice, u, target.probe, target.axis),
                                    target.value, target.constraint);
    return g * g;
  };
  return penalized_minimization(Control::zero(grid, spec.noise_modes(), opts.segments), distance, opts);
}

// ---------------------------------------------------------------------------------------------

bool EventSpec::contains(double value, double ref) const {
  if (observable == Observable::whole_space) return true;
  const double delta = value - ref;
  switch (direction) {
    case Direction::above: return delta >= threshold;
    case Direction::below: return delta <= -threshold;
    case Direction::two_sided: return std::abs(delta) >= threshold;
  }
  return false;
}

std::pair<double, double> wilson_interval(std::size_t hits, std::size_t n) {
  if (n == 0) return {0.0, 1.0};
  constexpr double z = 1.959963984540054;
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(hits) / nn;
  const double denom = 1.0 + z * z / nn;
  const double center = (p + z * z / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z * z / (4.0 * nn * nn)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

double sample_observable(const EventSpec& event, const ModeSet& spec, const Lattice& lattice, const InitialData& u0,
                         const FieldPath& path, Route route) {
  switch (event.observable) {
    case Observable::whole_space: return 0.0;
    case Observable::flow_probe_displacement: {
      const auto end = integrate_points(spec, path, {event.probe}, FlowKind::stratonovich, 0, path.grid().steps());
      const auto a = static_cast<std::size_t>(event.axis);
      return end[0][a] - event.probe[a];
    }
    case Observable::interface_position:
    case Observable::probe_value: break;
  }
  SolveOptions opts;
  opts.full_trajectory = false;
  if (route == Route::direct) {
    const PhaseField u = solve_direct_spde(spec, path, lattice, u0, opts);
    return phase_observable(event.observable, lattice, u.final_slice(), event.probe, event.axis);
  }
  const FlowPath flow = integrate_stratonovich(spec, path, lattice);
  const FlowPath inverse = invert_flow(flow);
  const CoefficientField coeffs = build_coefficients(flow, inverse);
  const PhaseField u = pull_back(solve_transformed(coeffs, u0, opts), inverse);
  return phase_observable(event.observable, lattice, u.final_slice(), event.probe, event.axis);
}

ScanTable mc_probability_scan(const EventSpec& event, const ModeSet& spec, const Lattice& lattice, const TimeGrid& grid,
                              const InitialData& u0, const std::vector<double>& sigmas, std::size_t samples,
                              std::uint64_t seed, const ScanOptions& opts) {
  if (samples < 100) throw ParameterError("mc_probability_scan needs at least 100 samples");
  if (sigmas.empty()) throw ParameterError("sigma ladder is empty");
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    if (!(sigmas[i] > 0.0)) throw ParameterError("sigma values must be positive");
    if (i > 0 && !(sigmas[i] < sigmas[i - 1])) throw ParameterError("sigma values must be strictly decreasing");
  }
  if (event.axis < 0 || event.axis >= spec.dim()) throw ParameterError("event axis out of range");

  ScanTable table;
  table.event = event;
  table.route = opts.route;
  table.seed = seed;
  table.reference = event.reference ? *event.reference
                                    : sample_observable(event, spec, lattice, u0, sample_path(spec, grid, 0.0, seed), opts.route);

  for (double sigma : sigmas) {
    std::vector<unsigned char> hit(samples, 0);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_lock;
    const auto worker = [&] {
      for (std::size_t i = next++; i < samples; i = next++) {
        try {
          const FieldPath path = sample_path(spec, grid, sigma, derive_seed(seed, "mc-sample", i));
          hit[i] = event.contains(sample_observable(event, spec, lattice, u0, path, opts.route), table.reference) ? 1 : 0;
        } catch (const std::exception& e) {
          std::lock_guard lock(failure_lock);
          if (!failure) {
            std::ostringstream msg;
            msg << "sample " << i << " at sigma=" << sigma << ": " << e.what();
            failure = std::make_exception_ptr(Error(msg.str()));
          }
          next = samples;
          return;
        }
      }
    };
    const unsigned threads = std::max(1u, opts.threads);
    if (threads == 1) {
      worker();
    } else {
      std::vector<std::jthread> pool;
      for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    ScanRow row;
    row.sigma = sigma;
    row.samples = samples;
    for (unsigned char h : hit) row.hits += h;
    row.p_hat = static_cast<double>(row.hits) / static_cast<double>(samples);
    std::tie(row.wilson_lo, row.wilson_hi) = wilson_interval(row.hits, samples);
    row.lower_bound_only = row.hits == 0;
    row.sigma_log_p = sigma * std::log(row.hits == 0 ? 1.0 / static_cast<double>(samples) : row.p_hat);
    table.rows.push_back(row);
  }
  return table;
}

void ScanTable::write_csv(std::ostream& out) const {
  out << "sigma,samples,hits,p_hat,wilson_lo,wilson_hi,sigma_log_p,lower_bound_only\n";
  out.precision(17);
  for (const auto& r : rows)
    out << r.sigma << ',' << r.samples << ',' << r.hits << ',' << r.p_hat << ',' << r.wilson_lo << ',' << r.wilson_hi
        << ',' << r.sigma_log_p << ',' << (r.lower_bound_only ? 1 : 0) << '\n';
}

std::string ldp_report(const ScanTable& scan, const RateResult& rate, const ReportOptions& opts) {
  using nlohmann::json;
  const double target = -rate.cost;
  const auto relative = [&](double v) -> json {
    if (rate.cost == 0.0) return nullptr;
    return std::abs(v - target) / std::abs(target);
  };

  json rows = json::array();
  for (const auto& r : scan.rows)
    rows.push_back({{"sigma", r.sigma},
                    {"samples", r.samples},
                    {"hits", r.hits},
                    {"p_hat", r.p_hat},
                    {"wilson_lo", r.wilson_lo},
                    {"wilson_hi", r.wilson_hi},
                    {"sigma_log_p", r.sigma_log_p},
                    {"lower_bound_only", r.lower_bound_only}});

  json report;
  report["rate"] = {{"cost", rate.cost},
                    {"minus_cost", target},
                    {"converged", rate.converged},
                    {"achieved_target_distance", rate.achieved_target_distance},
                    {"iterations", rate.iterations},
                    {"final_mu", rate.final_mu},
                    {"truncation", {{"modes", rate.truncation_modes}, {"segments", rate.truncation_segments}}}};
  if (!rate.converged) report["rate"]["flag"] = "non-converged";
  if (scan.rows.empty()) return report.dump(2);

  report["event"] = {{"observable", to_string(scan.event.observable)},
                     {"direction", to_string(scan.event.direction)},
                     {"threshold", scan.event.threshold},
                     {"axis", scan.event.axis},
                     {"reference", scan.reference}};
  report["route"] = to_string(scan.route);
  report["seed"] = scan.seed;
  report["rows"] = rows;

  std::vector<const ScanRow*> usable;
  for (const auto& r : scan.rows)
    if (!r.lower_bound_only) usable.push_back(&r);
  std::sort(usable.begin(), usable.end(), [](const ScanRow* a, const ScanRow* b) { return a->sigma < b->sigma; });

  json extrapolation = nullptr;
  const std::size_t k = std::min(opts.fit_rows, usable.size());
  if (k >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    json used = json::array();
    for (std::size_t i = 0; i < k; ++i) {
      const double x = usable[i]->sigma, y = usable[i]->sigma_log_p;
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      used.push_back(x);
    }
    const double n = static_cast<double>(k);
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double intercept = (sy - slope * sx) / n;
    extrapolation = {{"sigmas_used", used}, {"intercept", intercept}, {"slope", slope}, {"relative_error", relative(intercept)}};
  }
  report["extrapolation"] = extrapolation;

  json trusted = nullptr;
  for (const ScanRow* r : usable)
    if (r->hits >= opts.min_hits) {
      trusted = {{"sigma", r->sigma}, {"hits", r->hits}, {"sigma_log_p", r->sigma_log_p}, {"relative_error", relative(r->sigma_log_p)}};
      break;
    }
  report["smallest_sigma_with_min_hits"] = trusted;
  report["min_hits"] = opts.min_hits;
  return report.dump(2);
}

}  // namespace sacflow
