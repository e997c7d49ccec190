#include "sacflow_app/verify.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

#include "sacflow/analysis.hpp"
#include "sacflow/error.hpp"
#include "sacflow/flow.hpp"
#include "sacflow/rng.hpp"
#include "sacflow/transform.hpp"

namespace sacflow::app {

namespace {

class Suite {
 public:
  void at_most(const std::string& module, const std::string& name, double value, double bound, std::string note = {}) {
    results_.push_back({module, name, value, bound, value <= bound, std::move(note)});
  }
  void at_least(const std::string& module, const std::string& name, double value, double bound, std::string note = {}) {
    results_.push_back({module, name, value, bound, value >= bound, std::move(note)});
  }
  void exact(const std::string& module, const std::string& name, bool ok, double value = 0.0) {
    results_.push_back({module, name, value, 0.0, ok, ok ? "" : "not exact"});
  }
  /// Runs `body`, turning a library error into a failed check of that name.
  template <typename F>
  void guard(const std::string& module, const std::string& name, F&& body) {
    try {
      body();
    } catch (const Error& e) {
      results_.push_back({module, name, 0.0, 0.0, false, e.what()});
    }
  }
  std::vector<CheckResult> take() { return std::move(results_); }

 private:
  std::vector<CheckResult> results_;
};

bool is_identity(const Matrix2& R, int dim) {
  for (int p = 0; p < dim; ++p)
    for (int q = 0; q < dim; ++q)
      if (R(p, q) != (p == q ? 1.0 : 0.0)) return false;
  return true;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) d = std::max(d, std::abs(a[j] - b[j]));
  return d;
}

double trajectory_diff(const PhaseField& a, const PhaseField& b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.slices(); ++k) d = std::max(d, max_abs_diff(a.slice(k), b.slice(k)));
  return d;
}

StateSeries brownian_series(const FieldPath& path) {
  StateSeries s;
  s.width = static_cast<std::size_t>(path.modes());
  std::vector<double> b(s.width, 0.0);
  s.push(0.0, b);
  for (int m = 0; m < path.grid().steps(); ++m) {
    for (int l = 1; l <= path.modes(); ++l) b[static_cast<std::size_t>(l - 1)] += path.increment(m, l);
    s.push(path.grid().time(m + 1), b);
  }
  return s;
}

void field_checks(Suite& suite, const ExperimentConfig& c, const FieldPath& path) {
  const ModeSet& f = c.field;
  const Lattice& lat = c.lattice;
  const int dim = f.dim();
  const std::size_t stride = std::max<std::size_t>(1, lat.size() / 40);

  double asym = 0.0, min_eig = 0.0;
  for (std::size_t i = 0; i < lat.size(); i += stride) {
    const Point x = lat.node(i);
    min_eig = std::min(min_eig, min_eigenvalue_sym(covariance(f, 0.0, x, x), dim));
    for (std::size_t j = 0; j < lat.size(); j += stride) {
      const Matrix2 a = covariance(f, 0.0, x, lat.node(j));
      const Matrix2 b = covariance(f, 0.0, lat.node(j), x);
      for (int p = 0; p < dim; ++p)
        for (int q = 0; q < dim; ++q) asym = std::max(asym, std::abs(a(p, q) - b(q, p)));
    }
  }
  suite.at_most("field", "covariance_symmetry", asym, 1e-14);
  suite.at_least("field", "covariance_psd", min_eig, -1e-12);

  // the field vanishes on and outside the support
  double outside = 0.0;
  for (std::size_t j = 0; j < lat.size(); ++j) {
    if (f.support().strictly_contains(lat.node(j))) continue;
    for (int m = 0; m < path.grid().steps(); ++m) outside = std::max(outside, norm(evaluate_field_increment(f, path, m, lat.node(j)), dim));
  }
  suite.exact("field", "vanishes_outside_support", outside == 0.0, outside);

  // unit variance of normalized increments, at least 10^4 draws per mode
  const int per_path = c.grid.steps();
  const int paths = (10000 + per_path - 1) / per_path;
  double worst = 0.0;
  std::vector<double> sum_sq(static_cast<std::size_t>(f.noise_modes()), 0.0);
  for (int p = 0; p < paths; ++p) {
    const FieldPath unit = sample_path(f, c.grid, 1.0, derive_seed(c.seed, "verify-variance", static_cast<std::uint64_t>(p)));
    for (int m = 0; m < per_path; ++m)
      for (int l = 1; l <= f.noise_modes(); ++l) sum_sq[static_cast<std::size_t>(l - 1)] += unit.increment(m, l) * unit.increment(m, l);
  }
  for (double s : sum_sq) worst = std::max(worst, std::abs(s / (c.grid.dt() * paths * per_path) - 1.0));
  suite.at_most("field", "increment_variance", worst, 0.05, std::to_string(paths * per_path) + " draws per mode");

  const FieldPath quiet = sample_path(f, c.grid, 0.0, c.seed);
  suite.exact("field", "zero_noise_increments",
              std::all_of(quiet.increments().begin(), quiet.increments().end(), [](double v) { return v == 0.0; }));
  const FieldPath again = sample_path(f, c.grid, path.sigma(), path.seed());
  suite.exact("field", "path_reproducible", again.increments() == path.increments());
}

void flow_checks(Suite& suite, const ExperimentConfig& c, const FlowPath& flow, const FlowPath& inverse) {
  const Lattice& lat = flow.lattice();
  const int dim = flow.dim();
  bool identity = true;
  for (std::size_t j = 0; j < lat.size(); ++j) {
    const Point x = lat.node(j);
    for (int a = 0; a < dim; ++a) identity = identity && flow.position(0, j)[static_cast<std::size_t>(a)] == x[static_cast<std::size_t>(a)];
  }
  suite.exact("flow", "identity_at_time_zero", identity);

  bool ring = true;
  for (int m = 0; m <= flow.grid().steps(); ++m)
    for (std::size_t j = 0; j < lat.size(); ++j) {
      if (!lat.on_boundary_ring(j)) continue;
      const Point x = lat.node(j);
      for (int a = 0; a < dim; ++a) ring = ring && flow.position(m, j)[static_cast<std::size_t>(a)] == x[static_cast<std::size_t>(a)];
    }
  suite.exact("flow", "identity_on_boundary_ring", ring);
  suite.at_least("flow", "jacobian_det_positive", flow.min_jacobian_det(), 1e-300);
  const auto& residual = inverse.inversion_residual();
  suite.at_most("flow", "inversion_residual", residual ? residual->newton : 0.0, 1e-8,
                "composition through the inverse spline: " + std::to_string(residual ? residual->composition : 0.0));

  // Ito and Stratonovich agree for spatially constant modes: a plateau mode around the box center
  Box box = c.field.box();
  std::vector<Mode> modes(2);
  modes[1] = Mode{ModeShape::plateau, 0.5, 0, {1, 1}};
  const ModeSet flat(box, 0.0, modes, 0.5);
  const FieldPath flat_path = sample_path(flat, c.grid, c.sigma, derive_seed(c.seed, "verify-constant-mode"));
  Point probe{0.5 * (box.lo[0] + box.hi[0]), 0.5 * (box.lo[1] + box.hi[1])};
  const auto strat = integrate_points(flat, flat_path, {probe}, FlowKind::stratonovich, 0, c.grid.steps());
  const auto ito = integrate_points(flat, flat_path, {probe}, FlowKind::ito, 0, c.grid.steps());
  suite.at_most("flow", "ito_equals_stratonovich_constant_modes", distance(strat[0], ito[0], dim), 10.0 * c.grid.dt());
}

void transform_checks(Suite& suite, const ExperimentConfig& c, const FlowPath& flow, const CoefficientField& coeffs) {
  const Lattice& lat = coeffs.lattice();
  const int dim = coeffs.dim();
  bool ring = true, symmetric = true;
  double chain = 0.0;
  const int stride = std::max(1, c.grid.steps() / 50);
  for (int m = 0; m <= c.grid.steps(); ++m)
    for (std::size_t j = 0; j < lat.size(); ++j) {
      const Matrix2 R = coeffs.R(m, j);
      if (dim == 2) symmetric = symmetric && R(0, 1) == R(1, 0);
      if (lat.on_boundary_ring(j)) {
        const Point S = coeffs.S(m, j);
        ring = ring && is_identity(R, dim) && S[0] == 0.0 && S[1] == 0.0;
        continue;
      }
      if (m % stride != 0) continue;
      const Matrix2 chained = chain_rule_diffusion(flow, m, j);
      for (int p = 0; p < dim; ++p)
        for (int q = 0; q < dim; ++q) chain = std::max(chain, std::abs(R(p, q) - chained(p, q)));
    }
  suite.exact("transform", "boundary_ring_identity", ring);
  suite.exact("transform", "diffusion_symmetric", symmetric);
  suite.at_least("transform", "ellipticity", coeffs.ellipticity(), kEllipticityFloor);
  suite.at_most("transform", "chain_rule_cross_check", chain, 1e-4);

  const FieldPath still = sample_path(c.field.with_drift(Mode{}), c.grid, 0.0, c.seed);
  const FlowPath id = integrate_stratonovich(c.field.with_drift(Mode{}), still, c.lattice);
  const CoefficientField trivial = build_coefficients(id, invert_flow(id));
  bool exact = true;
  for (int m = 0; m <= c.grid.steps(); ++m)
    for (std::size_t j = 0; j < lat.size(); ++j) {
      const Point S = trivial.S(m, j);
      exact = exact && is_identity(trivial.R(m, j), dim) && S[0] == 0.0 && S[1] == 0.0;
    }
  suite.exact("transform", "identity_flow_coefficients", exact);
}

void pde_checks(Suite& suite, const ExperimentConfig& c, const FieldPath& path, const FlowPath& inverse,
                const CoefficientField& coeffs) {
  const auto u0 = c.u0.sample(c.lattice);
  double u0_sup = 0.0;
  for (double v : u0) u0_sup = std::max(u0_sup, std::abs(v));

  suite.guard("pde", "maximum_principle", [&] {
    const PhaseField w = solve_transformed(coeffs, c.u0);
    suite.at_most("pde", "maximum_principle", w.sup_norm(), std::max(1.0, u0_sup) + 1e-3);
    suite.exact("pde", "initial_slice_exact", max_abs_diff(w.slice(0), u0) == 0.0);

    const PhaseField u = pull_back(w, inverse);
    double gap = 0.0;
    for (std::size_t k = 0; k < w.slices(); ++k) {
      double a = 0.0, b = 0.0;
      for (double v : w.slice(k)) a = std::max(a, std::abs(v));
      for (double v : u.slice(k)) b = std::max(b, std::abs(v));
      gap = std::max(gap, std::abs(a - b));
    }
    suite.at_most("pde", "pull_back_preserves_sup", gap, 1e-3);

    const PhaseField direct = solve_direct_spde(c.field, path, c.lattice, c.u0);
    suite.at_most("pde", "route_equivalence", trajectory_diff(u, direct), 5e-2);

    std::vector<double> v0(u0);
    for (double& v : v0) v += 0.1;
    const PhaseField upper = solve_transformed(coeffs, InitialData::samples(v0));
    double excess = -1.0;
    for (std::size_t k = 0; k < w.slices(); ++k) {
      const auto a = w.slice(k), b = upper.slice(k);
      for (std::size_t j = 0; j < a.size(); ++j) excess = std::max(excess, a[j] - b[j]);
    }
    suite.at_most("pde", "comparison_principle", excess, 1e-6);
  });

  suite.guard("pde", "zero_noise_concentration", [&] {
    SolveOptions final_only;
    final_only.full_trajectory = false;
    const PhaseField free = solve_controlled(c.field, Control::zero(c.grid, c.field.noise_modes(), 1), c.lattice, c.u0, final_only);
    std::vector<double> sup;
    for (double sigma : {1e-1, 1e-2, 1e-3}) {
      double worst = 0.0;
      for (std::uint64_t i = 0; i < 10; ++i) {
        const FieldPath p = sample_path(c.field, c.grid, sigma, derive_seed(c.seed, "verify-small-noise", i));
        const FlowPath fl = integrate_stratonovich(c.field, p, c.lattice);
        const FlowPath inv = invert_flow(fl);
        const PhaseField u = pull_back(solve_transformed(build_coefficients(fl, inv), c.u0, final_only), inv);
        worst = std::max(worst, max_abs_diff(u.final_slice(), free.final_slice()));
      }
      sup.push_back(worst);
    }
    suite.exact("pde", "zero_noise_concentration", sup[0] > sup[1] && sup[1] > sup[2], sup[2]);
  });
}

void ldp_checks(Suite& suite, const ExperimentConfig& c) {
  const int modes = c.field.noise_modes();
  const int segments = c.rate.segments;
  std::vector<double> coefficients(static_cast<std::size_t>(modes * segments));
  NormalStream normal(derive_seed(c.seed, "verify-control"));
  for (double& v : coefficients) v = normal();
  const Control f(c.grid, modes, segments, coefficients);
  const double cost = control_cost(f);
  suite.exact("ldp", "cost_quadratic_scaling",
              control_cost(f.scaled(2.0)) == 4.0 * cost && control_cost(f.scaled(0.5)) == 0.25 * cost, cost);
  suite.exact("ldp", "cost_zero_iff_zero_control", cost > 0.0 && control_cost(Control::zero(c.grid, modes, segments)) == 0.0);

  // doubling the amplitudes and halving the control leaves b_f unchanged
  const FlowPath a = integrate_controlled(c.field, f, c.lattice);
  const FlowPath b = integrate_controlled(c.field.scaled(2.0), f.scaled(0.5), c.lattice);
  double gap = 0.0;
  for (std::size_t i = 0; i < a.positions().size(); ++i) gap = std::max(gap, std::abs(a.positions()[i] - b.positions()[i]));
  suite.exact("ldp", "scaling_equivariance", gap == 0.0 && control_cost(f.scaled(0.5)) == 0.25 * cost, gap);

  RateOptions opts = c.rate;
  opts.threads = c.threads;
  const Point probe = c.event.probe;
  const auto free_end = integrate_points(c.field, Control::zero(c.grid, modes, segments), {probe});
  const RateResult flow_rate = minimize_rate_flow(FlowTarget{{probe}, free_end, Constraint::equal, 0}, c.field, c.grid, opts);
  suite.at_most("ldp", "zero_cost_flow_target", flow_rate.cost, 1e-6);

  SolveOptions final_only;
  final_only.full_trajectory = false;
  PhaseTarget target;
  const auto free = solve_controlled(c.field, Control::zero(c.grid, modes, segments), c.lattice, c.u0, final_only).final_slice();
  target.field.assign(free.begin(), free.end());
  const RateResult ac_rate = minimize_rate_ac(target, c.field, c.lattice, c.grid, c.u0, opts);
  suite.at_most("ldp", "zero_cost_phase_target", ac_rate.cost, 1e-6);

  EventSpec everything;
  const ScanTable scan = mc_probability_scan(everything, c.field, c.lattice, c.grid, c.u0, c.ladder, 100, c.seed);
  bool certain = true;
  for (const ScanRow& r : scan.rows) certain = certain && r.p_hat == 1.0 && r.sigma_log_p == 0.0;
  suite.exact("ldp", "whole_space_event_certain", certain);
}

void analysis_checks(Suite& suite, const ExperimentConfig& c) {
  const StateNorm norm;
  const double alpha = c.grr.alpha;
  double constant = 0.0, scaling = 0.0, restriction = -1.0;
  for (std::uint64_t i = 0; i < 20; ++i) {
    const StateSeries s = brownian_series(sample_path(c.field, c.grid, 1.0, derive_seed(c.seed, "verify-grr", i)));
    const double h = holder_seminorm(s, norm, alpha).seminorm;
    constant = std::max(constant, h / grr_rhs(s, norm, alpha, c.grr.p));

    StateSeries scaled = s;
    for (double& v : scaled.data) v *= -3.0;
    scaling = std::max(scaling, std::abs(holder_seminorm(scaled, norm, alpha).seminorm - 3.0 * h) / h);

    StateSeries sub;
    sub.width = s.width;
    for (std::size_t k = 0; k < s.size(); k += 2) sub.push(s.times[k], s.state(k));
    restriction = std::max(restriction, holder_seminorm(sub, norm, alpha).seminorm - h);
  }
  suite.at_most("analysis", "grr_ensemble_constant", constant, 100.0, "20 Brownian paths");
  suite.at_most("analysis", "holder_scaling", scaling, 1e-12);
  suite.at_most("analysis", "holder_restriction_monotone", restriction, 0.0);
}

}  // namespace

std::vector<CheckResult> run_invariant_suite(const ExperimentConfig& config) {
  Suite suite;
  const FieldPath path = sample_path(config.field, config.grid, config.sigma, derive_seed(config.seed, "simulate"));
  field_checks(suite, config, path);
  suite.guard("flow", "sampled_flow", [&] {
    const FlowPath flow = integrate_stratonovich(config.field, path, config.lattice);
    const FlowPath inverse = invert_flow(flow);
    flow_checks(suite, config, flow, inverse);
    const CoefficientField coeffs = build_coefficients(flow, inverse);
    transform_checks(suite, config, flow, coeffs);
    pde_checks(suite, config, path, inverse, coeffs);
  });
  suite.guard("ldp", "rate_and_scan", [&] { ldp_checks(suite, config); });
  suite.guard("analysis", "holder_and_grr", [&] { analysis_checks(suite, config); });
  return suite.take();
}

std::string to_json(const std::vector<CheckResult>& checks) {
  nlohmann::json out = nlohmann::json::array();
  for (const CheckResult& r : checks)
    out.push_back({{"module", r.module}, {"name", r.name}, {"value", r.value}, {"bound", r.bound}, {"passed", r.passed}, {"note", r.note}});
  return out.dump(2);
}

}  // namespace sacflow::app
