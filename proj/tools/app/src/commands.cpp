#include "sacflow_app/commands.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>

#include "sacflow/analysis.hpp"
#include "sacflow/error.hpp"
#include "sacflow/flow.hpp"
#include "sacflow/io.hpp"
#include "sacflow/rng.hpp"
#include "sacflow/spline.hpp"
#include "sacflow/transform.hpp"
#include "sacflow/version.hpp"
#include "sacflow_app/parallel.hpp"
#include "sacflow_app/serialize.hpp"
#include "sacflow_app/verify.hpp"

namespace sacflow::app {

using nlohmann::json;

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

template <typename T>
std::string csv_of(const T& object) {
  std::ostringstream out;
  object.write_csv(out);
  return out.str();
}

template <typename T>
std::string binary_of(const T& object) {
  std::ostringstream out(std::ios::binary);
  object.write_binary(out);
  return out.str();
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------------------------

int simulate(const ExperimentConfig& c, ArtifactWriter& out, std::ostream& log) {
  const FieldPath path = sample_path(c.field, c.grid, c.sigma, derive_seed(c.seed, "simulate"));
  const FlowPath flow = integrate_stratonovich(c.field, path, c.lattice);
  const FlowPath inverse = invert_flow(flow);
  const CoefficientField coeffs = build_coefficients(flow, inverse);
  const PhaseField w = solve_transformed(coeffs, c.u0);
  const PhaseField u_flow = pull_back(w, inverse);
  const PhaseField u_direct = solve_direct_spde(c.field, path, c.lattice, c.u0);

  double max_diff = 0.0;
  for (std::size_t k = 0; k < u_flow.slices(); ++k) {
    const auto a = u_flow.slice(k), b = u_direct.slice(k);
    for (std::size_t j = 0; j < a.size(); ++j) max_diff = std::max(max_diff, std::abs(a[j] - b[j]));
  }
  double final_diff = 0.0;
  {
    const auto a = u_flow.final_slice(), b = u_direct.final_slice();
    for (std::size_t j = 0; j < a.size(); ++j) final_diff = std::max(final_diff, std::abs(a[j] - b[j]));
  }
  const auto& residual = inverse.inversion_residual();

  json report{{"sigma", c.sigma},
              {"path_seed", path.seed()},
              {"max_abs_difference", max_diff},
              {"final_abs_difference", final_diff},
              {"sup_norm", {{"transformed_w", w.sup_norm()}, {"flow_route", u_flow.sup_norm()}, {"direct_route", u_direct.sup_norm()}}},
              {"ellipticity", coeffs.ellipticity()},
              {"min_jacobian_det", flow.min_jacobian_det()},
              {"inversion_residual",
               {{"newton", residual ? residual->newton : 0.0}, {"composition", residual ? residual->composition : 0.0}}},
              {"action_functional", {{"flow_route", action_functional(u_flow, 1.0)}, {"direct_route", action_functional(u_direct, 1.0)}}}};

  out.write("field_path.csv", csv_of(path));
  out.write("flow.csv", csv_of(flow));
  out.write("flow.bin", binary_of(flow));
  {
    std::ostringstream s;
    coeffs.write_csv(s, c.grid.steps());
    out.write("coefficients_final.csv", s.str());
  }
  out.write("ellipticity.json", coeffs.ellipticity_json());
  out.write("phase_flow.csv", csv_of(u_flow));
  out.write("phase_flow.bin", binary_of(u_flow));
  out.write("phase_direct.csv", csv_of(u_direct));
  out.write("route_report.json", report.dump(2));
  log << "route difference (max over trajectory): " << max_diff << "\n";
  return 0;
}

// Reference value of the event observable: either pinned by the config or the noise-free outcome.
double flow_reference(const ExperimentConfig& c) {
  if (c.event.reference) return *c.event.reference;
  const auto end = integrate_points(c.field, Control::zero(c.grid, c.field.noise_modes(), 1), {c.event.probe});
  const auto a = static_cast<std::size_t>(c.event.axis);
  return end[0][a] - c.event.probe[a];
}

// The one-sided version of the event a minimizer can aim at. Two-sided events are approached from above.
std::pair<double, Constraint> event_bound(const ExperimentConfig& c, double reference) {
  if (c.event.direction == Direction::below) return {reference - c.event.threshold, Constraint::at_most};
  return {reference + c.event.threshold, Constraint::at_least};
}

json rate_summary(const RateResult& r) { return json::parse(to_json(r)); }

int rate_flow(const ExperimentConfig& c, ArtifactWriter& out, std::ostream& log) {
  if (c.event.observable != Observable::flow_probe_displacement)
    config_error(c, "event.observable", "rate-flow needs flow_probe_displacement");
  const double reference = flow_reference(c);
  const auto [bound, constraint] = event_bound(c, reference);
  FlowTarget target;
  target.probes = {c.event.probe};
  Point goal = c.event.probe;
  goal[static_cast<std::size_t>(c.event.axis)] += bound;
  target.targets = {goal};
  target.constraint = constraint;
  target.axis = c.event.axis;

  RateOptions opts = c.rate;
  opts.threads = c.threads;
  const RateResult r = minimize_rate_flow(target, c.field, c.grid, opts);
  json j = rate_summary(r);
  j["target"] = {{"probe", {c.event.probe[0], c.event.probe[1]}},
                 {"axis", c.event.axis},
                 {"reference", reference},
                 {"displacement", bound},
                 {"constraint", to_string(constraint)}};
  out.write("rate_flow.json", j.dump(2));
  out.write("control.csv", control_csv(r.control));
  log << "rate-flow cost " << r.cost << (r.converged ? "" : " (non-converged)") << "\n";
  return 0;
}

int rate_ac(const ExperimentConfig& c, ArtifactWriter& out, std::ostream& log) {
  SolveOptions final_only;
  final_only.full_trajectory = false;
  const PhaseField free = solve_controlled(c.field, Control::zero(c.grid, c.field.noise_modes(), c.rate.segments),
                                           c.lattice, c.u0, final_only);
  PhaseTarget target;
  json description;
  if (c.ac_target == "deterministic") {
    target.kind = PhaseTarget::Kind::field;
    const auto last = free.final_slice();
    target.field.assign(last.begin(), last.end());
    description = {{"kind", "deterministic endpoint"}};
  } else {
    if (c.event.observable != Observable::interface_position && c.event.observable != Observable::probe_value)
      config_error(c, "event.observable", "rate-ac needs interface_position or probe_value");
    target.kind = PhaseTarget::Kind::observable;
    target.observable = c.event.observable;
    target.probe = c.event.probe;
    target.axis = c.event.axis;
    double reference = 0.0;
    if (c.event.reference) {
      reference = *c.event.reference;
    } else if (c.event.observable == Observable::interface_position) {
      reference = interface_position(c.lattice, free.final_slice(), c.event.axis);
    } else {
      reference = LatticeSpline(c.lattice, free.final_slice()).value(c.event.probe);
    }
    const auto [bound, constraint] = event_bound(c, reference);
    target.value = bound;
    target.constraint = constraint;
    description = {{"kind", "observable"},
                   {"observable", to_string(c.event.observable)},
                   {"reference", reference},
                   {"value", bound},
                   {"constraint", to_string(constraint)}};
  }

  RateOptions opts = c.rate;
  opts.threads = c.threads;
  const RateResult r = minimize_rate_ac(target, c.field, c.lattice, c.grid, c.u0, opts);
  json j = rate_summary(r);
  j["target"] = description;
  out.write("rate_ac.json", j.dump(2));
  out.write("control.csv", control_csv(r.control));
  const PhaseField controlled = solve_controlled(c.field, r.control, c.lattice, c.u0);
  out.write("phase_controlled.csv", csv_of(controlled));
  log << "rate-ac cost " << r.cost << (r.converged ? "" : " (non-converged)") << "\n";
  return 0;
}

int mc_scan(const ExperimentConfig& c, ArtifactWriter& out, std::ostream& log) {
  ScanOptions opts;
  opts.route = c.route;
  opts.threads = c.threads;
  const ScanTable table = mc_probability_scan(c.event, c.field, c.lattice, c.grid, c.u0, c.ladder, c.samples, c.seed, opts);
  out.write("scan.csv", csv_of(table));
  out.write("scan.json", to_json(table));
  for (const ScanRow& r : table.rows)
    log << "sigma " << r.sigma << ": " << r.hits << "/" << r.samples << " hits, sigma log p " << r.sigma_log_p
        << (r.lower_bound_only ? " (no hits)" : "") << "\n";
  return 0;
}

int report(const ExperimentConfig& c, ArtifactWriter& out, std::ostream& log, const ReportInputs& in) {
  const std::filesystem::path dir(c.output_dir);
  const std::string scan_path = in.scan_path.value_or((dir / "scan.json").string());
  const std::string default_rate =
      c.event.observable == Observable::flow_probe_displacement ? "rate_flow.json" : "rate_ac.json";
  const std::string rate_path = in.rate_path.value_or((dir / default_rate).string());
  const ScanTable scan = std::filesystem::exists(scan_path) || in.scan_path ? scan_from_json(read_text(scan_path)) : ScanTable{};
  const RateResult rate = rate_from_json(read_text(rate_path));
  const std::string text = ldp_report(scan, rate);
  out.write("report.json", text);
  log << text << "\n";
  return 0;
}

int verify(const ExperimentConfig& c, ArtifactWriter& out, std::ostream& log) {
  const auto checks = run_invariant_suite(c);
  int failed = 0;
  for (const CheckResult& r : checks) {
    log << (r.passed ? "PASS " : "FAIL ") << r.module << "/" << r.name << "  value=" << r.value << " bound=" << r.bound;
    if (!r.note.empty()) log << "  (" << r.note << ")";
    log << "\n";
    failed += r.passed ? 0 : 1;
  }
  log << checks.size() - static_cast<std::size_t>(failed) << "/" << checks.size() << " invariants hold\n";
  out.write("verify.json", to_json(checks));
  return failed == 0 ? 0 : 1;
}

int grr(const ExperimentConfig& c, ArtifactWriter& out, std::ostream& log) {
  const int modes = c.field.noise_modes();
  std::vector<StateSeries> ensemble(c.grr.ensemble);
  std::vector<double> seminorm(c.grr.ensemble), rhs(c.grr.ensemble);
  const StateNorm norm;
  parallel_for(c.grr.ensemble, c.threads, [&](std::size_t i) {
    // unit-intensity Brownian field coefficients B_l(t)
    const FieldPath path = sample_path(c.field, c.grid, 1.0, derive_seed(c.seed, "grr-path", i));
    StateSeries s;
    s.width = static_cast<std::size_t>(modes);
    std::vector<double> b(s.width, 0.0);
    s.push(0.0, b);
    for (int m = 0; m < c.grid.steps(); ++m) {
      for (int l = 1; l <= modes; ++l) b[static_cast<std::size_t>(l - 1)] += path.increment(m, l);
      s.push(c.grid.time(m + 1), b);
    }
    seminorm[i] = holder_seminorm(s, norm, c.grr.alpha).seminorm;
    rhs[i] = grr_rhs(s, norm, c.grr.alpha, c.grr.p);
    ensemble[i] = std::move(s);
  });
  double constant = 0.0;
  for (std::size_t i = 0; i < seminorm.size(); ++i)
    if (rhs[i] > 0.0) constant = std::max(constant, seminorm[i] / rhs[i]);
  const MomentHolderReport moments = moment_holder_check(ensemble, norm, c.grr.p, c.grr.q);

  // coefficient regularity of one flow at the configured noise level
  const FieldPath path = sample_path(c.field, c.grid, c.sigma, derive_seed(c.seed, "simulate"));
  const FlowPath flow = integrate_stratonovich(c.field, path, c.lattice);
  const CoefficientField coeffs = build_coefficients(flow, invert_flow(flow));

  json j{{"alpha", c.grr.alpha},
         {"p", c.grr.p},
         {"q", c.grr.q},
         {"ensemble", c.grr.ensemble},
         {"holder_seminorm", seminorm},
         {"grr_rhs", rhs},
         {"ensemble_constant", constant},
         {"moment_check", json::parse(to_json(moments))},
         {"coefficients", json::parse(to_json(coefficient_holder_report(coeffs, c.grr.alpha)))}};
  out.write("grr.json", j.dump(2));
  log << "GRR ensemble constant " << constant << ", moment slope " << moments.slope << " (expected "
      << moments.expected_slope << ")\n";
  return 0;
}

}  // namespace

ArtifactWriter::ArtifactWriter(std::string directory) : directory_(std::move(directory)) {
  std::error_code ec;
  std::filesystem::create_directories(directory_, ec);
  if (ec) throw Error("cannot create output directory '" + directory_ + "': " + ec.message());
}

void ArtifactWriter::write(const std::string& name, const std::string& contents) {
  write_file_atomic((std::filesystem::path(directory_) / name).string(), contents);
  entries_.push_back({name, contents.size(), hex64(fnv1a(contents))});
}

void ArtifactWriter::finish(const ExperimentConfig& config, const std::string& subcommand) {
  json artifacts = json::array();
  for (const Entry& e : entries_) artifacts.push_back({{"name", e.name}, {"bytes", e.bytes}, {"fnv1a", e.checksum}});
  const json manifest{{"subcommand", subcommand},
                      {"config_hash", config_hash(config)},
                      {"seed", config.seed},
                      {"route", to_string(config.route)},
                      {"versions", json::parse(build_info_json())},
                      {"config", canonical_text(config)},
                      {"artifacts", artifacts}};
  write_file_atomic((std::filesystem::path(directory_) / "manifest.json").string(), manifest.dump(2));
}

int run(const ExperimentConfig& config, const std::string& subcommand, std::ostream& log, const ReportInputs& inputs) {
  ArtifactWriter out(config.output_dir);
  int status = 0;
  if (subcommand == "simulate") {
    status = simulate(config, out, log);
  } else if (subcommand == "rate-flow") {
    status = rate_flow(config, out, log);
  } else if (subcommand == "rate-ac") {
    status = rate_ac(config, out, log);
  } else if (subcommand == "mc-scan") {
    status = mc_scan(config, out, log);
  } else if (subcommand == "report") {
    status = report(config, out, log, inputs);
  } else if (subcommand == "verify") {
    status = verify(config, out, log);
  } else if (subcommand == "grr") {
    status = grr(config, out, log);
  } else {
    throw ParameterError("unknown subcommand '" + subcommand + "'");
  }
  out.finish(config, subcommand);
  return status;
}

}  // namespace sacflow::app
