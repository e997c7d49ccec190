// Acceptance checks. Each criterion prints one PASS or FAIL line with the measured quantities.
// Usage: sacflow_acceptance [--only N]
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "sacflow/analysis.hpp"
#include "sacflow/field.hpp"
#include "sacflow/flow.hpp"
#include "sacflow/ldp.hpp"
#include "sacflow/pde.hpp"
#include "sacflow/rng.hpp"
#include "sacflow/transform.hpp"

using namespace sacflow;

namespace {

constexpr std::uint64_t kSeed = 20261019;

// Desk-scale defaults shared by most criteria.
constexpr double kHorizon = 0.1;
constexpr int kSteps = 1000;
constexpr int kCells = 128;
constexpr int kModes = 8;
constexpr double kAmplitude = 0.5;
constexpr int kEnsemble = 100;

// Pinned tolerances.
constexpr double kRatioLo = 1.4, kRatioHi = 3.0;
constexpr double kChainTol = 1e-4;
constexpr double kMaxPrincipleTol = 1e-3;
constexpr double kRouteAbsTol = 5e-2;
constexpr double kConstantModeTol = 10.0;  // multiples of dt
constexpr double kCorrectionRelTol = 0.20;
constexpr double kRateRelTol = 0.05;
constexpr double kExtrapolationRelTol = 0.15;
constexpr double kAcRelTol = 0.25;
constexpr std::size_t kMinHits = 30;
constexpr double kZeroControlCost = 1e-6;
constexpr double kGrrConstant = 100.0;
constexpr double kSlopeRelTol = 0.10;
constexpr double kContinuitySpread = 2.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof buf, f, args);
  va_end(args);
  return buf;
}

Box unit_box() {
  Box b;
  b.dim = 1;
  return b;
}

Lattice line(int cells) { return Lattice(unit_box(), {cells, 0}); }

ModeSet default_field() { return ModeSet::sine_law(unit_box(), kModes, kAmplitude); }

ModeSet plateau(double c) {
  std::vector<Mode> modes(2);
  modes[1] = Mode{ModeShape::plateau, c, 0, {1, 1}};
  return ModeSet(unit_box(), 0.0, modes, 0.5);
}

InitialData front() { return InitialData::tanh_profile(0.5, 0.05); }

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

double sup_diff(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

bool in_band(double ratio) { return ratio >= kRatioLo && ratio <= kRatioHi; }

FieldPath default_path(std::uint64_t index, double sigma) {
  return sample_path(default_field(), TimeGrid(kHorizon, kSteps), sigma, derive_seed(kSeed, "ensemble", index));
}

Outcome cocycle() {
  const auto start = std::chrono::steady_clock::now();
  const ModeSet spec = default_field();
  const Lattice lat = line(kCells);
  FieldPath path = sample_path(spec, TimeGrid(kHorizon, kSteps), 0.1, derive_seed(kSeed, "cocycle"));
  std::vector<double> defect;
  for (int level = 0; level < 3; ++level) {
    defect.push_back(cocycle_defect(spec, path, lat, 0.0, kHorizon / 2, kHorizon));
    if (level < 2) path = refine_path(path, derive_seed(kSeed, "cocycle-refine", static_cast<std::uint64_t>(level)));
  }
  const double r1 = defect[0] / defect[1], r2 = defect[1] / defect[2];
  const double elapsed = seconds_since(start);
  return {in_band(r1) && in_band(r2) && elapsed < 30.0,
          fmt("defects %.3e %.3e %.3e, ratios %.3f %.3f (band [%.1f, %.1f]), %.1f s", defect[0], defect[1], defect[2],
              r1, r2, kRatioLo, kRatioHi, elapsed)};
}

Outcome boundary_identity() {
  const Lattice lat = line(kCells);
  std::size_t violations = 0, checked = 0;
  const auto scan = [&](const FlowPath& f) {
    for (int m = 0; m <= f.grid().steps(); ++m)
      for (std::size_t j = 0; j < lat.size(); ++j) {
        if (!lat.on_boundary_ring(j)) continue;
        ++checked;
        if (f.position(m, j)[0] != lat.node(j)[0]) ++violations;
      }
  };
  for (int k = 0; k < kEnsemble; ++k) {
    const FieldPath path = default_path(static_cast<std::uint64_t>(k), 0.1);
    const FlowPath strat = integrate_stratonovich(default_field(), path, lat);
    scan(strat);
    scan(integrate_ito(default_field(), path, lat));
    scan(invert_flow(strat));
  }
  return {violations == 0, fmt("%zu of %zu ring positions moved (Stratonovich, Ito and inverse flows, %d paths)",
                               violations, checked, kEnsemble)};
}

Outcome diffeomorphism() {
  const Lattice lat = line(kCells);
  double min_det = std::numeric_limits<double>::infinity();
  double min_ellipticity = std::numeric_limits<double>::infinity();
  double chain = 0.0;
  for (int k = 0; k < kEnsemble; ++k) {
    const FlowPath flow = integrate_stratonovich(default_field(), default_path(static_cast<std::uint64_t>(k), 0.1), lat);
    const FlowPath inverse = invert_flow(flow);
    const CoefficientField coeffs = build_coefficients(flow, inverse);
    min_det = std::min(min_det, flow.min_jacobian_det());
    min_ellipticity = std::min(min_ellipticity, coeffs.ellipticity());
    for (int m = 0; m <= kSteps; ++m)
      for (std::size_t j = 0; j < lat.size(); ++j)
        chain = std::max(chain, std::abs(coeffs.R(m, j)(0, 0) - chain_rule_diffusion(flow, m, j)(0, 0)));
  }
  return {min_det > 0.0 && min_ellipticity > 0.0 && chain <= kChainTol,
          fmt("min det %.4f, min ellipticity %.4f, sup |R - chain rule| %.3e (tol %.0e)", min_det, min_ellipticity,
              chain, kChainTol)};
}

Outcome maximum_principle() {
  const Lattice lat = line(kCells);
  SolveOptions opts;
  opts.tol_max = 1.0;  // measure the excess here instead of stopping at the solver's own guard
  double worst = 0.0;
  for (int k = 0; k < kEnsemble; ++k) {
    const FlowPath flow = integrate_stratonovich(default_field(), default_path(static_cast<std::uint64_t>(k), 0.1), lat);
    const PhaseField w = solve_transformed(build_coefficients(flow, invert_flow(flow)), front(), opts);
    worst = std::max(worst, w.sup_norm());
  }
  return {worst <= 1.0 + kMaxPrincipleTol, fmt("max_t |w|_inf = %.8f over %d solves (bound 1 + %.0e)", worst,
                                                kEnsemble, kMaxPrincipleTol)};
}

double route_gap(const ModeSet& spec, const FieldPath& path, const Lattice& lat) {
  const FlowPath flow = integrate_stratonovich(spec, path, lat);
  const FlowPath inverse = invert_flow(flow);
  const PhaseField via_flow = pull_back(solve_transformed(build_coefficients(flow, inverse), front()), inverse);
  const PhaseField direct = solve_direct_spde(spec, path, lat, front());
  return sup_diff(via_flow.values(), direct.values());
}

Outcome route_equivalence() {
  const ModeSet spec = default_field();
  const FieldPath coarse = sample_path(spec, TimeGrid(kHorizon, kSteps), 0.05, derive_seed(kSeed, "routes"));
  const FieldPath fine = refine_path(coarse, derive_seed(kSeed, "routes-refine"));
  const double a = route_gap(spec, coarse, line(kCells));
  const double b = route_gap(spec, fine, line(2 * kCells));
  return {in_band(a / b) && a <= kRouteAbsTol,
          fmt("sigma 0.05: gap %.3e at dx 1/%d, %.3e at dx 1/%d, ratio %.3f (band [%.1f, %.1f], abs tol %.0e)", a,
              kCells, b, 2 * kCells, a / b, kRatioLo, kRatioHi, kRouteAbsTol)};
}

Outcome ito_correction() {
  const TimeGrid grid(kHorizon, kSteps);
  const double sigma = 0.1, dt = grid.dt();

  // constant mode: the correction vanishes on the plateau
  const ModeSet flat = plateau(kAmplitude);
  std::vector<Point> probes;
  for (int i = 0; i <= 20; ++i) probes.push_back({0.4 + 0.01 * i, 0.0});
  double flat_gap = 0.0;
  for (int k = 0; k < kEnsemble; ++k) {
    const FieldPath path = sample_path(flat, grid, sigma, derive_seed(kSeed, "ito-flat", static_cast<std::uint64_t>(k)));
    const auto s = integrate_points(flat, path, probes, FlowKind::stratonovich, 0, kSteps);
    const auto i = integrate_points(flat, path, probes, FlowKind::ito, 0, kSteps);
    for (std::size_t p = 0; p < probes.size(); ++p) flat_gap = std::max(flat_gap, std::abs(s[p][0] - i[p][0]));
  }

  // one sine mode: mean Ito - Stratonovich gap against the integrated correction drift
  const ModeSet bump = ModeSet::sine_law(unit_box(), 1, kAmplitude);
  const Lattice lat = line(kCells);
  const std::size_t node = 40;  // x = 0.3125, where X X' is large
  double gap = 0.0, drift = 0.0;
  constexpr int kBumpPaths = 200;
  for (int k = 0; k < kBumpPaths; ++k) {
    const FieldPath path = sample_path(bump, grid, sigma, derive_seed(kSeed, "ito-bump", static_cast<std::uint64_t>(k)));
    const FlowPath s = integrate_stratonovich(bump, path, lat);
    const FlowPath i = integrate_ito(bump, path, lat);
    gap += i.position(kSteps, node)[0] - s.position(kSteps, node)[0];
    for (int m = 0; m < kSteps; ++m) drift += sigma * stratonovich_correction(bump, grid.time(m), s.position(m, node))[0] * dt;
  }
  gap /= kBumpPaths;
  drift /= kBumpPaths;
  const double rel = std::abs(gap - drift) / std::abs(drift);
  return {flat_gap <= kConstantModeTol * dt && rel <= kCorrectionRelTol,
          fmt("plateau gap %.3e (tol %.0e); sine mode mean gap %.4e vs integrated drift %.4e, rel %.3f (tol %.2f)",
              flat_gap, kConstantModeTol * dt, gap, drift, rel, kCorrectionRelTol)};
}

// Linear fit of sigma log p over the two smallest-sigma rows with hits, evaluated at sigma = 0.
double intercept(const ScanTable& scan) {
  std::vector<const ScanRow*> rows;
  for (const ScanRow& r : scan.rows)
    if (r.hits > 0) rows.push_back(&r);
  if (rows.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const ScanRow& a = *rows[rows.size() - 2];
  const ScanRow& b = *rows[rows.size() - 1];
  const double slope = (a.sigma_log_p - b.sigma_log_p) / (a.sigma - b.sigma);
  return b.sigma_log_p - slope * b.sigma;
}

Outcome gaussian_rate() {
  const auto start = std::chrono::steady_clock::now();
  const double c = 0.5, d = 0.1;
  const double exact = d * d / (2 * c * c * kHorizon);
  const ModeSet spec = plateau(c);
  const TimeGrid grid(kHorizon, kSteps);

  FlowTarget target;
  target.probes = {{0.5, 0}};
  target.targets = {{0.5 + d, 0}};
  const RateResult rate = minimize_rate_flow(target, spec, grid);
  const double rate_rel = std::abs(rate.cost - exact) / exact;

  EventSpec e;
  e.observable = Observable::flow_probe_displacement;
  e.probe = {0.5, 0};
  e.threshold = d;
  e.direction = Direction::two_sided;
  const ScanTable scan =
      mc_probability_scan(e, spec, line(64), grid, InitialData::constant(0.0), {0.2, 0.1, 0.05}, 10000, kSeed);
  const double b = intercept(scan);
  const double fit_rel = std::abs(b + exact) / exact;
  const double elapsed = seconds_since(start);
  return {rate_rel <= kRateRelTol && fit_rel <= kExtrapolationRelTol && elapsed < 300.0,
          fmt("rate %.5f vs %.5f (rel %.4f, tol %.2f); intercept %.5f vs %.5f (rel %.4f, tol %.2f); %.1f s", rate.cost,
              exact, rate_rel, kRateRelTol, b, -exact, fit_rel, kExtrapolationRelTol, elapsed)};
}

Outcome ac_rate() {
  const double c = 1.0, T = 0.02, d = 0.12;
  const ModeSet spec = plateau(c);
  const Lattice lat = line(64);
  const TimeGrid grid(T, 400);
  const PhaseField free = solve_controlled(spec, Control::zero(grid, 1, 1), lat, front());
  const double reference = interface_position(lat, free.final_slice());

  PhaseTarget still;
  still.field.assign(free.final_slice().begin(), free.final_slice().end());
  const double zero_cost = minimize_rate_ac(still, spec, lat, grid, front()).cost;

  RateOptions opts;
  opts.segments = 4;
  PhaseTarget shifted;
  shifted.kind = PhaseTarget::Kind::observable;
  shifted.observable = Observable::interface_position;
  shifted.value = reference + d;
  shifted.constraint = Constraint::at_least;
  const RateResult rate = minimize_rate_ac(shifted, spec, lat, grid, front(), opts);

  EventSpec e;
  e.observable = Observable::interface_position;
  e.threshold = d;
  e.direction = Direction::two_sided;
  ScanOptions scan_opts;
  scan_opts.route = Route::direct;
  const ScanTable scan = mc_probability_scan(e, spec, lat, grid, front(), {0.1, 0.05}, 300000, kSeed, scan_opts);

  const ScanRow* chosen = nullptr;
  for (const ScanRow& r : scan.rows)
    if (r.hits >= kMinHits) chosen = &r;
  if (chosen == nullptr) return {false, fmt("no rung with %zu hits; zero-control cost %.2e", kMinHits, zero_cost)};
  const double rel = std::abs(chosen->sigma_log_p + rate.cost) / rate.cost;
  return {rel <= kAcRelTol && zero_cost <= kZeroControlCost,
          fmt("sigma %.3f: %zu hits, sigma log p %.5f vs -cost %.5f (rel %.4f, tol %.2f); zero-control cost %.2e", chosen->sigma,
              chosen->hits, chosen->sigma_log_p, -rate.cost, rel, kAcRelTol, zero_cost)};
}

StateSeries running_sum(const FieldPath& p) {
  StateSeries s;
  double w = 0.0;
  s.push(0.0, std::vector<double>{w});
  for (int m = 0; m < p.grid().steps(); ++m) {
    w += p.increment(m, 1);
    s.push(p.grid().time(m + 1), std::vector<double>{w});
  }
  return s;
}

Outcome grr() {
  const StateNorm sup{};
  const double alpha = 0.4, p = 8.0;
  std::vector<StateSeries> ensemble;
  double constant = 0.0;
  for (int k = 0; k < kEnsemble; ++k) {
    ensemble.push_back(running_sum(
        sample_path(plateau(1.0), TimeGrid(1.0, 256), 1.0, derive_seed(kSeed, "grr", static_cast<std::uint64_t>(k)))));
    constant = std::max(constant, holder_seminorm(ensemble.back(), sup, alpha).seminorm / grr_rhs(ensemble.back(), sup, alpha, p));
  }
  const MomentHolderReport m = moment_holder_check(ensemble, sup, p, 1.0);
  const double rel = std::abs(m.slope - m.expected_slope) / m.expected_slope;
  return {constant <= kGrrConstant && rel <= kSlopeRelTol,
          fmt("ensemble constant %.3f (limit %.0f); moment slope %.4f vs %.1f (rel %.4f, tol %.2f)", constant,
              kGrrConstant, m.slope, m.expected_slope, rel, kSlopeRelTol)};
}

Outcome continuity() {
  const auto start = std::chrono::steady_clock::now();
  const ModeSet spec = default_field();
  const Lattice lat = line(kCells);
  const TimeGrid grid(kHorizon, kSteps);
  constexpr int kSegments = 10;
  const Control base = Control::constant(grid, kModes, kSegments, 1, 1.0);
  const auto solve = [&](double delta) {
    Control f = base;
    for (int s = 0; s < kSegments; ++s)
      for (int l = 1; l <= kModes; ++l) f.coefficient(s, l) += delta * std::cos(0.7 * s + l);
    const FlowPath flow = integrate_controlled(spec, f, lat);
    return solve_transformed(build_coefficients(flow, invert_flow(flow)), front());
  };
  const PhaseField w0 = solve(0.0);
  std::vector<double> K;
  for (double delta : {1e-2, 1e-3}) K.push_back(sup_diff(solve(delta).values(), w0.values()) / delta);
  const double spread = std::max(K[0], K[1]) / std::min(K[0], K[1]);
  const double elapsed = seconds_since(start);
  const bool finite = std::isfinite(K[0]) && std::isfinite(K[1]) && K[0] > 0.0 && K[1] > 0.0;
  return {finite && spread <= kContinuitySpread && elapsed < 60.0,
          fmt("K(1e-2) %.4f, K(1e-3) %.4f, spread %.3f (limit %.1f), %.1f s", K[0], K[1], spread, kContinuitySpread,
              elapsed)};
}

struct Criterion {
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {"flow cocycle defect halves with the time step", cocycle},
      {"boundary ring stays fixed", boundary_identity},
      {"diffeomorphism and coefficient ellipticity", diffeomorphism},
      {"maximum principle for the transformed equation", maximum_principle},
      {"direct and transformed routes converge", route_equivalence},
      {"Ito and Stratonovich flows differ by the correction drift", ito_correction},
      {"Gaussian toy rate and scan extrapolation", gaussian_rate},
      {"Allen-Cahn rate against the Monte Carlo scan", ac_rate},
      {"Garsia-Rodemich-Rumsey bound and moment scaling", grr},
      {"continuity of the transformed solution in the flow", continuity},
  };

  int only = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--only" && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: %s [--only N]\n", argv[0]);
      return 2;
    }
  }
  if (only < 0 || only > static_cast<int>(criteria.size())) {
    std::fprintf(stderr, "criterion must be in 1..%zu\n", criteria.size());
    return 2;
  }

  int failures = 0;
  for (std::size_t n = 1; n <= criteria.size(); ++n) {
    if (only != 0 && static_cast<int>(n) != only) continue;
    Outcome o;
    try {
      o = criteria[n - 1].run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    std::printf("%s criterion %zu: %s: %s\n", o.pass ? "PASS" : "FAIL", n, criteria[n - 1].name, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
