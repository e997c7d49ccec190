#include "sacflow_app/config.hpp"

#include <cmath>
#include <cstdio>
#include <map>

#include "sacflow/error.hpp"
#include "sacflow/rng.hpp"

namespace sacflow::app {

namespace {

[[noreturn]] void fail(const KeyValueText& kv, const std::string& key, const std::string& message) {
  throw ConfigError(key + ": " + message, kv.line_of(key), key);
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Number of whole pieces of length `piece` in `total`, or -1 if it does not divide.
long divides(double total, double piece) {
  if (!(piece > 0.0)) return -1;
  const double ratio = total / piece;
  const double n = std::round(ratio);
  if (n < 1.0 || std::abs(ratio - n) > 1e-9 * std::max(1.0, n)) return -1;
  return static_cast<long>(n);
}

Point read_point(const KeyValueText& kv, const std::string& key, int dim, const Point& fallback) {
  if (!kv.has(key)) return fallback;
  const auto v = kv.numbers(key, {});
  if (v.size() != static_cast<std::size_t>(dim)) fail(kv, key, "expects " + std::to_string(dim) + " component(s)");
  Point p{0.0, 0.0};
  for (std::size_t a = 0; a < v.size(); ++a) p[a] = v[a];
  return p;
}

template <typename Enum, typename Parse>
Enum read_enum(const KeyValueText& kv, const std::string& key, const std::string& fallback, Parse parse) {
  try {
    return parse(kv.word(key, fallback));
  } catch (const ParameterError& e) {
    fail(kv, key, e.what());
  }
}

int read_axis(const KeyValueText& kv, const std::string& key, int dim) {
  const long axis = kv.integer(key, 0);
  if (axis < 0 || axis >= dim) fail(kv, key, "axis must be in [0, " + std::to_string(dim - 1) + "]");
  return static_cast<int>(axis);
}

}  // namespace

ExperimentConfig load_config(KeyValueText kv, const Overrides& overrides) {
  ExperimentConfig c;
  c.field = ModeSet::from_config(kv);
  const Box& box = c.field.box();
  const int dim = box.dim;

  // grid
  const double horizon = kv.number("grid.T", 0.1);
  if (!(horizon > 0.0)) fail(kv, "grid.T", "must be positive");
  const double dt = kv.number("grid.dt", 1e-4);
  const long steps = divides(horizon, dt);
  if (steps < 1) fail(kv, "grid.dt", "must be positive and divide grid.T into whole steps");
  c.grid = TimeGrid(horizon, static_cast<int>(steps));

  auto dx = kv.numbers("grid.dx", {1.0 / 128.0});
  if (dx.size() == 1 && dim == 2) dx.push_back(dx[0]);
  if (dx.size() != static_cast<std::size_t>(dim)) fail(kv, "grid.dx", "expects 1 or " + std::to_string(dim) + " values");
  std::array<int, 2> cells{1, 0};
  for (int a = 0; a < dim; ++a) {
    const long n = divides(box.edge(a), dx[static_cast<std::size_t>(a)]);
    if (n < 2) fail(kv, "grid.dx", "must divide every box edge into at least 2 cells");
    cells[static_cast<std::size_t>(a)] = static_cast<int>(n);
  }
  c.lattice = Lattice(box, cells);

  // noise
  c.sigma = kv.number("sigma", 0.1);
  if (!(c.sigma >= 0.0)) fail(kv, "sigma", "must be non-negative");
  c.ladder = kv.numbers("sigma.ladder", {0.2, 0.1, 0.05});
  if (c.ladder.empty()) fail(kv, "sigma.ladder", "must list at least one value");
  for (std::size_t i = 0; i < c.ladder.size(); ++i) {
    if (!(c.ladder[i] > 0.0)) fail(kv, "sigma.ladder", "values must be positive");
    if (i > 0 && !(c.ladder[i] < c.ladder[i - 1])) fail(kv, "sigma.ladder", "values must be strictly decreasing");
  }
  const long samples = kv.integer("mc.samples", 1000);
  if (samples < 100) fail(kv, "mc.samples", "needs at least 100 samples");
  c.samples = static_cast<std::size_t>(samples);

  // event
  Point center{0.0, 0.0};
  for (int a = 0; a < dim; ++a) center[static_cast<std::size_t>(a)] = 0.5 * (box.lo[static_cast<std::size_t>(a)] + box.hi[static_cast<std::size_t>(a)]);
  c.event.observable = read_enum<Observable>(kv, "event.observable", "interface_position", parse_observable);
  c.event.probe = read_point(kv, "event.probe", dim, center);
  if (!box.contains(c.event.probe)) fail(kv, "event.probe", "must lie in the box");
  c.event.axis = read_axis(kv, "event.axis", dim);
  c.event.threshold = kv.number("event.threshold", 0.05);
  if (!(c.event.threshold >= 0.0)) fail(kv, "event.threshold", "must be non-negative");
  c.event.direction = read_enum<Direction>(kv, "event.direction", "two_sided", parse_direction);
  c.event.reference = kv.number("event.reference");

  // initial data
  const std::string kind = kv.word("initial.kind", "tanh");
  if (kind == "tanh") {
    const int axis = read_axis(kv, "initial.axis", dim);
    const double width = kv.number("initial.width", 0.05);
    if (!(width > 0.0)) fail(kv, "initial.width", "must be positive");
    c.u0 = InitialData::tanh_profile(kv.number("initial.center", center[static_cast<std::size_t>(axis)]), width, axis);
    if (!(c.u0.neumann_defect(box) <= kNeumannTolerance))
      fail(kv, kv.has("initial.width") ? "initial.width" : "initial.center",
           "profile is not flat at the box faces (normal derivative above 1e-6)");
  } else if (kind == "constant") {
    c.u0 = InitialData::constant(kv.number("initial.value", 0.0));
  } else {
    fail(kv, "initial.kind", "must be tanh or constant");
  }

  // optimizer
  c.rate.segments = static_cast<int>(kv.integer("rate.segments", 1));
  if (c.rate.segments < 1 || c.grid.steps() % c.rate.segments != 0)
    fail(kv, "rate.segments", "must be positive and divide the number of time steps");
  c.rate.mu0 = kv.number("rate.mu0", c.rate.mu0);
  if (!(c.rate.mu0 > 0.0)) fail(kv, "rate.mu0", "must be positive");
  c.rate.mu_factor = kv.number("rate.mu_factor", c.rate.mu_factor);
  if (!(c.rate.mu_factor >= 1.0)) fail(kv, "rate.mu_factor", "must be at least 1");
  c.rate.stages = static_cast<int>(kv.integer("rate.stages", c.rate.stages));
  if (c.rate.stages < 1) fail(kv, "rate.stages", "must be positive");
  c.rate.max_iterations = static_cast<int>(kv.integer("rate.max_iterations", c.rate.max_iterations));
  if (c.rate.max_iterations < 1) fail(kv, "rate.max_iterations", "must be positive");
  c.rate.gradient_step = kv.number("rate.gradient_step", c.rate.gradient_step);
  if (!(c.rate.gradient_step > 0.0)) fail(kv, "rate.gradient_step", "must be positive");
  c.rate.gradient_tolerance = kv.number("rate.gradient_tolerance", c.rate.gradient_tolerance);
  if (!(c.rate.gradient_tolerance > 0.0)) fail(kv, "rate.gradient_tolerance", "must be positive");
  c.ac_target = kv.word("rate.ac.target", "event");
  if (c.ac_target != "event" && c.ac_target != "deterministic") fail(kv, "rate.ac.target", "must be event or deterministic");

  // diagnostics
  c.grr.alpha = kv.number("grr.alpha", c.grr.alpha);
  if (!(c.grr.alpha > 0.0 && c.grr.alpha < 1.0)) fail(kv, "grr.alpha", "must lie in (0, 1)");
  c.grr.p = kv.number("grr.p", c.grr.p);
  if (!(c.grr.p >= 1.0)) fail(kv, "grr.p", "must be at least 1");
  c.grr.q = kv.number("grr.q", c.grr.q);
  if (!(c.grr.q > 0.0)) fail(kv, "grr.q", "must be positive");
  const long ensemble = kv.integer("grr.ensemble", 100);
  if (ensemble < 100) fail(kv, "grr.ensemble", "needs at least 100 paths");
  c.grr.ensemble = static_cast<std::size_t>(ensemble);

  // run
  c.output_dir = kv.word("output.dir", c.output_dir);
  c.seed = kv.unsigned_integer("seed", c.seed);
  c.route = read_enum<Route>(kv, "route", "flow", parse_route);

  kv.reject_unknown();
  for (const std::string& k : kv.keys_with_prefix("")) c.key_lines[k] = kv.line_of(k);

  if (overrides.seed) c.seed = *overrides.seed;
  if (overrides.output_dir) c.output_dir = *overrides.output_dir;
  if (overrides.threads) {
    if (*overrides.threads < 1) throw ConfigError("--threads must be at least 1", 0, "threads");
    c.threads = *overrides.threads;
  }
  if (overrides.route) {
    try {
      c.route = parse_route(*overrides.route);
    } catch (const ParameterError& e) {
      throw ConfigError(std::string("--route: ") + e.what(), 0, "route");
    }
  }
  return c;
}

void config_error(const ExperimentConfig& config, const std::string& key, const std::string& message) {
  const auto it = config.key_lines.find(key);
  throw ConfigError(key + ": " + message, it == config.key_lines.end() ? 0 : it->second, key);
}

std::string canonical_text(const ExperimentConfig& c) {
  std::map<std::string, std::string> kv;
  const auto list = [](const auto& values) {
    std::string s;
    for (const double v : values) s += (s.empty() ? "" : " ") + num(v);
    return s;
  };
  const ModeSet& f = c.field;
  const int dim = f.dim();
  kv["field.dim"] = std::to_string(dim);
  kv["field.box.lo"] = list(std::vector<double>(f.box().lo.begin(), f.box().lo.begin() + dim));
  kv["field.box.hi"] = list(std::vector<double>(f.box().hi.begin(), f.box().hi.begin() + dim));
  kv["field.margin"] = num(f.margin());
  kv["field.plateau_inner"] = num(f.plateau_inner());
  kv["field.modulation"] = num(f.modulation().amplitude) + " " + num(f.modulation().frequency);
  for (int l = 0; l <= f.noise_modes(); ++l) {
    const Mode& m = f.mode(l);
    kv["field.mode." + std::to_string(l)] = to_string(m.shape) + " " + num(m.amplitude) + " " +
                                            std::to_string(m.component) + " " + std::to_string(m.wave[0]) + " " +
                                            std::to_string(m.wave[1]);
  }
  kv["grid.T"] = num(c.grid.horizon());
  kv["grid.steps"] = std::to_string(c.grid.steps());
  kv["grid.cells"] = std::to_string(c.lattice.cells(0)) + (dim == 2 ? " " + std::to_string(c.lattice.cells(1)) : "");
  kv["sigma"] = num(c.sigma);
  kv["sigma.ladder"] = list(c.ladder);
  kv["mc.samples"] = std::to_string(c.samples);
  kv["event.observable"] = to_string(c.event.observable);
  kv["event.probe"] = num(c.event.probe[0]) + " " + num(c.event.probe[1]);
  kv["event.axis"] = std::to_string(c.event.axis);
  kv["event.threshold"] = num(c.event.threshold);
  kv["event.direction"] = to_string(c.event.direction);
  kv["event.reference"] = c.event.reference ? num(*c.event.reference) : "none";
  switch (c.u0.kind()) {
    case InitialData::Kind::tanh:
      kv["initial"] = "tanh " + num(c.u0.center()) + " " + num(c.u0.width());
      break;
    case InitialData::Kind::constant:
      kv["initial"] = "constant " + num(c.u0.center());
      break;
    case InitialData::Kind::samples:
      kv["initial"] = "samples " + list(c.u0.samples());
      break;
  }
  kv["initial.axis"] = std::to_string(c.u0.axis());
  kv["rate.segments"] = std::to_string(c.rate.segments);
  kv["rate.mu0"] = num(c.rate.mu0);
  kv["rate.mu_factor"] = num(c.rate.mu_factor);
  kv["rate.stages"] = std::to_string(c.rate.stages);
  kv["rate.max_iterations"] = std::to_string(c.rate.max_iterations);
  kv["rate.gradient_step"] = num(c.rate.gradient_step);
  kv["rate.gradient_tolerance"] = num(c.rate.gradient_tolerance);
  kv["rate.ac.target"] = c.ac_target;
  kv["grr"] = num(c.grr.alpha) + " " + num(c.grr.p) + " " + num(c.grr.q) + " " + std::to_string(c.grr.ensemble);
  kv["output.dir"] = c.output_dir;
  kv["seed"] = std::to_string(c.seed);
  kv["route"] = to_string(c.route);

  std::string out;
  for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  return out;
}

std::string config_hash(const ExperimentConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(canonical_text(config))));
  return buf;
}

}  // namespace sacflow::app
