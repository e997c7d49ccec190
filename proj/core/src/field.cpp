#include "sacflow/field.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

#include "sacflow/error.hpp"
#include "sacflow/keyvalue.hpp"
#include "sacflow/rng.hpp"

namespace sacflow {

namespace {

constexpr double kPi = std::numbers::pi;

// (1 - s^2)^4 and its derivative in s
double bump(double s, double& ds) {
  const double q = 1.0 - s * s;
  const double q3 = q * q * q;
  ds = -8.0 * s * q3;
  return q3 * q;
}

double cutoff_kernel(double r) { return r > 0.0 ? std::exp(-1.0 / r) : 0.0; }

// Smooth plateau: 1 for |s| <= inner, C-infinity decay to 0 at |s| = 1.
double plateau(double s, double inner, double& ds) {
  const double a = std::abs(s);
  ds = 0.0;
  if (a <= inner) return 1.0;
  if (a >= 1.0) return 0.0;
  const double w = 1.0 - inner;
  const double r = (a - inner) / w;
  const double g1 = cutoff_kernel(1.0 - r), g0 = cutoff_kernel(r);
  const double d = g1 + g0;
  // g'(r) = g(r) / r^2
  const double dg1 = 1.0 - r > 0.0 ? -g1 / ((1.0 - r) * (1.0 - r)) : 0.0;  // d/dr g(1-r)
  const double dg0 = r > 0.0 ? g0 / (r * r) : 0.0;
  const double dh_dr = (dg1 * d - g1 * (dg1 + dg0)) / (d * d);
  ds = dh_dr * (s > 0 ? 1.0 : -1.0) / w;
  return g1 / d;
}

}  // namespace

std::string to_string(ModeShape shape) {
  switch (shape) {
    case ModeShape::zero: return "zero";
    case ModeShape::sine: return "sine";
    case ModeShape::plateau: return "plateau";
    case ModeShape::linear: return "linear";
  }
  return "zero";
}

ModeShape parse_mode_shape(const std::string& name) {
  if (name == "zero") return ModeShape::zero;
  if (name == "sine") return ModeShape::sine;
  if (name == "plateau") return ModeShape::plateau;
  if (name == "linear") return ModeShape::linear;
  throw ParameterError("unknown mode shape '" + name + "'");
}

double TimeModulation::factor(double t) const {
  return amplitude == 0.0 ? 1.0 : 1.0 + amplitude * std::sin(2.0 * kPi * frequency * t);
}

ModeSet::ModeSet(const Box& box, double margin, std::vector<Mode> modes, double plateau_inner,
                 TimeModulation modulation)
    : box_(box),
      support_(box.shrunk(margin)),
      margin_(margin),
      modes_(std::move(modes)),
      plateau_inner_(plateau_inner),
      modulation_(modulation) {
  if (box.dim != 1 && box.dim != 2) throw ParameterError("mode set dimension must be 1 or 2");
  if (margin < 0.0) throw ParameterError("margin must be non-negative");
  if (modes_.size() < 2) throw ParameterError("mode set needs a drift mode and at least one noise mode (L >= 1)");
  if (!(plateau_inner >= 0.0 && plateau_inner < 1.0)) throw ParameterError("plateau_inner must lie in [0, 1)");
  for (const Mode& m : modes_)
    if (m.component < 0 || m.component >= box.dim) throw ParameterError("mode component out of range");
  all_sine_law_ = box.dim == 1;
  for (std::size_t l = 1; l < modes_.size(); ++l)
    if (modes_[l].shape != ModeShape::sine || modes_[l].wave[0] != static_cast<int>(l)) all_sine_law_ = false;
}

ModeSet ModeSet::sine_law(const Box& box, int modes, double amplitude, double margin) {
  if (modes < 1) throw ParameterError("L must be at least 1");
  std::vector<Mode> list(static_cast<std::size_t>(modes) + 1);
  for (int l = 1; l <= modes; ++l) {
    Mode& m = list[static_cast<std::size_t>(l)];
    m.shape = ModeShape::sine;
    m.amplitude = amplitude / (static_cast<double>(l) * l);
    if (box.dim == 1) {
      m.wave = {l, 1};
    } else {
      m.component = (l - 1) % 2;
      m.wave = {(l + 1) / 2, (l + 1) / 2};
    }
  }
  return ModeSet(box, margin, std::move(list));
}

ModeSet ModeSet::from_config(const KeyValueText& kv, const std::string& prefix) {
  const auto key = [&](const std::string& k) { return prefix + k; };
  Box box;
  box.dim = static_cast<int>(kv.integer(key("dim"), 1));
  if (box.dim != 1 && box.dim != 2)
    throw ConfigError("'" + key("dim") + "' must be 1 or 2", kv.line_of(key("dim")), key("dim"));
  const auto corner = [&](const std::string& k, double fallback) {
    auto v = kv.numbers(key(k), std::vector<double>(static_cast<std::size_t>(box.dim), fallback));
    if (v.size() != static_cast<std::size_t>(box.dim))
      throw ConfigError("'" + key(k) + "' needs " + std::to_string(box.dim) + " components", kv.line_of(key(k)), key(k));
    Point p{0.0, 0.0};
    for (std::size_t a = 0; a < v.size(); ++a) p[a] = v[a];
    return p;
  };
  box.lo = corner("box.lo", 0.0);
  box.hi = corner("box.hi", 1.0);
  for (int a = 0; a < box.dim; ++a)
    if (!(box.edge(a) > 0.0)) throw ConfigError("box.hi must exceed box.lo", kv.line_of(key("box.hi")), key("box.hi"));
  const double margin = kv.number(key("margin"), 0.0);
  const long count = kv.integer(key("modes"), 8);
  if (count < 1) throw ConfigError("'" + key("modes") + "' must be >= 1", kv.line_of(key("modes")), key("modes"));
  const double amplitude = kv.number(key("amplitude"), 0.5);
  const std::string law = kv.word(key("amplitude_law"), "inverse_square");
  if (law != "inverse_square" && law != "constant")
    throw ConfigError("'" + key("amplitude_law") + "' must be inverse_square or constant",
                      kv.line_of(key("amplitude_law")), key("amplitude_law"));
  const std::string shape_name = kv.word(key("shape"), "sine");
  ModeShape shape;
  try {
    shape = parse_mode_shape(shape_name);
  } catch (const ParameterError& e) {
    throw ConfigError(e.what(), kv.line_of(key("shape")), key("shape"));
  }

  std::vector<Mode> modes(static_cast<std::size_t>(count) + 1);
  for (long l = 1; l <= count; ++l) {
    Mode& m = modes[static_cast<std::size_t>(l)];
    m.shape = shape;
    m.amplitude = law == "constant" ? amplitude : amplitude / static_cast<double>(l * l);
    if (box.dim == 1) {
      m.wave = {static_cast<int>(l), 1};
    } else {
      m.component = static_cast<int>((l - 1) % 2);
      m.wave = {static_cast<int>((l + 1) / 2), static_cast<int>((l + 1) / 2)};
    }
  }
  Mode& drift = modes[0];
  try {
    drift.shape = parse_mode_shape(kv.word(key("drift.shape"), "zero"));
  } catch (const ParameterError& e) {
    throw ConfigError(e.what(), kv.line_of(key("drift.shape")), key("drift.shape"));
  }
  drift.amplitude = kv.number(key("drift.amplitude"), 0.0);
  drift.component = static_cast<int>(kv.integer(key("drift.component"), 0));
  drift.wave = {static_cast<int>(kv.integer(key("drift.wave"), 1)), static_cast<int>(kv.integer(key("drift.wave"), 1))};

  // explicit per-mode overrides: field.mode.<l> = shape amplitude [component [w0 [w1]]]
  for (const std::string& k : kv.keys_with_prefix(key("mode."))) {
    const std::string idx = k.substr(key("mode.").size());
    char* end = nullptr;
    const long l = std::strtol(idx.c_str(), &end, 10);
    if (end == idx.c_str() || *end != '\0' || l < 0 || l > count)
      throw ConfigError("mode index out of range in '" + k + "'", kv.line_of(k), k);
    std::istringstream in(*kv.text(k));
    std::string name;
    Mode m;
    in >> name >> m.amplitude;
    if (!in) throw ConfigError("'" + k + "' expects 'shape amplitude [component [w0 [w1]]]'", kv.line_of(k), k);
    try {
      m.shape = parse_mode_shape(name);
    } catch (const ParameterError& e) {
      throw ConfigError(e.what(), kv.line_of(k), k);
    }
    m.wave = {static_cast<int>(std::max(1L, l)), static_cast<int>(std::max(1L, l))};
    if (int c; in >> c) m.component = c;
    if (int w; in >> w) m.wave = {w, w};
    if (int w; in >> w) m.wave[1] = w;
    if (m.component < 0 || m.component >= box.dim) throw ConfigError("mode component out of range", kv.line_of(k), k);
    modes[static_cast<std::size_t>(l)] = m;
  }

  TimeModulation tm{kv.number(key("modulation.amplitude"), 0.0), kv.number(key("modulation.frequency"), 0.0)};
  const double inner = kv.number(key("plateau_inner"), 0.5);
  try {
    return ModeSet(box, margin, std::move(modes), inner, tm);
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
}

ModeSet ModeSet::scaled(double factor) const {
  auto modes = modes_;
  for (std::size_t l = 1; l < modes.size(); ++l) modes[l].amplitude *= factor;
  return ModeSet(box_, margin_, std::move(modes), plateau_inner_, modulation_);
}

ModeSet ModeSet::with_drift(const Mode& drift) const {
  auto modes = modes_;
  modes[0] = drift;
  return ModeSet(box_, margin_, std::move(modes), plateau_inner_, modulation_);
}

void ModeSet::require_in_box(const Point& x) const {
  if (!box_.contains(x)) throw DomainError("point outside the enclosing box");
}

double ModeSet::shape_value(const Mode& m, const Point& x, Point* grad) const {
  if (m.shape == ModeShape::zero || m.amplitude == 0.0 || !support_.strictly_contains(x)) {
    if (grad) *grad = {0.0, 0.0};
    return 0.0;
  }
  const int n = dim();
  double f[2] = {1.0, 1.0}, df[2] = {0.0, 0.0};  // per-axis factor and d/dx_a
  for (int a = 0; a < n; ++a) {
    const auto k = static_cast<std::size_t>(a);
    const double width = support_.edge(a);
    const double xhat = (x[k] - support_.lo[k]) / width;
    const double s = 2.0 * xhat - 1.0;
    double dsv = 0.0;
    if (m.shape == ModeShape::sine) {
      const double w = m.wave[k] * kPi;
      const double env = bump(s, dsv);
      f[a] = std::sin(w * xhat) * env;
      df[a] = (w * std::cos(w * xhat) * env + std::sin(w * xhat) * dsv * 2.0) / width;
    } else {
      f[a] = plateau(s, plateau_inner_, dsv);
      df[a] = dsv * 2.0 / width;
    }
  }
  double v = m.amplitude * f[0] * f[1];
  Point g{m.amplitude * df[0] * f[1], n == 2 ? m.amplitude * f[0] * df[1] : 0.0};
  if (m.shape == ModeShape::linear) {
    const double xc = x[static_cast<std::size_t>(m.component)];
    g = {g[0] * xc, g[1] * xc};
    g[static_cast<std::size_t>(m.component)] += v;
    v *= xc;
  }
  if (grad) *grad = g;
  return v;
}

Point ModeSet::value(int l, double t, const Point& x) const {
  const Mode& m = mode(l);
  Point out{0.0, 0.0};
  out[static_cast<std::size_t>(m.component)] = modulation_.factor(t) * shape_value(m, x, nullptr);
  return out;
}

Point ModeSet::value(int l, double t, const Point& x, Matrix2& jacobian) const {
  const Mode& m = mode(l);
  Point g;
  const double tf = modulation_.factor(t);
  Point out{0.0, 0.0};
  out[static_cast<std::size_t>(m.component)] = tf * shape_value(m, x, &g);
  jacobian = Matrix2{};
  for (int k = 0; k < dim(); ++k) jacobian(m.component, k) = tf * g[static_cast<std::size_t>(k)];
  return out;
}

Point ModeSet::combination(double t, const Point& x, const double* weights, double drift_weight) const {
  Point out{0.0, 0.0};
  if (drift_weight != 0.0) {
    const Point d = value(0, t, x);
    out = {drift_weight * d[0], drift_weight * d[1]};
  }
  if (!support_.strictly_contains(x)) return out;
  const int count = noise_modes();
  if (all_sine_law_) {
    // sin(l theta) by the Chebyshev recurrence; identical shapes up to amplitude and wave number
    const double width = support_.edge(0);
    const double xhat = (x[0] - support_.lo[0]) / width;
    double dsv;
    const double env = bump(2.0 * xhat - 1.0, dsv) * modulation_.factor(t);
    const double theta = kPi * xhat;
    const double c2 = 2.0 * std::cos(theta);
    double s_prev = 0.0, s_cur = std::sin(theta), acc = 0.0;
    for (int l = 1; l <= count; ++l) {
      acc += weights[l - 1] * modes_[static_cast<std::size_t>(l)].amplitude * s_cur;
      const double s_next = c2 * s_cur - s_prev;
      s_prev = s_cur;
      s_cur = s_next;
    }
    out[0] += acc * env;
    return out;
  }
  const double tf = modulation_.factor(t);
  for (int l = 1; l <= count; ++l) {
    const Mode& m = modes_[static_cast<std::size_t>(l)];
    if (weights[l - 1] == 0.0) continue;
    out[static_cast<std::size_t>(m.component)] += weights[l - 1] * tf * shape_value(m, x, nullptr);
  }
  return out;
}

FieldPath::FieldPath(TimeGrid grid, int modes, std::vector<double> increments, double sigma, std::uint64_t seed)
    : grid_(grid), modes_(modes), increments_(std::move(increments)), sigma_(sigma), seed_(seed) {
  if (increments_.size() != static_cast<std::size_t>(grid.steps()) * static_cast<std::size_t>(modes))
    throw ParameterError("field path increment table has the wrong size");
}

void FieldPath::write_csv(std::ostream& out) const {
  out << "step,mode,increment\n";
  out.precision(17);
  for (int m = 0; m < grid_.steps(); ++m)
    for (int l = 1; l <= modes_; ++l) out << m << ',' << l << ',' << increment(m, l) << '\n';
}

Matrix2 covariance(const ModeSet& spec, double t, const Point& x, const Point& y) {
  spec.require_in_box(x);
  spec.require_in_box(y);
  Matrix2 a;
  for (int l = 1; l <= spec.noise_modes(); ++l) {
    const Point px = spec.value(l, t, x), py = spec.value(l, t, y);
    for (int i = 0; i < spec.dim(); ++i)
      for (int j = 0; j < spec.dim(); ++j) a(i, j) += px[static_cast<std::size_t>(i)] * py[static_cast<std::size_t>(j)];
  }
  return a;
}

double sup_trace_bound(const ModeSet& spec, const Lattice& lattice, const TimeGrid& grid) {
  double best = 0.0;
  for (std::size_t j = 0; j < lattice.size(); ++j) {
    const Point x = lattice.node(j);
    double integral = 0.0;
    for (int m = 0; m <= grid.steps(); ++m) {
      double s = 0.0;
      for (int l = 1; l <= spec.noise_modes(); ++l) {
        const Point v = spec.value(l, grid.time(m), x);
        s += v[0] * v[0] + v[1] * v[1];
      }
      integral += (m == 0 || m == grid.steps() ? 0.5 : 1.0) * s;
    }
    best = std::max(best, integral * grid.dt());
  }
  return best;
}

FieldPath sample_path(const ModeSet& spec, const TimeGrid& grid, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw ParameterError("sigma must be non-negative");
  const int modes = spec.noise_modes();
  std::vector<double> inc(static_cast<std::size_t>(grid.steps()) * static_cast<std::size_t>(modes), 0.0);
  if (sigma > 0.0) {
    NormalStream normal(seed);
    const double scale = std::sqrt(sigma * grid.dt());
    for (double& v : inc) v = scale * normal();
  }
  return FieldPath(grid, modes, std::move(inc), sigma, seed);
}

FieldPath refine_path(const FieldPath& path, std::uint64_t seed) {
  const TimeGrid fine = path.grid().refined();
  const auto modes = static_cast<std::size_t>(path.modes());
  std::vector<double> inc(static_cast<std::size_t>(fine.steps()) * modes, 0.0);
  NormalStream normal(seed);
  const double spread = 0.5 * std::sqrt(path.sigma() * path.grid().dt());
  for (int m = 0; m < path.grid().steps(); ++m)
    for (std::size_t l = 0; l < modes; ++l) {
      const double total = path.step_increments(m)[l];
      const double z = path.sigma() > 0.0 ? spread * normal() : 0.0;
      inc[(2 * static_cast<std::size_t>(m)) * modes + l] = 0.5 * total + z;
      inc[(2 * static_cast<std::size_t>(m) + 1) * modes + l] = 0.5 * total - z;
    }
  return FieldPath(fine, path.modes(), std::move(inc), path.sigma(), seed);
}

Point evaluate_field_increment(const ModeSet& spec, const FieldPath& path, int step, const Point& x) {
  if (step < 0 || step >= path.grid().steps()) throw IndexError("field path step " + std::to_string(step) + " out of range");
  if (path.modes() != spec.noise_modes()) throw ParameterError("field path and mode set disagree on L");
  spec.require_in_box(x);
  return spec.combination(path.grid().time(step), x, path.step_increments(step), path.grid().dt());
}

}  // namespace sacflow
