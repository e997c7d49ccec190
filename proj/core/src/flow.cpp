#include "sacflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "sacflow/error.hpp"
#include "sacflow/io.hpp"
#include "sacflow/spline.hpp"

namespace sacflow {

namespace {

constexpr int kNewtonIterations = 50;
constexpr double kNewtonTolerance = 1e-13;

Point negated_field(const ModeSet& spec, double t, const Point& y, const double* weights, double drift) {
  const Point c = spec.combination(t, y, weights, drift);
  return {-c[0], -c[1]};
}

[[noreturn]] void left_support(double t) {
  std::ostringstream msg;
  msg << "flow node left the support at t=" << t << "; reduce the time step";
  throw StepSizeError(msg.str());
}

// One step of the chosen scheme for a single point; nodes on or outside the support never move.
void advance(const ModeSet& spec, FlowKind kind, double t0, double t1, const double* weights, double drift, Point& y) {
  if (!spec.support().strictly_contains(y)) return;
  const Point k1 = negated_field(spec, t0, y, weights, drift);
  if (kind == FlowKind::ito) {
    y = {y[0] + k1[0], y[1] + k1[1]};
  } else {
    const Point pred{y[0] + k1[0], y[1] + k1[1]};
    const Point k2 = negated_field(spec, t1, pred, weights, drift);
    y = {y[0] + 0.5 * (k1[0] + k2[0]), y[1] + 0.5 * (k1[1] + k2[1])};
  }
  if (!spec.support().strictly_contains(y)) left_support(t1);
}

std::vector<double> lattice_positions(const Lattice& lattice) {
  const int dim = lattice.dim();
  std::vector<double> out(lattice.size() * static_cast<std::size_t>(dim));
  for (std::size_t j = 0; j < lattice.size(); ++j) {
    const Point x = lattice.node(j);
    for (int a = 0; a < dim; ++a) out[j * static_cast<std::size_t>(dim) + static_cast<std::size_t>(a)] = x[static_cast<std::size_t>(a)];
  }
  return out;
}

void require_compatible(const ModeSet& spec, const Lattice& lattice) {
  if (spec.dim() != lattice.dim()) throw ParameterError("mode set and lattice dimensions differ");
  const Box& a = spec.box();
  const Box& b = lattice.box();
  for (int k = 0; k < spec.dim(); ++k) {
    const auto i = static_cast<std::size_t>(k);
    if (a.lo[i] != b.lo[i] || a.hi[i] != b.hi[i]) throw ParameterError("mode set box and lattice box differ");
  }
}

// Integrate every lattice node over steps [from, to) with per-step weight provider.
template <typename Weights>
FlowPath integrate_lattice(const ModeSet& spec, const Lattice& lattice, const TimeGrid& grid, FlowKind kind, int from,
                           int to, Weights&& weights_for) {
  require_compatible(spec, lattice);
  const int dim = lattice.dim();
  const std::size_t n = lattice.size();
  const std::size_t slice = n * static_cast<std::size_t>(dim);
  std::vector<double> pos(slice * static_cast<std::size_t>(to - from + 1));
  const auto init = lattice_positions(lattice);
  std::copy(init.begin(), init.end(), pos.begin());
  std::vector<Point> cur(n);
  for (std::size_t j = 0; j < n; ++j) cur[j] = lattice.node(j);
  for (int m = from; m < to; ++m) {
    const auto [w, drift] = weights_for(m);
    const double t0 = grid.time(m), t1 = grid.time(m + 1);
    double* out = pos.data() + slice * static_cast<std::size_t>(m - from + 1);
    for (std::size_t j = 0; j < n; ++j) {
      advance(spec, kind, t0, t1, w, drift, cur[j]);
      for (int a = 0; a < dim; ++a) out[j * static_cast<std::size_t>(dim) + static_cast<std::size_t>(a)] = cur[j][static_cast<std::size_t>(a)];
    }
  }
  const TimeGrid span = from == 0 && to == grid.steps() ? grid : TimeGrid(grid.dt() * (to - from), to - from);
  FlowPath flow(lattice, span, kind, std::move(pos));
  for (int m = 0; m <= flow.grid().steps(); ++m)
    for (std::size_t j = 0; j < n; ++j)
      if (!(flow.jacobian_det(m, j) > 0.0)) {
        std::ostringstream msg;
        msg << "Jacobian determinant " << flow.jacobian_det(m, j) << " <= 0 at step " << m + from << ", node " << j
            << "; reduce the time step";
        throw StepSizeError(msg.str());
      }
  return flow;
}

std::vector<double> control_weights(const Control& control, int segment) {
  std::vector<double> w(static_cast<std::size_t>(control.modes()));
  const double dt = control.grid().dt();
  for (int l = 1; l <= control.modes(); ++l) w[static_cast<std::size_t>(l - 1)] = control.coefficient(segment, l) * dt;
  return w;
}

}  // namespace

std::string to_string(FlowKind kind) {
  switch (kind) {
    case FlowKind::stratonovich: return "stratonovich";
    case FlowKind::ito: return "ito";
    case FlowKind::controlled: return "controlled";
  }
  return "stratonovich";
}

FlowPath::FlowPath(Lattice lattice, TimeGrid grid, FlowKind kind, std::vector<double> positions, bool is_inverse)
    : lattice_(std::move(lattice)), grid_(grid), kind_(kind), is_inverse_(is_inverse), positions_(std::move(positions)) {
  if (positions_.size() != lattice_.size() * static_cast<std::size_t>(dim()) * static_cast<std::size_t>(grid_.nodes()))
    throw ParameterError("flow position table has the wrong size");
  compute_jacobians();
}

void FlowPath::compute_jacobians() {
  const int n = dim();
  const std::size_t nodes = lattice_.size();
  const auto d2 = static_cast<std::size_t>(n * n);
  jacobians_.assign(nodes * d2 * static_cast<std::size_t>(grid_.nodes()), 0.0);
  for (int m = 0; m < grid_.nodes(); ++m) {
    for (std::size_t j = 0; j < nodes; ++j) {
      const auto c = lattice_.coords(j);
      double* J = jacobians_.data() + (static_cast<std::size_t>(m) * nodes + j) * d2;
      for (int k = 0; k < n; ++k) {
        const int i = c[static_cast<std::size_t>(k)];
        const int last = lattice_.cells(k);
        const double h = lattice_.spacing(k);
        const auto at = [&](int shift) {
          auto cc = c;
          cc[static_cast<std::size_t>(k)] += shift;
          const std::size_t nb = lattice_.index(cc[0], cc[1]);
          const Point p = position(m, nb), x = lattice_.node(nb);
          return Point{p[0] - x[0], p[1] - x[1]};
        };
        Point d;
        if (i > 1 && i < last - 1) {
          const Point p1 = at(1), q1 = at(-1), p2 = at(2), q2 = at(-2);
          d = {(8 * (p1[0] - q1[0]) - (p2[0] - q2[0])) / (12 * h), (8 * (p1[1] - q1[1]) - (p2[1] - q2[1])) / (12 * h)};
        } else if (i > 0 && i < last) {
          const Point p = at(1), q = at(-1);
          d = {(p[0] - q[0]) / (2 * h), (p[1] - q[1]) / (2 * h)};
        } else if (i == 0) {
          const Point p0 = at(0), p1 = at(1), p2 = at(2);
          d = {(-3 * p0[0] + 4 * p1[0] - p2[0]) / (2 * h), (-3 * p0[1] + 4 * p1[1] - p2[1]) / (2 * h)};
        } else {
          const Point p0 = at(0), p1 = at(-1), p2 = at(-2);
          d = {(3 * p0[0] - 4 * p1[0] + p2[0]) / (2 * h), (3 * p0[1] - 4 * p1[1] + p2[1]) / (2 * h)};
        }
        for (int r = 0; r < n; ++r) J[r * n + k] = d[static_cast<std::size_t>(r)] + (r == k ? 1.0 : 0.0);
      }
    }
  }
}

Matrix2 FlowPath::jacobian(int step, std::size_t node) const {
  const int n = dim();
  const double* J = jacobians_.data() + (static_cast<std::size_t>(step) * lattice_.size() + node) * static_cast<std::size_t>(n * n);
  Matrix2 out;
  for (int r = 0; r < n; ++r)
    for (int k = 0; k < n; ++k) out(r, k) = J[r * n + k];
  return out;
}

std::vector<double> FlowPath::component(int step, int axis) const {
  std::vector<double> out(lattice_.size());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = position(step, j)[static_cast<std::size_t>(axis)];
  return out;
}

std::vector<double> FlowPath::displacement(int step, int axis) const {
  std::vector<double> out(lattice_.size());
  for (std::size_t j = 0; j < out.size(); ++j)
    out[j] = position(step, j)[static_cast<std::size_t>(axis)] - lattice_.node(j)[static_cast<std::size_t>(axis)];
  return out;
}

double FlowPath::min_jacobian_det() const {
  double best = std::numeric_limits<double>::infinity();
  for (int m = 0; m < grid_.nodes(); ++m)
    for (std::size_t j = 0; j < lattice_.size(); ++j) best = std::min(best, jacobian_det(m, j));
  return best;
}

void FlowPath::write_csv(std::ostream& out) const {
  out << (dim() == 1 ? "time,node,x0,det_jacobian\n" : "time,node,x0,x1,det_jacobian\n");
  out.precision(17);
  for (int m = 0; m < grid_.nodes(); ++m)
    for (std::size_t j = 0; j < lattice_.size(); ++j) {
      const Point p = position(m, j);
      out << grid_.time(m) << ',' << j << ',' << p[0];
      if (dim() == 2) out << ',' << p[1];
      out << ',' << jacobian_det(m, j) << '\n';
    }
}

void FlowPath::write_binary(std::ostream& out) const {
  binary::put_magic(out, "SACFLOW1");
  binary::put<std::int32_t>(out, static_cast<std::int32_t>(kind_));
  binary::put<std::int32_t>(out, is_inverse_ ? 1 : 0);
  binary::put_lattice(out, lattice_);
  binary::put_time_grid(out, grid_);
  binary::put_doubles(out, positions_);
}

FlowPath FlowPath::read_binary(std::istream& in) {
  binary::expect_magic(in, "SACFLOW1");
  const auto kind = binary::get<std::int32_t>(in);
  if (kind < 0 || kind > 2) throw Error("flow snapshot: bad kind");
  const bool inverse = binary::get<std::int32_t>(in) != 0;
  Lattice lattice = binary::get_lattice(in);
  const TimeGrid grid = binary::get_time_grid(in);
  auto positions = binary::get_doubles(in);
  return FlowPath(std::move(lattice), grid, static_cast<FlowKind>(kind), std::move(positions), inverse);
}

Control::Control(TimeGrid grid, int modes, int segments, std::vector<double> coefficients)
    : grid_(grid), modes_(modes), segments_(segments), coefficients_(std::move(coefficients)) {
  if (modes < 1) throw ParameterError("control needs at least one mode");
  if (segments < 1 || grid.steps() % segments != 0)
    throw ParameterError("control segments must divide the number of time steps");
  if (coefficients_.size() != static_cast<std::size_t>(modes) * static_cast<std::size_t>(segments))
    throw ParameterError("control coefficient table has the wrong size");
  for (double c : coefficients_)
    if (!std::isfinite(c)) throw ParameterError("control coefficients must be finite");
}

Control Control::zero(const TimeGrid& grid, int modes, int segments) {
  return Control(grid, modes, segments, std::vector<double>(static_cast<std::size_t>(modes) * static_cast<std::size_t>(segments), 0.0));
}

Control Control::constant(const TimeGrid& grid, int modes, int segments, int mode, double value) {
  Control c = zero(grid, modes, segments);
  for (int s = 0; s < segments; ++s) c.coefficient(s, mode) = value;
  return c;
}

Control Control::scaled(double factor) const {
  auto coeffs = coefficients_;
  for (double& c : coeffs) c *= factor;
  return Control(grid_, modes_, segments_, std::move(coeffs));
}

FlowPath integrate_stratonovich(const ModeSet& spec, const FieldPath& path, const Lattice& lattice) {
  return integrate_stratonovich_from(spec, path, lattice, 0, path.grid().steps());
}

FlowPath integrate_stratonovich_from(const ModeSet& spec, const FieldPath& path, const Lattice& lattice, int from,
                                     int to) {
  if (path.modes() != spec.noise_modes()) throw ParameterError("field path and mode set disagree on L");
  if (from < 0 || to > path.grid().steps() || from > to) throw ParameterError("invalid step range");
  if (from == to) {
    return FlowPath(lattice, TimeGrid(path.grid().dt(), 1), FlowKind::stratonovich, [&] {
      auto p = lattice_positions(lattice);
      p.insert(p.end(), p.begin(), p.end());
      return p;
    }());
  }
  const double dt = path.grid().dt();
  return integrate_lattice(spec, lattice, path.grid(), FlowKind::stratonovich, from, to, [&](int m) {
    return std::pair<const double*, double>{path.step_increments(m), dt};
  });
}

FlowPath integrate_ito(const ModeSet& spec, const FieldPath& path, const Lattice& lattice) {
  if (path.modes() != spec.noise_modes()) throw ParameterError("field path and mode set disagree on L");
  const double dt = path.grid().dt();
  return integrate_lattice(spec, lattice, path.grid(), FlowKind::ito, 0, path.grid().steps(), [&](int m) {
    return std::pair<const double*, double>{path.step_increments(m), dt};
  });
}

FlowPath integrate_controlled(const ModeSet& spec, const Control& control, const Lattice& lattice) {
  if (control.modes() != spec.noise_modes()) throw ParameterError("control and mode set disagree on L");
  std::vector<std::vector<double>> weights;
  for (int s = 0; s < control.segments(); ++s) weights.push_back(control_weights(control, s));
  const double dt = control.grid().dt();
  return integrate_lattice(spec, lattice, control.grid(), FlowKind::controlled, 0, control.grid().steps(), [&](int m) {
    return std::pair<const double*, double>{weights[static_cast<std::size_t>(control.segment_of(m))].data(), dt};
  });
}

Point stratonovich_correction(const ModeSet& spec, double t, const Point& x) {
  spec.require_in_box(x);
  Point out{0.0, 0.0};
  Matrix2 J;
  for (int l = 1; l <= spec.noise_modes(); ++l) {
    const Point v = spec.value(l, t, x, J);
    for (int r = 0; r < spec.dim(); ++r)
      for (int k = 0; k < spec.dim(); ++k) out[static_cast<std::size_t>(r)] -= 0.5 * J(r, k) * v[static_cast<std::size_t>(k)];
  }
  return out;
}

std::vector<Point> integrate_points(const ModeSet& spec, const FieldPath& path, std::vector<Point> points, FlowKind kind,
                                    int from, int to) {
  if (path.modes() != spec.noise_modes()) throw ParameterError("field path and mode set disagree on L");
  if (from < 0 || to > path.grid().steps() || from > to) throw ParameterError("invalid step range");
  if (kind == FlowKind::controlled) throw ParameterError("use the Control overload for controlled flows");
  for (const Point& p : points) spec.require_in_box(p);
  const double dt = path.grid().dt();
  for (int m = from; m < to; ++m)
    for (Point& p : points)
      advance(spec, kind, path.grid().time(m), path.grid().time(m + 1), path.step_increments(m), dt, p);
  return points;
}

std::vector<Point> integrate_points(const ModeSet& spec, const Control& control, std::vector<Point> points) {
  if (control.modes() != spec.noise_modes()) throw ParameterError("control and mode set disagree on L");
  for (const Point& p : points) spec.require_in_box(p);
  const TimeGrid& grid = control.grid();
  std::vector<double> w;
  for (int m = 0; m < grid.steps(); ++m) {
    if (m % control.steps_per_segment() == 0) w = control_weights(control, control.segment_of(m));
    for (Point& p : points) advance(spec, FlowKind::controlled, grid.time(m), grid.time(m + 1), w.data(), grid.dt(), p);
  }
  return points;
}

FlowPath invert_flow(const FlowPath& flow) {
  const Lattice& lattice = flow.lattice();
  const int dim = flow.dim();
  const std::size_t n = lattice.size();
  const auto udim = static_cast<std::size_t>(dim);
  const std::size_t slice = n * udim;
  std::vector<double> inv(slice * static_cast<std::size_t>(flow.grid().nodes()));
  const auto init = lattice_positions(lattice);
  std::copy(init.begin(), init.end(), inv.begin());

  InversionResidual residual;
  std::vector<LatticeSpline> forward(udim), backward(udim);
  for (int m = 1; m < flow.grid().nodes(); ++m) {
    for (int a = 0; a < dim; ++a) forward[static_cast<std::size_t>(a)] = LatticeSpline(lattice, flow.displacement(m, a));
    const double* seed = inv.data() + slice * static_cast<std::size_t>(m - 1);
    double* out = inv.data() + slice * static_cast<std::size_t>(m);
    double worst = 0.0;
    bool failed = false;
    for (std::size_t j = 0; j < n; ++j) {
      const Point y = lattice.node(j);
      Point z{seed[j * udim], dim == 2 ? seed[j * udim + 1] : 0.0};
      if (lattice.on_boundary_ring(j)) z = y;
      double r_norm = 0.0;
      bool converged = lattice.on_boundary_ring(j);
      for (int it = 0; it < kNewtonIterations && !converged; ++it) {
        Point r{z[0] - y[0], dim == 2 ? z[1] - y[1] : 0.0};
        Matrix2 J = Matrix2::identity();
        for (int a = 0; a < dim; ++a) {
          Point g;
          r[static_cast<std::size_t>(a)] += forward[static_cast<std::size_t>(a)].value_and_gradient(z, g);
          for (int k = 0; k < dim; ++k) J(a, k) += g[static_cast<std::size_t>(k)];
        }
        r_norm = norm(r, dim);
        if (r_norm <= kNewtonTolerance) {
          converged = true;
          break;
        }
        const Matrix2 Ji = inverse(J, dim);
        for (int a = 0; a < dim; ++a) {
          double dz = 0.0;
          for (int k = 0; k < dim; ++k) dz += Ji(a, k) * r[static_cast<std::size_t>(k)];
          auto& zc = z[static_cast<std::size_t>(a)];
          zc = std::clamp(zc - dz, lattice.box().lo[static_cast<std::size_t>(a)], lattice.box().hi[static_cast<std::size_t>(a)]);
        }
      }
      if (!converged) failed = true;
      worst = std::max(worst, r_norm);
      for (int a = 0; a < dim; ++a) out[j * udim + static_cast<std::size_t>(a)] = z[static_cast<std::size_t>(a)];
    }
    if (failed) {
      std::ostringstream msg;
      msg << "flow inversion did not converge at step " << m << " (worst residual " << worst << ")";
      throw InversionError(msg.str(), worst);
    }
    residual.newton = std::max(residual.newton, worst);

    // composition residual phi^{-1}(phi(x_j)) - x_j with the inverse interpolated
    for (int a = 0; a < dim; ++a) {
      std::vector<double> d(n);
      for (std::size_t j = 0; j < n; ++j) d[j] = out[j * udim + static_cast<std::size_t>(a)] - lattice.node(j)[static_cast<std::size_t>(a)];
      backward[static_cast<std::size_t>(a)] = LatticeSpline(lattice, d);
    }
    for (std::size_t j = 0; j < n; ++j) {
      const Point p = flow.position(m, j);
      Point back = p;
      for (int a = 0; a < dim; ++a) back[static_cast<std::size_t>(a)] += backward[static_cast<std::size_t>(a)].value(p);
      residual.composition = std::max(residual.composition, distance(back, lattice.node(j), dim));
    }
  }
  FlowPath result(lattice, flow.grid(), flow.kind(), std::move(inv), !flow.is_inverse());
  result.set_inversion_residual(residual);
  return result;
}

double cocycle_defect(const ModeSet& spec, const FieldPath& path, const Lattice& lattice, double s, double t,
                      double tau) {
  const TimeGrid& grid = path.grid();
  const int is = grid.node_index(s), it = grid.node_index(t), itau = grid.node_index(tau);
  if (!(is <= it && it <= itau)) throw ParameterError("cocycle_defect requires s <= t <= tau");
  require_compatible(spec, lattice);
  std::vector<Point> nodes(lattice.size());
  for (std::size_t j = 0; j < nodes.size(); ++j) nodes[j] = lattice.node(j);

  const auto direct = integrate_points(spec, path, nodes, FlowKind::stratonovich, is, itau);
  const auto first = integrate_points(spec, path, nodes, FlowKind::stratonovich, is, it);
  const auto second = integrate_points(spec, path, nodes, FlowKind::stratonovich, it, itau);

  const int dim = lattice.dim();
  std::vector<LatticeSpline> splines;
  for (int a = 0; a < dim; ++a) {
    std::vector<double> d(nodes.size());
    for (std::size_t j = 0; j < nodes.size(); ++j) d[j] = second[j][static_cast<std::size_t>(a)] - nodes[j][static_cast<std::size_t>(a)];
    splines.emplace_back(lattice, d);
  }
  double defect = 0.0;
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    Point composed = first[j];
    for (int a = 0; a < dim; ++a) composed[static_cast<std::size_t>(a)] += splines[static_cast<std::size_t>(a)].value(first[j]);
    defect = std::max(defect, distance(direct[j], composed, dim));
  }
  return defect;
}

}  // namespace sacflow
