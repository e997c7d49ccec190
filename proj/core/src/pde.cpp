#include "sacflow/pde.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>

#include "sacflow/error.hpp"
#include "sacflow/io.hpp"
#include "sacflow/linalg.hpp"
#include "sacflow/spline.hpp"

namespace sacflow {

std::string to_string(PhaseKind kind) {
  switch (kind) {
    case PhaseKind::transformed: return "transformed";
    case PhaseKind::controlled: return "controlled";
    case PhaseKind::direct: return "direct";
  }
  return "direct";
}

PhaseField::PhaseField(Lattice lattice, std::vector<double> times, std::vector<double> values, PhaseKind kind)
    : lattice_(std::move(lattice)), times_(std::move(times)), values_(std::move(values)), kind_(kind) {
  if (times_.empty() || values_.size() != times_.size() * lattice_.size())
    throw ParameterError("phase field value table has the wrong size");
}

double PhaseField::sup_norm() const {
  double s = 0.0;
  for (double v : values_) s = std::max(s, std::abs(v));
  return s;
}

void PhaseField::write_csv(std::ostream& out) const {
  out << "time,node,value\n";
  out.precision(17);
  for (std::size_t k = 0; k < slices(); ++k) {
    const auto s = slice(k);
    for (std::size_t j = 0; j < s.size(); ++j) out << times_[k] << ',' << j << ',' << s[j] << '\n';
  }
}

void PhaseField::write_binary(std::ostream& out) const {
  binary::put_magic(out, "SACPHAS1");
  binary::put<std::int32_t>(out, static_cast<std::int32_t>(kind_));
  binary::put_lattice(out, lattice_);
  binary::put_doubles(out, times_);
  binary::put_doubles(out, values_);
}

PhaseField PhaseField::read_binary(std::istream& in) {
  binary::expect_magic(in, "SACPHAS1");
  const auto kind = binary::get<std::int32_t>(in);
  if (kind < 0 || kind > 2) throw Error("phase field snapshot: bad kind");
  Lattice lattice = binary::get_lattice(in);
  auto times = binary::get_doubles(in);
  auto values = binary::get_doubles(in);
  return PhaseField(std::move(lattice), std::move(times), std::move(values), static_cast<PhaseKind>(kind));
}

// ---------------------------------------------------------------------------------------------

InitialData InitialData::constant(double value) {
  if (!std::isfinite(value)) throw ParameterError("initial value must be finite");
  InitialData d;
  d.kind_ = Kind::constant;
  d.a_ = value;
  return d;
}

InitialData InitialData::tanh_profile(double center, double width, int axis) {
  if (!(width > 0.0) || !std::isfinite(center)) throw ParameterError("tanh profile needs a finite center and width > 0");
  if (axis < 0 || axis > 1) throw ParameterError("tanh profile axis must be 0 or 1");
  InitialData d;
  d.kind_ = Kind::tanh;
  d.a_ = center;
  d.b_ = width;
  d.axis_ = axis;
  return d;
}

InitialData InitialData::samples(std::vector<double> values) {
  for (double v : values)
    if (!std::isfinite(v)) throw ParameterError("initial samples must be finite");
  InitialData d;
  d.kind_ = Kind::samples;
  d.values_ = std::move(values);
  return d;
}

double InitialData::neumann_defect(const Box& box) const {
  if (kind_ != Kind::tanh) return 0.0;
  const auto k = static_cast<std::size_t>(axis_);
  double worst = 0.0;
  for (double face : {box.lo[k], box.hi[k]}) {
    const double c = std::cosh((face - a_) / b_);
    worst = std::max(worst, 1.0 / (b_ * c * c));
  }
  return worst;
}

std::vector<double> InitialData::sample(const Lattice& lattice) const {
  std::vector<double> out(lattice.size());
  switch (kind_) {
    case Kind::constant:
      std::fill(out.begin(), out.end(), a_);
      break;
    case Kind::tanh: {
      if (axis_ >= lattice.dim()) throw ParameterError("tanh profile axis exceeds the lattice dimension");
      const double defect = neumann_defect(lattice.box());
      if (defect > kNeumannTolerance) {
        std::ostringstream msg;
        msg << "tanh initial profile is not flat at the boundary (normal derivative " << defect
            << "); move the center inward or reduce the width";
        throw ParameterError(msg.str());
      }
      for (std::size_t j = 0; j < out.size(); ++j) out[j] = std::tanh((lattice.node(j)[static_cast<std::size_t>(axis_)] - a_) / b_);
      break;
    }
    case Kind::samples:
      if (values_.size() != lattice.size()) throw ParameterError("initial samples do not match the lattice");
      out = values_;
      break;
  }
  return out;
}

// ---------------------------------------------------------------------------------------------

namespace {

int reflect(int i, int last) { return i < 0 ? -i : (i > last ? 2 * last - i : i); }

double min_spacing(const Lattice& lattice) {
  double h = lattice.spacing(0);
  if (lattice.dim() == 2) h = std::min(h, lattice.spacing(1));
  return h;
}

// Centered gradient with reflected ghosts (the normal component vanishes on the boundary).
void gradient(const Lattice& lattice, std::span<const double> u, std::vector<Point>& grad) {
  grad.resize(lattice.size());
  const int n0 = lattice.cells(0);
  if (lattice.dim() == 1) {
    const double inv = 0.5 / lattice.spacing(0);
    const auto last = static_cast<std::size_t>(n0);
    grad[0] = {0.0, 0.0};
    grad[last] = {0.0, 0.0};
    for (std::size_t i = 1; i < last; ++i) grad[i] = {(u[i + 1] - u[i - 1]) * inv, 0.0};
    return;
  }
  const int n1 = lattice.cells(1);
  const double inv0 = 0.5 / lattice.spacing(0), inv1 = 0.5 / lattice.spacing(1);
  for (int k = 0; k <= n1; ++k)
    for (int i = 0; i <= n0; ++i)
      grad[lattice.index(i, k)] = {(u[lattice.index(reflect(i + 1, n0), k)] - u[lattice.index(reflect(i - 1, n0), k)]) * inv0,
                                   (u[lattice.index(i, reflect(k + 1, n1))] - u[lattice.index(i, reflect(k - 1, n1))]) * inv1};
}

// Implicit part (I - dt R : D^2) w = rhs with Neumann ghosts. R == nullptr means the identity.
class DiffusionSolver {
 public:
  DiffusionSolver(const Lattice& lattice, double dt) : lattice_(lattice), dt_(dt) {}

  void solve(const double* R, std::vector<double>& rhs) {
    if (lattice_.dim() == 1)
      solve_1d(R, rhs);
    else
      solve_2d(R, rhs);
  }

 private:
  void solve_1d(const double* R, std::vector<double>& rhs) {
    if (R == nullptr && !identity_.empty()) {
      identity_.solve(rhs);
      return;
    }
    const int last = lattice_.cells(0);
    const std::size_t n = lattice_.size();
    lower_.resize(n);
    diag_.resize(n);
    upper_.resize(n);
    const double k = dt_ / (lattice_.spacing(0) * lattice_.spacing(0));
    for (int i = 0; i <= last; ++i) {
      const auto j = static_cast<std::size_t>(i);
      const double c = R ? R[j] * k : k;
      diag_[j] = 1.0 + 2.0 * c;
      lower_[j] = i == last ? -2.0 * c : -c;
      upper_[j] = i == 0 ? -2.0 * c : -c;
    }
    if (R == nullptr) {
      identity_ = TridiagonalFactor(lower_, diag_, upper_);
      identity_.solve(rhs);
      return;
    }
    solve_tridiagonal(lower_, diag_, upper_, rhs, scratch_);
  }

  void solve_2d(const double* R, std::vector<double>& rhs) {
    if (R != nullptr || !identity_ready_) {
      assemble(R);
      solver_.setTolerance(1e-10);
      solver_.setMaxIterations(1000);
      solver_.compute(matrix_);
      if (solver_.info() != Eigen::Success) throw SolverError("diffusion preconditioner setup failed");
      identity_ready_ = R == nullptr;
    }
    const Eigen::Map<const Eigen::VectorXd> b(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
    Eigen::VectorXd x = solver_.solveWithGuess(b, b);
    if (solver_.info() != Eigen::Success) {
      std::ostringstream msg;
      msg << "BiCGSTAB diffusion solve failed after " << solver_.iterations() << " iterations (error " << solver_.error() << ")";
      throw SolverError(msg.str());
    }
    std::copy(x.data(), x.data() + x.size(), rhs.begin());
  }

  void assemble(const double* R) {
    const int n0 = lattice_.cells(0), n1 = lattice_.cells(1);
    const double hx = lattice_.spacing(0), hy = lattice_.spacing(1);
    triplets_.clear();
    for (int k = 0; k <= n1; ++k)
      for (int i = 0; i <= n0; ++i) {
        const std::size_t row = lattice_.index(i, k);
        const double r00 = R ? R[4 * row] : 1.0;
        const double r01 = R ? 0.5 * (R[4 * row + 1] + R[4 * row + 2]) : 0.0;
        const double r11 = R ? R[4 * row + 3] : 1.0;
        const auto add = [&](int ii, int kk, double v) {
          triplets_.emplace_back(static_cast<int>(row), static_cast<int>(lattice_.index(reflect(ii, n0), reflect(kk, n1))), v);
        };
        const double cx = dt_ * r00 / (hx * hx), cy = dt_ * r11 / (hy * hy);
        add(i, k, 1.0 + 2.0 * cx + 2.0 * cy);
        add(i - 1, k, -cx);
        add(i + 1, k, -cx);
        add(i, k - 1, -cy);
        add(i, k + 1, -cy);
        if (r01 != 0.0) {
          const double cxy = dt_ * 2.0 * r01 / (4.0 * hx * hy);
          add(i + 1, k + 1, -cxy);
          add(i - 1, k - 1, -cxy);
          add(i + 1, k - 1, cxy);
          add(i - 1, k + 1, cxy);
        }
      }
    const auto n = static_cast<Eigen::Index>(lattice_.size());
    matrix_.resize(n, n);
    matrix_.setFromTriplets(triplets_.begin(), triplets_.end());
  }

  const Lattice& lattice_;
  double dt_;
  std::vector<double> lower_, diag_, upper_, scratch_;
  TridiagonalFactor identity_;
  std::vector<Eigen::Triplet<double>> triplets_;
  Eigen::SparseMatrix<double, Eigen::RowMajor> matrix_;
  Eigen::BiCGSTAB<Eigen::SparseMatrix<double, Eigen::RowMajor>> solver_;
  bool identity_ready_ = false;
};

// Records slices and enforces the maximum principle.
class Recorder {
 public:
  Recorder(const Lattice& lattice, const TimeGrid& grid, const std::vector<double>& u0, const SolveOptions& opts,
           bool bounded)
      : lattice_(lattice), grid_(grid), opts_(opts), bounded_(bounded) {
    double sup = 0.0;
    for (double v : u0) sup = std::max(sup, std::abs(v));
    bound_ = std::max(1.0, sup) + opts.tol_max;
    times_.push_back(0.0);
    values_ = u0;
  }

  void record(int step, const std::vector<double>& u) {
    const double limit = bounded_ ? bound_ : std::numeric_limits<double>::max();
    for (double v : u)
      if (!(std::abs(v) <= limit)) {
        if (!std::isfinite(v)) throw StabilityError(message(step, "non-finite value"));
        std::ostringstream what;
        what << "maximum principle violated (|w| = " << std::abs(v) << " > " << bound_ << ")";
        throw StabilityError(message(step, what.str()));
      }
    if (opts_.full_trajectory || step == grid_.steps()) {
      times_.push_back(grid_.time(step));
      values_.insert(values_.end(), u.begin(), u.end());
    }
  }

  PhaseField finish(PhaseKind kind) { return PhaseField(lattice_, std::move(times_), std::move(values_), kind); }

 private:
  std::string message(int step, const std::string& what) const {
    std::ostringstream msg;
    msg << what << " at t=" << grid_.time(step) << "; reduce the time step";
    return msg.str();
  }

  const Lattice& lattice_;
  const TimeGrid& grid_;
  const SolveOptions& opts_;
  bool bounded_;
  double bound_ = 1.0;
  std::vector<double> times_;
  std::vector<double> values_;
};

// u + dt (u - u^3), the explicit reaction part shared by every route.
void react(const std::vector<double>& u, double dt, std::vector<double>& out) {
  out.resize(u.size());
  for (std::size_t j = 0; j < u.size(); ++j) out[j] = u[j] + dt * (u[j] - u[j] * u[j] * u[j]);
}

// grad u . dX by Heun's method: predictor with dX(t_m), corrector averaging with dX(t_{m+1}).
// Mode values on the lattice are tabulated once; time enters only through the common modulation factor.
class Transport {
 public:
  Transport(const ModeSet& spec, const Lattice& lattice)
      : spec_(spec), lattice_(lattice), h_(min_spacing(lattice)), modes_(spec.noise_modes()) {
    if (spec.dim() != lattice.dim()) throw ParameterError("mode set and lattice dimensions differ");
    const std::size_t n = lattice.size();
    table_.assign(n * static_cast<std::size_t>(modes_ + 1), Point{0.0, 0.0});
    for (std::size_t j = 0; j < n; ++j) {
      const Point x = lattice.node(j);
      if (!spec.support().strictly_contains(x)) continue;
      for (int l = 0; l <= modes_; ++l) table_[j * static_cast<std::size_t>(modes_ + 1) + static_cast<std::size_t>(l)] = spec.value(l, 0.0, x);
    }
  }

  // Fills dX at both ends of [t0, t1] and checks the one-cell restriction.
  void prepare(double t0, double t1, const double* weights, double drift) {
    const std::size_t n = lattice_.size();
    const auto stride = static_cast<std::size_t>(modes_ + 1);
    const double f0 = spec_.modulation().factor(t0), f1 = spec_.modulation().factor(t1);
    dx0_.resize(n);
    dx1_.resize(n);
    double worst = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const Point* v = table_.data() + j * stride;
      double s0 = drift * v[0][0], s1 = drift * v[0][1];
      for (int l = 1; l <= modes_; ++l) {
        s0 += weights[l - 1] * v[l][0];
        s1 += weights[l - 1] * v[l][1];
      }
      dx0_[j] = {f0 * s0, f0 * s1};
      dx1_[j] = {f1 * s0, f1 * s1};
      worst = std::max(worst, std::max(std::abs(s0), std::abs(s1)));
    }
    worst *= std::max(std::abs(f0), std::abs(f1));
    if (worst > h_) {
      std::ostringstream msg;
      msg << "transport increment " << worst << " exceeds the cell size " << h_ << " at t=" << t0
          << "; reduce the time step";
      throw StabilityError(msg.str());
    }
  }

  // out += 1/2 (grad u . dX0 + grad u* . dX1), u* = u + grad u . dX0
  void apply(const std::vector<double>& u, std::vector<double>& out) {
    const int dim = lattice_.dim();
    gradient(lattice_, u, grad_);
    first_.resize(u.size());
    pred_.resize(u.size());
    for (std::size_t j = 0; j < u.size(); ++j) {
      first_[j] = grad_[j][0] * dx0_[j][0] + (dim == 2 ? grad_[j][1] * dx0_[j][1] : 0.0);
      pred_[j] = u[j] + first_[j];
    }
    gradient(lattice_, pred_, grad_);
    for (std::size_t j = 0; j < u.size(); ++j) {
      const double second = grad_[j][0] * dx1_[j][0] + (dim == 2 ? grad_[j][1] * dx1_[j][1] : 0.0);
      out[j] += 0.5 * (first_[j] + second);
    }
  }

 private:
  const ModeSet& spec_;
  const Lattice& lattice_;
  double h_;
  int modes_;
  std::vector<Point> table_;
  std::vector<Point> dx0_, dx1_, grad_;
  std::vector<double> first_, pred_;
};

void require_same_box(const ModeSet& spec, const Lattice& lattice) {
  if (spec.dim() != lattice.dim()) throw ParameterError("mode set and lattice dimensions differ");
  for (int k = 0; k < spec.dim(); ++k) {
    const auto a = static_cast<std::size_t>(k);
    if (spec.box().lo[a] != lattice.box().lo[a] || spec.box().hi[a] != lattice.box().hi[a])
      throw ParameterError("mode set box and lattice box differ");
  }
}

// Shared loop for the two routes driven by transport: weights_for(m) gives (weights, drift weight) for step m.
template <typename Weights>
PhaseField transport_solve(const ModeSet& spec, const Lattice& lattice, const TimeGrid& grid, const InitialData& u0,
                           const SolveOptions& opts, PhaseKind kind, Weights&& weights_for) {
  require_same_box(spec, lattice);
  std::vector<double> u = u0.sample(lattice), next;
  Recorder rec(lattice, grid, u, opts, kind != PhaseKind::direct);
  DiffusionSolver diffusion(lattice, grid.dt());
  Transport transport(spec, lattice);
  for (int m = 0; m < grid.steps(); ++m) {
    const auto [w, drift] = weights_for(m);
    transport.prepare(grid.time(m), grid.time(m + 1), w, drift);
    react(u, grid.dt(), next);
    transport.apply(u, next);
    diffusion.solve(nullptr, next);
    u.swap(next);
    rec.record(m + 1, u);
  }
  return rec.finish(kind);
}

}  // namespace

PhaseField solve_transformed(const CoefficientField& coeffs, const InitialData& u0, const SolveOptions& opts) {
  const Lattice& lattice = coeffs.lattice();
  const TimeGrid& grid = coeffs.grid();
  if (!(coeffs.ellipticity() > kEllipticityFloor)) throw DegenerateCoefficientError("coefficients are not uniformly elliptic");
  const double dt = grid.dt();
  const int dim = lattice.dim();

  double smax = 0.0;
  for (int m = 0; m < grid.steps(); ++m)
    for (double s : coeffs.drift_slice(m)) smax = std::max(smax, std::abs(s));
  if (dt * smax > min_spacing(lattice)) {
    std::ostringstream msg;
    msg << "explicit advection restriction violated: dt * max|S| = " << dt * smax << " > " << min_spacing(lattice)
        << "; reduce the time step";
    throw StabilityError(msg.str());
  }

  std::vector<double> w = u0.sample(lattice), next;
  Recorder rec(lattice, grid, w, opts, true);
  DiffusionSolver diffusion(lattice, dt);
  std::vector<Point> grad;
  for (int m = 0; m < grid.steps(); ++m) {
    const auto R = coeffs.diffusion_slice(m);
    const auto S = coeffs.drift_slice(m);
    react(w, dt, next);
    gradient(lattice, w, grad);
    for (std::size_t j = 0; j < w.size(); ++j) {
      const std::size_t b = j * static_cast<std::size_t>(dim);
      next[j] += dt * (S[b] * grad[j][0] + (dim == 2 ? S[b + 1] * grad[j][1] : 0.0));
    }
    diffusion.solve(R.data(), next);
    w.swap(next);
    rec.record(m + 1, w);
  }
  return rec.finish(PhaseKind::transformed);
}

PhaseField solve_controlled(const ModeSet& spec, const Control& control, const Lattice& lattice, const InitialData& u0,
                            const SolveOptions& opts) {
  if (control.modes() != spec.noise_modes()) throw ParameterError("control and mode set disagree on L");
  const TimeGrid& grid = control.grid();
  const double dt = grid.dt();
  std::vector<std::vector<double>> weights(static_cast<std::size_t>(control.segments()));
  for (int s = 0; s < control.segments(); ++s)
    for (int l = 1; l <= control.modes(); ++l) weights[static_cast<std::size_t>(s)].push_back(control.coefficient(s, l) * dt);
  return transport_solve(spec, lattice, grid, u0, opts, PhaseKind::controlled, [&](int m) {
    return std::pair<const double*, double>{weights[static_cast<std::size_t>(control.segment_of(m))].data(), dt};
  });
}

PhaseField solve_direct_spde(const ModeSet& spec, const FieldPath& path, const Lattice& lattice, const InitialData& u0,
                             const SolveOptions& opts) {
  if (path.modes() != spec.noise_modes()) throw ParameterError("field path and mode set disagree on L");
  const double dt = path.grid().dt();
  return transport_solve(spec, lattice, path.grid(), u0, opts, PhaseKind::direct, [&](int m) {
    return std::pair<const double*, double>{path.step_increments(m), dt};
  });
}

PhaseField pull_back(const PhaseField& w, const FlowPath& inverse) {
  if (!inverse.is_inverse()) throw ParameterError("pull_back needs the inverse flow");
  const Lattice& lattice = w.lattice();
  if (lattice.size() != inverse.lattice().size() || lattice.dim() != inverse.dim())
    throw ParameterError("phase field and flow live on different lattices");
  std::vector<double> values;
  values.reserve(w.values().size());
  for (std::size_t k = 0; k < w.slices(); ++k) {
    const int m = inverse.grid().node_index(w.time(k));
    const LatticeSpline spline(lattice, w.slice(k));
    for (std::size_t j = 0; j < lattice.size(); ++j) values.push_back(spline.value(inverse.position(m, j)));
  }
  return PhaseField(lattice, w.times(), std::move(values), PhaseKind::transformed);
}

double action_functional(const PhaseField& u, double eps) {
  if (!(eps > 0.0)) throw ParameterError("eps must be positive");
  if (u.slices() < 2) throw ParameterError("action functional needs at least two time slices");
  const Lattice& lattice = u.lattice();
  const int dim = lattice.dim();
  const int n0 = lattice.cells(0), n1 = dim == 2 ? lattice.cells(1) : 0;
  const auto weight = [&](int i, int last, double h) { return (i == 0 || i == last) ? 0.5 * h : h; };
  std::vector<double> mid(lattice.size());
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < u.slices(); ++k) {
    const double dt = u.time(k + 1) - u.time(k);
    const auto a = u.slice(k), b = u.slice(k + 1);
    for (std::size_t j = 0; j < mid.size(); ++j) mid[j] = 0.5 * (a[j] + b[j]);
    double acc = 0.0;
    for (int i1 = 0; i1 <= n1; ++i1)
      for (int i0 = 0; i0 <= n0; ++i0) {
        const std::size_t j = lattice.index(i0, i1);
        const double h0 = lattice.spacing(0);
        double lap = (mid[lattice.index(reflect(i0 + 1, n0), i1)] - 2.0 * mid[j] + mid[lattice.index(reflect(i0 - 1, n0), i1)]) / (h0 * h0);
        double w = weight(i0, n0, h0);
        if (dim == 2) {
          const double h1 = lattice.spacing(1);
          lap += (mid[lattice.index(i0, reflect(i1 + 1, n1))] - 2.0 * mid[j] + mid[lattice.index(i0, reflect(i1 - 1, n1))]) / (h1 * h1);
          w *= weight(i1, n1, h1);
        }
        const double ut = (b[j] - a[j]) / dt;
        const double wp = mid[j] * mid[j] * mid[j] - mid[j];
        const double r = -eps * lap + wp / eps;
        acc += w * (eps * ut * ut + r * r / eps);
      }
    total += dt * acc;
  }
  return total;
}

}  // namespace sacflow
