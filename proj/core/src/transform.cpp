#include "sacflow/transform.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>

#include "sacflow/analysis.hpp"
#include "sacflow/error.hpp"
#include "sacflow/spline.hpp"

namespace sacflow {

CoefficientField::CoefficientField(Lattice lattice, TimeGrid grid, std::vector<double> diffusion, std::vector<double> drift)
    : lattice_(std::move(lattice)), grid_(grid), R_(std::move(diffusion)), S_(std::move(drift)) {
  const auto n = static_cast<std::size_t>(dim());
  const std::size_t count = lattice_.size() * static_cast<std::size_t>(grid_.nodes());
  if (R_.size() != count * n * n || S_.size() != count * n) throw ParameterError("coefficient tables have the wrong size");
  ellipticity_ = std::numeric_limits<double>::infinity();
  for (int m = 0; m < grid_.nodes(); ++m)
    for (std::size_t j = 0; j < lattice_.size(); ++j) {
      const double e = min_eigenvalue_sym(R(m, j), dim());
      if (e < ellipticity_) {
        ellipticity_ = e;
        min_step_ = m;
        min_node_ = j;
      }
    }
}

CoefficientField CoefficientField::identity(const Lattice& lattice, const TimeGrid& grid) {
  const int n = lattice.dim();
  const std::size_t count = lattice.size() * static_cast<std::size_t>(grid.nodes());
  std::vector<double> R(count * static_cast<std::size_t>(n * n), 0.0), S(count * static_cast<std::size_t>(n), 0.0);
  for (std::size_t c = 0; c < count; ++c)
    for (int i = 0; i < n; ++i) R[c * static_cast<std::size_t>(n * n) + static_cast<std::size_t>(i * n + i)] = 1.0;
  return CoefficientField(lattice, grid, std::move(R), std::move(S));
}

Matrix2 CoefficientField::R(int step, std::size_t node) const {
  const int n = dim();
  const double* r = R_.data() + (static_cast<std::size_t>(step) * lattice_.size() + node) * static_cast<std::size_t>(n * n);
  Matrix2 out;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out(i, j) = r[i * n + j];
  return out;
}

Point CoefficientField::S(int step, std::size_t node) const {
  const int n = dim();
  const double* s = S_.data() + (static_cast<std::size_t>(step) * lattice_.size() + node) * static_cast<std::size_t>(n);
  return {s[0], n == 2 ? s[1] : 0.0};
}

std::vector<double> CoefficientField::diffusion_slice(int step) const {
  const std::size_t w = lattice_.size() * static_cast<std::size_t>(dim() * dim());
  const auto b = R_.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(step) * w);
  return {b, b + static_cast<std::ptrdiff_t>(w)};
}

std::vector<double> CoefficientField::drift_slice(int step) const {
  const std::size_t w = lattice_.size() * static_cast<std::size_t>(dim());
  const auto b = S_.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(step) * w);
  return {b, b + static_cast<std::ptrdiff_t>(w)};
}

void CoefficientField::write_csv(std::ostream& out, int step) const {
  if (dim() == 1)
    out << "node,x0,R00,S0\n";
  else
    out << "node,x0,x1,R00,R01,R10,R11,S0,S1\n";
  out.precision(17);
  for (std::size_t j = 0; j < lattice_.size(); ++j) {
    const Point x = lattice_.node(j);
    const Matrix2 r = R(step, j);
    const Point s = S(step, j);
    out << j << ',' << x[0];
    if (dim() == 2) out << ',' << x[1];
    out << ',' << r(0, 0);
    if (dim() == 2) out << ',' << r(0, 1) << ',' << r(1, 0) << ',' << r(1, 1);
    out << ',' << s[0];
    if (dim() == 2) out << ',' << s[1];
    out << '\n';
  }
}

std::string CoefficientField::ellipticity_json() const {
  return nlohmann::json{{"ellipticity", ellipticity_},
                        {"min_step", min_step_},
                        {"min_time", grid_.time(min_step_)},
                        {"min_node", min_node_}}
      .dump(2);
}

namespace {

void require_matching(const FlowPath& flow, const FlowPath& inverse) {
  if (flow.is_inverse() == inverse.is_inverse()) throw ParameterError("second argument must be the inverse flow");
  if (flow.lattice().size() != inverse.lattice().size() || flow.dim() != inverse.dim() ||
      flow.grid().steps() != inverse.grid().steps())
    throw ParameterError("flow and inverse live on different grids");
}

}  // namespace

CoefficientField build_coefficients(const FlowPath& flow, const FlowPath& inverse) {
  require_matching(flow, inverse);
  const Lattice& lattice = flow.lattice();
  const int n = flow.dim();
  const auto un = static_cast<std::size_t>(n);
  const std::size_t nodes = lattice.size();
  const std::size_t slices = static_cast<std::size_t>(flow.grid().nodes());
  std::vector<double> R(slices * nodes * un * un, 0.0), S(slices * nodes * un, 0.0);

  std::vector<double> field(nodes);
  std::vector<std::vector<double>> disp(un);
  for (int m = 0; m < flow.grid().nodes(); ++m) {
    for (int i = 0; i < n; ++i) disp[static_cast<std::size_t>(i)] = inverse.displacement(m, i);

    // A_ik - delta_ik = d_k (phi^{-1} - id)^i on the inverse lattice, composed with phi
    std::vector<LatticeSpline> first(un * un), second(un);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) {
        for (std::size_t j = 0; j < nodes; ++j)
          field[j] = inverse.jacobian(m, j)(i, k) - (i == k ? 1.0 : 0.0);
        first[static_cast<std::size_t>(i * n + k)] = LatticeSpline(lattice, field);
      }
    // sum_k d_k^2 (phi^{-1})^i by centered second differences; the displacement vanishes beyond the box
    for (int i = 0; i < n; ++i) {
      const auto& d = disp[static_cast<std::size_t>(i)];
      for (std::size_t j = 0; j < nodes; ++j) {
        const auto c = lattice.coords(j);
        double lap = 0.0;
        for (int k = 0; k < n; ++k) {
          const auto uk = static_cast<std::size_t>(k);
          const auto value_at = [&](int shift) {
            auto cc = c;
            cc[uk] += shift;
            if (cc[uk] < 0 || cc[uk] > lattice.cells(k)) return 0.0;
            return d[lattice.index(cc[0], cc[1])];
          };
          const double h = lattice.spacing(k);
          lap += (value_at(1) - 2.0 * d[j] + value_at(-1)) / (h * h);
        }
        field[j] = lap;
      }
      second[static_cast<std::size_t>(i)] = LatticeSpline(lattice, field);
    }

    for (std::size_t j = 0; j < nodes; ++j) {
      double* r = R.data() + (static_cast<std::size_t>(m) * nodes + j) * un * un;
      double* s = S.data() + (static_cast<std::size_t>(m) * nodes + j) * un;
      if (lattice.on_boundary_ring(j)) {
        for (int i = 0; i < n; ++i) r[i * n + i] = 1.0;
        continue;
      }
      const Point y = flow.position(m, j);
      Matrix2 A;
      for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k)
          A(i, k) = first[static_cast<std::size_t>(i * n + k)].value(y) + (i == k ? 1.0 : 0.0);
      const Matrix2 G = gram(A, n);
      for (int i = 0; i < n; ++i) {
        for (int k = 0; k < n; ++k) r[i * n + k] = G(i, k);
        s[i] = second[static_cast<std::size_t>(i)].value(y);
      }
    }
  }
  CoefficientField coeffs(lattice, flow.grid(), std::move(R), std::move(S));
  if (!(coeffs.ellipticity() > kEllipticityFloor)) {
    std::ostringstream msg;
    msg << "diffusion coefficient degenerate: ellipticity " << coeffs.ellipticity();
    throw DegenerateCoefficientError(msg.str());
  }
  return coeffs;
}

Matrix2 chain_rule_diffusion(const FlowPath& flow, int step, std::size_t node) {
  const Matrix2 Ji = inverse(flow.jacobian(step, node), flow.dim());
  return gram(Ji, flow.dim());
}

CoefficientHolderReport coefficient_holder_report(const CoefficientField& coeffs, double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw ParameterError("gamma must lie in (0, 1)");
  CoefficientHolderReport r;
  r.gamma = gamma;
  r.space_exponent = std::min(2.0 * gamma, 1.0);
  StateSeries rs, ss;
  const int n = coeffs.dim();
  for (int m = 0; m < coeffs.grid().nodes(); ++m) {
    const auto rd = coeffs.diffusion_slice(m);
    const auto sd = coeffs.drift_slice(m);
    rs.push(coeffs.grid().time(m), rd);
    ss.push(coeffs.grid().time(m), sd);
    r.R_space = std::max(r.R_space, spatial_holder_seminorm(coeffs.lattice(), rd, n * n, r.space_exponent));
    r.S_space = std::max(r.S_space, spatial_holder_seminorm(coeffs.lattice(), sd, n, r.space_exponent));
  }
  const StateNorm sup{};
  r.R_time = holder_seminorm(rs, sup, gamma).seminorm;
  r.S_time = holder_seminorm(ss, sup, gamma).seminorm;
  return r;
}

std::string to_json(const CoefficientHolderReport& r) {
  return nlohmann::json{{"gamma", r.gamma},   {"space_exponent", r.space_exponent}, {"R_time", r.R_time},
                        {"S_time", r.S_time}, {"R_space", r.R_space},             {"S_space", r.S_space}}
      .dump(2);
}

}  // namespace sacflow
