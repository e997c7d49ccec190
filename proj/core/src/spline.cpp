#include "sacflow/spline.hpp"

#include <algorithm>
#include <cmath>

#include "sacflow/error.hpp"
#include "sacflow/linalg.hpp"

namespace sacflow {

namespace {

struct Basis {
  double v0, v1, s0, s1;  // value weights for endpoints 0/1 and slope weights
  double dv0, dv1, ds0, ds1;
};

Basis hermite(double t) {
  const double t2 = t * t, t3 = t2 * t;
  return {2 * t3 - 3 * t2 + 1, -2 * t3 + 3 * t2, t3 - 2 * t2 + t, t3 - t2,
          6 * t2 - 6 * t,      -6 * t2 + 6 * t,  3 * t2 - 4 * t + 1, 3 * t2 - 2 * t};
}

}  // namespace

void clamped_spline_slopes(std::span<const double> y, double h, std::span<double> slopes, std::vector<double>& scratch) {
  const std::size_t n = y.size();
  slopes[0] = 0.0;
  slopes[n - 1] = 0.0;
  if (n <= 2) return;
  const std::size_t k = n - 2;
  std::vector<double> lower(k, 1.0), diag(k, 4.0), upper(k, 1.0);
  for (std::size_t i = 0; i < k; ++i) slopes[i + 1] = 3.0 * (y[i + 2] - y[i]) / h;
  solve_tridiagonal(lower, diag, upper, slopes.subspan(1, k), scratch);
}

LatticeSpline::LatticeSpline(const Lattice& lattice, std::span<const double> values)
    : lattice_(lattice), f_(values.begin(), values.end()) {
  const int n0 = lattice.nodes_along(0);
  const int n1 = lattice.nodes_along(1);
  const double h0 = lattice.spacing(0);
  std::vector<double> scratch, line, slope;
  fx_.assign(f_.size(), 0.0);
  line.resize(static_cast<std::size_t>(std::max(n0, n1)));
  slope.resize(line.size());
  for (int i1 = 0; i1 < n1; ++i1) {
    std::span<const double> row(f_.data() + lattice.index(0, i1), static_cast<std::size_t>(n0));
    clamped_spline_slopes(row, h0, std::span<double>(fx_.data() + lattice.index(0, i1), static_cast<std::size_t>(n0)),
                          scratch);
  }
  if (lattice.dim() == 1) return;

  const double h1 = lattice.spacing(1);
  fy_.assign(f_.size(), 0.0);
  fxy_.assign(f_.size(), 0.0);
  const auto column = [&](const std::vector<double>& src, std::vector<double>& dst) {
    for (int i0 = 0; i0 < n0; ++i0) {
      for (int i1 = 0; i1 < n1; ++i1) line[static_cast<std::size_t>(i1)] = src[lattice.index(i0, i1)];
      clamped_spline_slopes(std::span<const double>(line.data(), static_cast<std::size_t>(n1)), h1,
                            std::span<double>(slope.data(), static_cast<std::size_t>(n1)), scratch);
      for (int i1 = 0; i1 < n1; ++i1) dst[lattice.index(i0, i1)] = slope[static_cast<std::size_t>(i1)];
    }
  };
  column(f_, fy_);
  column(fx_, fxy_);
}

LatticeSpline::Cell LatticeSpline::locate(const Point& x) const {
  Cell c{0, 0, 0.0, 0.0};
  const Box& box = lattice_.box();
  for (int a = 0; a < lattice_.dim(); ++a) {
    const auto k = static_cast<std::size_t>(a);
    const double tol = 1e-9 * box.edge(a);
    if (x[k] < box.lo[k] - tol || x[k] > box.hi[k] + tol || !std::isfinite(x[k]))
      throw DomainError("interpolation point outside the lattice box");
    const double r = (std::clamp(x[k], box.lo[k], box.hi[k]) - box.lo[k]) / lattice_.spacing(a);
    const int i = std::clamp(static_cast<int>(std::floor(r)), 0, lattice_.cells(a) - 1);
    (a == 0 ? c.i0 : c.i1) = i;
    (a == 0 ? c.u : c.v) = r - i;
  }
  return c;
}

double LatticeSpline::value(const Point& x) const {
  Point g;
  return value_and_gradient(x, g);
}

double LatticeSpline::value_and_gradient(const Point& x, Point& grad) const {
  const Cell c = locate(x);
  const double h0 = lattice_.spacing(0);
  const Basis bu = hermite(c.u);
  if (lattice_.dim() == 1) {
    const std::size_t a = static_cast<std::size_t>(c.i0), b = a + 1;
    grad = {(bu.dv0 * f_[a] + bu.dv1 * f_[b]) / h0 + bu.ds0 * fx_[a] + bu.ds1 * fx_[b], 0.0};
    return bu.v0 * f_[a] + bu.v1 * f_[b] + h0 * (bu.s0 * fx_[a] + bu.s1 * fx_[b]);
  }
  const double h1 = lattice_.spacing(1);
  const Basis bv = hermite(c.v);
  const double vu[2] = {bu.v0, bu.v1}, su[2] = {bu.s0 * h0, bu.s1 * h0};
  const double dvu[2] = {bu.dv0 / h0, bu.dv1 / h0}, dsu[2] = {bu.ds0, bu.ds1};
  const double vv[2] = {bv.v0, bv.v1}, sv[2] = {bv.s0 * h1, bv.s1 * h1};
  const double dvv[2] = {bv.dv0 / h1, bv.dv1 / h1}, dsv[2] = {bv.ds0, bv.ds1};
  double val = 0.0, gx = 0.0, gy = 0.0;
  for (int p = 0; p < 2; ++p)
    for (int q = 0; q < 2; ++q) {
      const std::size_t j = lattice_.index(c.i0 + p, c.i1 + q);
      const double f = f_[j], fx = fx_[j], fy = fy_[j], fxy = fxy_[j];
      val += vu[p] * vv[q] * f + su[p] * vv[q] * fx + vu[p] * sv[q] * fy + su[p] * sv[q] * fxy;
      gx += dvu[p] * vv[q] * f + dsu[p] * vv[q] * fx + dvu[p] * sv[q] * fy + dsu[p] * sv[q] * fxy;
      gy += vu[p] * dvv[q] * f + su[p] * dvv[q] * fx + vu[p] * dsv[q] * fy + su[p] * dsv[q] * fxy;
    }
  grad = {gx, gy};
  return val;
}

}  // namespace sacflow
