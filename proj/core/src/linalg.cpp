#include "sacflow/linalg.hpp"

#include <cmath>

#include "sacflow/error.hpp"

namespace sacflow {

void solve_tridiagonal(std::span<const double> lower, std::span<const double> diag, std::span<const double> upper,
                       std::span<double> rhs, std::vector<double>& scratch) {
  const std::size_t n = diag.size();
  scratch.resize(n);
  double pivot = diag[0];
  if (pivot == 0.0 || !std::isfinite(pivot)) throw SolverError("tridiagonal solve: zero pivot in row 0");
  scratch[0] = n > 1 ? upper[0] / pivot : 0.0;
  rhs[0] /= pivot;
  for (std::size_t i = 1; i < n; ++i) {
    pivot = diag[i] - lower[i] * scratch[i - 1];
    if (pivot == 0.0 || !std::isfinite(pivot)) throw SolverError("tridiagonal solve: zero pivot");
    scratch[i] = i + 1 < n ? upper[i] / pivot : 0.0;
    rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / pivot;
  }
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= scratch[i] * rhs[i + 1];
}

TridiagonalFactor::TridiagonalFactor(std::span<const double> lower, std::span<const double> diag,
                                     std::span<const double> upper)
    : lower_(lower.begin(), lower.end()), ratio_(diag.size()), inverse_pivot_(diag.size()) {
  const std::size_t n = diag.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double pivot = i == 0 ? diag[0] : diag[i] - lower[i] * ratio_[i - 1];
    if (pivot == 0.0 || !std::isfinite(pivot)) throw SolverError("tridiagonal factorization: zero pivot");
    inverse_pivot_[i] = 1.0 / pivot;
    ratio_[i] = i + 1 < n ? upper[i] / pivot : 0.0;
  }
}

void TridiagonalFactor::solve(std::span<double> rhs) const {
  const std::size_t n = ratio_.size();
  rhs[0] *= inverse_pivot_[0];
  for (std::size_t i = 1; i < n; ++i) rhs[i] = (rhs[i] - lower_[i] * rhs[i - 1]) * inverse_pivot_[i];
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= ratio_[i] * rhs[i + 1];
}

}  // namespace sacflow
