#pragma once

#include <span>
#include <vector>

namespace sacflow {

/// Solve a tridiagonal system in place (Thomas algorithm).
/// `lower[0]` and `upper[n-1]` are ignored. `rhs` is overwritten with the solution.
/// Requires a diagonally dominant or otherwise pivot-free matrix; throws SolverError on a zero pivot.
void solve_tridiagonal(std::span<const double> lower, std::span<const double> diag, std::span<const double> upper,
                       std::span<double> rhs, std::vector<double>& scratch);

/// Thomas factorization of a fixed tridiagonal matrix, for repeated solves with the same operator.
class TridiagonalFactor {
 public:
  TridiagonalFactor() = default;
  TridiagonalFactor(std::span<const double> lower, std::span<const double> diag, std::span<const double> upper);
  void solve(std::span<double> rhs) const;
  bool empty() const { return ratio_.empty(); }

 private:
  std::vector<double> lower_, ratio_, inverse_pivot_;
};

}  // namespace sacflow
