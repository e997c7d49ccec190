#include "sacflow/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

#include "sacflow/error.hpp"

namespace sacflow {

void StateSeries::push(double t, std::span<const double> values) {
  if (times.empty() && data.empty()) width = values.size();
  if (values.size() != width) throw ParameterError("state width mismatch");
  times.push_back(t);
  data.insert(data.end(), values.begin(), values.end());
}

double StateNorm::operator()(std::span<const double> v) const {
  double sup = 0.0;
  for (double x : v) sup = std::max(sup, std::abs(x));
  if (kind == StateNormKind::sup) return sup;
  const auto comps = static_cast<std::size_t>(components);
  if (lattice.size() * comps != v.size()) throw ParameterError("C1 norm: lattice does not match the state width");
  double grad = 0.0;
  for (std::size_t j = 0; j < lattice.size(); ++j) {
    const auto c = lattice.coords(j);
    for (int k = 0; k < lattice.dim(); ++k) {
      if (c[static_cast<std::size_t>(k)] == lattice.cells(k)) continue;
      auto cc = c;
      cc[static_cast<std::size_t>(k)] += 1;
      const std::size_t nb = lattice.index(cc[0], cc[1]);
      for (std::size_t a = 0; a < comps; ++a)
        grad = std::max(grad, std::abs(v[nb * comps + a] - v[j * comps + a]) / lattice.spacing(k));
    }
  }
  return sup + grad;
}

namespace {

double state_distance(const StateSeries& s, std::size_t i, std::size_t j, const StateNorm& norm, std::vector<double>& diff) {
  const auto a = s.state(i), b = s.state(j);
  diff.resize(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) diff[k] = a[k] - b[k];
  return norm(diff);
}

}  // namespace

HolderReport holder_seminorm(const StateSeries& values, const StateNorm& norm, double alpha) {
  if (values.size() < 2) throw ParameterError("holder_seminorm needs at least 2 time nodes");
  if (!(alpha >= 0.0 && alpha < 1.0)) throw ParameterError("Hoelder exponent must lie in [0, 1)");
  HolderReport r;
  r.exponent = alpha;
  std::vector<double> diff;
  const std::size_t n = values.size();
  for (std::size_t i = 0; i < n; ++i) r.sup_norm = std::max(r.sup_norm, norm(values.state(i)));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double gap = std::abs(values.times[j] - values.times[i]);
      const double d = state_distance(values, j, i, norm, diff);
      r.seminorm = std::max(r.seminorm, alpha == 0.0 ? d : d / std::pow(gap, alpha));
      ++r.pair_count;
    }
  return r;
}

double grr_rhs(const StateSeries& values, const StateNorm& norm, double alpha, double p) {
  if (p < 1.0) throw ParameterError("GRR moment order p must be >= 1");
  if (!(alpha > 0.0)) throw ParameterError("GRR exponent alpha must be positive");
  const std::size_t n = values.size();
  if (n < 2) throw ParameterError("grr_rhs needs at least 2 time nodes");
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double left = i > 0 ? values.times[i] - values.times[i - 1] : 0.0;
    const double right = i + 1 < n ? values.times[i + 1] - values.times[i] : 0.0;
    w[i] = 0.5 * (left + right);
  }
  const double power = alpha * p + 2.0;
  std::vector<double> diff;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double gap = values.times[j] - values.times[i];
      const double d = state_distance(values, j, i, norm, diff);
      if (d == 0.0) continue;
      sum += 2.0 * w[i] * w[j] * std::pow(d, p) / std::pow(gap, power);
    }
  return std::pow(sum, 1.0 / p);
}

MomentHolderReport moment_holder_check(const std::vector<StateSeries>& ensemble, const StateNorm& norm, double p,
                                       double q) {
  if (ensemble.size() < 100) throw ParameterError("moment_holder_check needs an ensemble of at least 100 paths");
  if (!(p > 0.0 && q > 0.0)) throw ParameterError("moment orders must be positive");
  const std::size_t n = ensemble.front().size();
  if (n < 9) throw ParameterError("moment_holder_check needs at least 9 time nodes");
  for (const auto& s : ensemble)
    if (s.size() != n) throw ParameterError("ensemble paths must share a time grid");
  const double dt = ensemble.front().times[1] - ensemble.front().times[0];

  MomentHolderReport r;
  r.p = p;
  r.q = q;
  r.expected_slope = p / (2.0 * q);
  r.alpha = 1.0 / (2.0 * q) - 1.0 / p - 0.05;
  std::vector<double> diff;
  for (std::size_t lag = 1; lag <= (n - 1) / 4; lag *= 2) {
    double acc = 0.0;
    std::size_t count = 0;
    for (const auto& s : ensemble)
      for (std::size_t i = 0; i + lag < n; ++i) {
        acc += std::pow(state_distance(s, i + lag, i, norm, diff), p);
        ++count;
      }
    r.lags.push_back(static_cast<double>(lag) * dt);
    r.moments.push_back(acc / static_cast<double>(count));
  }

  const bool degenerate = std::all_of(r.moments.begin(), r.moments.end(), [](double m) { return m == 0.0; });
  if (!degenerate && r.lags.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double k = static_cast<double>(r.lags.size());
    for (std::size_t i = 0; i < r.lags.size(); ++i) {
      const double x = std::log(r.lags[i]), y = std::log(std::max(r.moments[i], 1e-300));
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    r.slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
    r.hypothesis_verified = std::abs(r.slope - r.expected_slope) <= 0.2 * r.expected_slope;
  }
  for (std::size_t i = 0; i < r.lags.size(); ++i)
    r.lambda_hat = std::max(r.lambda_hat, r.moments[i] / std::pow(r.lags[i], r.expected_slope));

  if (r.alpha > 0.0) {
    double acc = 0.0;
    for (const auto& s : ensemble) acc += std::pow(holder_seminorm(s, norm, r.alpha).seminorm, p);
    r.mean_seminorm_power = acc / static_cast<double>(ensemble.size());
  }
  r.empirical_constant = r.mean_seminorm_power / (r.lambda_hat + 1.0);
  return r;
}

double spatial_holder_seminorm(const Lattice& lattice, std::span<const double> values, int components, double beta) {
  const auto comps = static_cast<std::size_t>(components);
  if (values.size() != lattice.size() * comps) throw ParameterError("field size does not match the lattice");
  if (!(beta >= 0.0 && beta <= 1.0)) throw ParameterError("spatial Hoelder exponent must lie in [0, 1]");
  const auto diff = [&](std::size_t a, std::size_t b) {
    double d = 0.0;
    for (std::size_t c = 0; c < comps; ++c) d = std::max(d, std::abs(values[a * comps + c] - values[b * comps + c]));
    return d;
  };
  double best = 0.0;
  for (int axis = 0; axis < lattice.dim(); ++axis) {
    const int other = lattice.dim() == 2 ? lattice.nodes_along(1 - axis) : 1;
    const int len = lattice.nodes_along(axis);
    const double h = lattice.spacing(axis);
    for (int o = 0; o < other; ++o)
      for (int i = 0; i < len; ++i)
        for (int k = i + 1; k < len; ++k) {
          const std::size_t a = axis == 0 ? lattice.index(i, o) : lattice.index(o, i);
          const std::size_t b = axis == 0 ? lattice.index(k, o) : lattice.index(o, k);
          best = std::max(best, diff(a, b) / std::pow((k - i) * h, beta));
        }
  }
  return best;
}

std::string to_json(const HolderReport& r) {
  return nlohmann::json{{"exponent", r.exponent}, {"seminorm", r.seminorm}, {"sup_norm", r.sup_norm}, {"pair_count", r.pair_count}}
      .dump(2);
}

std::string to_json(const MomentHolderReport& r) {
  return nlohmann::json{{"p", r.p},
                        {"q", r.q},
                        {"lags", r.lags},
                        {"moments", r.moments},
                        {"slope", r.slope},
                        {"expected_slope", r.expected_slope},
                        {"lambda_hat", r.lambda_hat},
                        {"alpha", r.alpha},
                        {"mean_seminorm_power", r.mean_seminorm_power},
                        {"empirical_constant", r.empirical_constant},
                        {"hypothesis_verified", r.hypothesis_verified}}
      .dump(2);
}

}  // namespace sacflow
