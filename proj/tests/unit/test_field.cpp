#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "sacflow/error.hpp"
#include "sacflow/field.hpp"
#include "sacflow/keyvalue.hpp"
#include "sacflow/rng.hpp"
#include "support.hpp"

using namespace sacflow;
using testing::unit_box;

namespace {

// sine-bump shape written out independently: c sin(w pi xhat) (1 - s^2)^4 with s = 2 xhat - 1
double sine_bump(double c, int w, double x) {
  const double s = 2.0 * x - 1.0;
  return c * std::sin(w * std::numbers::pi * x) * std::pow(1.0 - s * s, 4);
}

}  // namespace

TEST_SUITE("field") {
  TEST_CASE("covariance of two sine bumps matches direct summation") {
    const ModeSet spec = ModeSet::sine_law(unit_box(), 2, 0.5);
    for (auto [x, y] : {std::pair{0.5, 0.5}, std::pair{0.3, 0.6}, std::pair{0.81, 0.12}}) {
      const double expected = sine_bump(0.5, 1, x) * sine_bump(0.5, 1, y) + sine_bump(0.125, 2, x) * sine_bump(0.125, 2, y);
      CHECK(covariance(spec, 0.0, {x, 0}, {y, 0})(0, 0) == doctest::Approx(expected).epsilon(1e-13));
    }
  }

  TEST_CASE("covariance vanishes when a point leaves the support") {
    const ModeSet spec = ModeSet::sine_law(unit_box(), 4, 0.5, 0.1);
    CHECK(covariance(spec, 0.0, {0.05, 0}, {0.5, 0})(0, 0) == 0.0);
    CHECK(covariance(spec, 0.0, {0.5, 0}, {0.95, 0})(0, 0) == 0.0);
    CHECK(covariance(spec, 0.0, {0.1, 0}, {0.1, 0})(0, 0) == 0.0);
    CHECK_THROWS_AS(covariance(spec, 0.0, {1.5, 0}, {0.5, 0}), DomainError);
  }

  TEST_CASE("single mode covariance is the rank-one outer product") {
    const ModeSet spec = ModeSet::sine_law(unit_box(2), 1, 0.7);
    const Point x{0.3, 0.55};
    const Point v = spec.value(1, 0.0, x);
    const Matrix2 a = covariance(spec, 0.0, x, x);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) CHECK(a(i, j) == doctest::Approx(v[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(j)]));
    CHECK(min_eigenvalue_sym(a, 2) >= -1e-15);
  }

  TEST_CASE("covariance is symmetric and positive semidefinite on lattice pairs") {
    const ModeSet spec = ModeSet::sine_law(unit_box(2), 6, 0.5);
    const Lattice lat(unit_box(2), {12, 12});
    double asym = 0.0, min_eig = 0.0;
    for (std::size_t i = 0; i < lat.size(); i += 3) {
      const Point x = lat.node(i);
      min_eig = std::min(min_eig, min_eigenvalue_sym(covariance(spec, 0.0, x, x), 2));
      for (std::size_t j = 0; j < lat.size(); j += 5) {
        const Matrix2 a = covariance(spec, 0.0, x, lat.node(j)), b = covariance(spec, 0.0, lat.node(j), x);
        for (int p = 0; p < 2; ++p)
          for (int q = 0; q < 2; ++q) asym = std::max(asym, std::abs(a(p, q) - b(q, p)));
      }
    }
    CHECK(asym == 0.0);
    CHECK(min_eig >= -1e-12);
  }

  TEST_CASE("sup_trace_bound") {
    const Lattice lat = testing::line(64);
    const TimeGrid grid(0.5, 50);
    SUBCASE("zero field") {
      std::vector<Mode> modes(3);
      CHECK(sup_trace_bound(ModeSet(unit_box(), 0.0, modes), lat, grid) == 0.0);
    }
    SUBCASE("one time-independent mode gives T max |X|^2") {
      const ModeSet spec = ModeSet::sine_law(unit_box(), 1, 0.8);
      CHECK(sup_trace_bound(spec, lat, grid) == doctest::Approx(0.5 * 0.64).epsilon(1e-14));
    }
    SUBCASE("modulated two-mode field against refined quadrature") {
      const ModeSet base = ModeSet::sine_law(unit_box(), 2, 0.5);
      const ModeSet spec(base.box(), 0.0, base.modes(), 0.5, TimeModulation{0.4, 3.0});
      double oracle = 0.0;
      for (std::size_t j = 0; j < lat.size(); ++j) {
        const double x = lat.node(j)[0];
        const double space = std::pow(sine_bump(0.5, 1, x), 2) + std::pow(sine_bump(0.125, 2, x), 2);
        // int_0^T (1 + a sin(2 pi f t))^2 dt by a midpoint rule on 10^5 cells
        double time = 0.0;
        const int n = 100000;
        for (int k = 0; k < n; ++k) {
          const double t = 0.5 * (k + 0.5) / n;
          time += std::pow(1.0 + 0.4 * std::sin(2.0 * std::numbers::pi * 3.0 * t), 2) * 0.5 / n;
        }
        oracle = std::max(oracle, space * time);
      }
      CHECK(sup_trace_bound(spec, lat, TimeGrid(0.5, 2000)) == doctest::Approx(oracle).epsilon(1e-5));
    }
  }

  TEST_CASE("sample_path") {
    const ModeSet spec = ModeSet::sine_law(unit_box(), 3, 0.5);
    const TimeGrid grid(1.0, 1000);
    SUBCASE("zero noise gives zero increments") {
      const FieldPath p = sample_path(spec, grid, 0.0, 7);
      for (double v : p.increments()) CHECK(v == 0.0);
    }
    SUBCASE("fixed seed reproduces the path") {
      CHECK(sample_path(spec, grid, 0.3, 11).increments() == sample_path(spec, grid, 0.3, 11).increments());
      CHECK(sample_path(spec, grid, 0.3, 11).increments() != sample_path(spec, grid, 0.3, 12).increments());
    }
    SUBCASE("negative sigma is rejected") { CHECK_THROWS_AS(sample_path(spec, grid, -0.1, 1), ParameterError); }
    SUBCASE("second moment of normalized increments over 10^5 draws") {
      const ModeSet one = ModeSet::sine_law(unit_box(), 1, 1.0);
      const TimeGrid g(1.0, 100000);
      const FieldPath p = sample_path(one, g, 1.0, 2026);
      double mean = 0.0;
      for (int m = 0; m < g.steps(); ++m) mean += p.increment(m, 1) * p.increment(m, 1) / g.dt();
      CHECK(mean / g.steps() == doctest::Approx(1.0).epsilon(0.02));
    }
    SUBCASE("increments are scaled by sqrt(sigma)") {
      const FieldPath unit = sample_path(spec, grid, 1.0, 5), scaled = sample_path(spec, grid, 0.25, 5);
      for (std::size_t i = 0; i < unit.increments().size(); ++i) CHECK(scaled.increments()[i] == doctest::Approx(0.5 * unit.increments()[i]));
    }
  }

  TEST_CASE("per-mode variance within 5 percent over 10^4 draws") {
    const ModeSet spec = ModeSet::sine_law(unit_box(), 5, 0.5);
    const TimeGrid grid(0.1, 20000);
    const FieldPath p = sample_path(spec, grid, 1.0, derive_seed(20261019, "variance"));
    for (int l = 1; l <= 5; ++l) {
      double s = 0.0, s2 = 0.0;
      for (int m = 0; m < grid.steps(); ++m) {
        const double z = p.increment(m, l) / std::sqrt(grid.dt());
        s += z;
        s2 += z * z;
      }
      const double n = grid.steps();
      CHECK((s2 - s * s / n) / (n - 1) == doctest::Approx(1.0).epsilon(0.05));
    }
  }

  TEST_CASE("evaluate_field_increment") {
    std::vector<Mode> modes(3);
    modes[0] = Mode{ModeShape::sine, 2.0, 0, {1, 1}};
    modes[1] = Mode{ModeShape::sine, 0.5, 0, {1, 1}};
    modes[2] = Mode{ModeShape::sine, 0.25, 0, {3, 3}};
    const ModeSet spec(unit_box(), 0.1, modes);
    const TimeGrid grid(1.0, 4);
    SUBCASE("zero noise leaves the drift term") {
      const FieldPath p = sample_path(spec, grid, 0.0, 1);
      const Point x{0.4, 0};
      CHECK(evaluate_field_increment(spec, p, 2, x)[0] == doctest::Approx(spec.value(0, 0.5, x)[0] * 0.25));
    }
    SUBCASE("hand-set increments") {
      // sqrt(sigma) dB = (0.3, -0.2) at step 1
      const FieldPath p(grid, 2, {0, 0, 0.3, -0.2, 0, 0, 0, 0}, 1.0, 0);
      const double x = 0.5;  // xhat = 0.5 on the support (0.1, 0.9)
      const double expected = 0.3 * sine_bump(0.5, 1, 0.5) - 0.2 * sine_bump(0.25, 3, 0.5) + 0.25 * sine_bump(2.0, 1, 0.5);
      CHECK(evaluate_field_increment(spec, p, 1, {x, 0})[0] == doctest::Approx(expected).epsilon(1e-14));
    }
    SUBCASE("zero outside the support") {
      const FieldPath p = sample_path(spec, grid, 1.0, 3);
      for (double x : {0.0, 0.05, 0.1, 0.9, 0.97, 1.0}) CHECK(evaluate_field_increment(spec, p, 0, {x, 0})[0] == 0.0);
    }
    SUBCASE("step out of range") {
      const FieldPath p = sample_path(spec, grid, 1.0, 3);
      CHECK_THROWS_AS(evaluate_field_increment(spec, p, 4, {0.5, 0}), IndexError);
    }
  }

  TEST_CASE("sampled fields vanish on and outside the support boundary") {
    const ModeSet spec = ModeSet::sine_law(unit_box(2), 6, 0.5, 0.125);
    const Lattice lat(unit_box(2), {16, 16});
    const TimeGrid grid(0.1, 50);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const FieldPath p = sample_path(spec, grid, 0.1, seed);
      double worst = 0.0;
      for (std::size_t j = 0; j < lat.size(); ++j) {
        if (spec.support().strictly_contains(lat.node(j))) continue;
        for (int m = 0; m < grid.steps(); ++m) worst = std::max(worst, norm(evaluate_field_increment(spec, p, m, lat.node(j)), 2));
      }
      CHECK(worst == 0.0);
    }
  }

  TEST_CASE("modes are smooth inside the support") {
    // second differences of every mode stay bounded as the spacing shrinks
    const ModeSet spec = ModeSet::sine_law(unit_box(), 8, 0.5);
    double previous = 0.0;
    for (int cells : {64, 128, 256}) {
      const double h = 1.0 / cells;
      double worst = 0.0;
      for (int l = 1; l <= 8; ++l)
        for (int i = 1; i < cells; ++i) {
          const double x = i * h;
          const double d2 = (spec.value(l, 0, {x + h, 0})[0] - 2 * spec.value(l, 0, {x, 0})[0] + spec.value(l, 0, {x - h, 0})[0]) / (h * h);
          worst = std::max(worst, std::abs(d2));
        }
      if (previous > 0.0) CHECK(worst == doctest::Approx(previous).epsilon(0.05));
      previous = worst;
    }
  }

  TEST_CASE("refined path keeps the coarse increments") {
    const ModeSet spec = ModeSet::sine_law(unit_box(), 4, 0.5);
    const FieldPath coarse = sample_path(spec, TimeGrid(0.1, 100), 0.2, 9);
    const FieldPath fine = refine_path(coarse, 10);
    CHECK(fine.grid().steps() == 200);
    for (int m = 0; m < 100; ++m)
      for (int l = 1; l <= 4; ++l)
        CHECK(fine.increment(2 * m, l) + fine.increment(2 * m + 1, l) == doctest::Approx(coarse.increment(m, l)).epsilon(1e-14));
  }

  TEST_CASE("configuration schema") {
    const auto kv = KeyValueText::parse(
        "field.dim = 2\nfield.modes = 3\nfield.amplitude = 0.4\nfield.margin = 0.1\nfield.mode.2 = plateau 0.9 1\n");
    const ModeSet spec = ModeSet::from_config(kv);
    CHECK(spec.dim() == 2);
    CHECK(spec.noise_modes() == 3);
    CHECK(spec.mode(1).amplitude == doctest::Approx(0.4));
    CHECK(spec.mode(3).amplitude == doctest::Approx(0.4 / 9));
    CHECK(spec.mode(2).shape == ModeShape::plateau);
    CHECK(spec.mode(2).component == 1);
    CHECK_THROWS_AS(ModeSet::from_config(KeyValueText::parse("field.dim = 3\n")), ConfigError);
  }

  TEST_CASE("field path CSV") {
    const FieldPath p = sample_path(ModeSet::sine_law(unit_box(), 2, 0.5), TimeGrid(1.0, 3), 1.0, 1);
    std::ostringstream out;
    p.write_csv(out);
    const std::string text = out.str();
    CHECK(text.rfind("step,mode,increment\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 7);
  }
}
