#include <doctest.h>

#include <cmath>
#include <sstream>

#include "sacflow/error.hpp"
#include "sacflow/flow.hpp"
#include "sacflow/rng.hpp"
#include "sacflow/transform.hpp"
#include "support.hpp"

using namespace sacflow;
using testing::line;
using testing::unit_box;

namespace {

struct Realization {
  FlowPath flow;
  FlowPath inverse;
  CoefficientField coeffs;
};

Realization realize(const ModeSet& spec, const FieldPath& path, const Lattice& lattice) {
  FlowPath flow = integrate_stratonovich(spec, path, lattice);
  FlowPath inverse = invert_flow(flow);
  CoefficientField coeffs = build_coefficients(flow, inverse);
  return {std::move(flow), std::move(inverse), std::move(coeffs)};
}

}  // namespace

TEST_SUITE("transform") {
  TEST_CASE("identity flow gives R = Id and S = 0 exactly") {
    const ModeSet spec = ModeSet::sine_law(unit_box(2), 4, 0.5);
    const Lattice lat(unit_box(2), {8, 8});
    const auto r = realize(spec, sample_path(spec, TimeGrid(0.1, 10), 0.0, 1), lat);
    for (int m = 0; m <= 10; m += 5)
      for (std::size_t j = 0; j < lat.size(); ++j) {
        const Matrix2 R = r.coeffs.R(m, j);
        CHECK(R(0, 0) == 1.0);
        CHECK(R(1, 1) == 1.0);
        CHECK(R(0, 1) == 0.0);
        CHECK(R(1, 0) == 0.0);
        CHECK(r.coeffs.S(m, j)[0] == 0.0);
        CHECK(r.coeffs.S(m, j)[1] == 0.0);
      }
    CHECK(r.coeffs.ellipticity() == 1.0);
  }

  TEST_CASE("CoefficientField::identity") {
    const CoefficientField c = CoefficientField::identity(line(4), TimeGrid(1.0, 2));
    CHECK(c.R(2, 3)(0, 0) == 1.0);
    CHECK(c.S(1, 2)[0] == 0.0);
    CHECK(c.ellipticity() == 1.0);
  }

  TEST_CASE("rigid translation on a plateau leaves R and S trivial there") {
    const ModeSet spec = testing::plateau_mode(0.5);
    const Lattice lat = line(128);
    const auto r = realize(spec, sample_path(spec, TimeGrid(0.1, 200), 0.05, 3), lat);
    // nodes whose image stays well inside the flat region
    for (std::size_t j = 48; j <= 80; ++j) {
      CHECK(r.coeffs.R(200, j)(0, 0) == doctest::Approx(1.0).epsilon(1e-6));
      CHECK(std::abs(r.coeffs.S(200, j)[0]) <= 1e-4);
    }
  }

  TEST_CASE("linear mode on its plateau scales R by the inverse squared stretch") {
    std::vector<Mode> modes(2);
    modes[1] = Mode{ModeShape::linear, 1.0, 0, {1, 1}};
    const ModeSet spec(unit_box(), 0.0, modes, 0.5);
    const Lattice lat = line(256);
    const FieldPath path = sample_path(spec, TimeGrid(0.05, 200), 0.05, 21);
    const auto r = realize(spec, path, lat);
    double w = 0.0;
    for (int m = 0; m < 200; ++m) w += path.increment(m, 1);
    // phi = x exp(-W) on the plateau, so (phi^{-1})' = exp(W)
    for (std::size_t j = 112; j <= 144; j += 4) {
      CHECK(r.coeffs.R(200, j)(0, 0) == doctest::Approx(std::exp(2.0 * w)).epsilon(1e-4));
      CHECK(std::abs(r.coeffs.S(200, j)[0]) <= 1e-3);
    }
  }

  TEST_CASE("R agrees with the chain-rule route") {
    const ModeSet spec = ModeSet::sine_law(unit_box(), 8, 0.5);
    const Lattice lat = line(128);
    const auto r = realize(spec, sample_path(spec, TimeGrid(0.1, 1000), 0.1, derive_seed(20261019, "chain")), lat);
    double worst = 0.0;
    for (int m = 0; m <= 1000; m += 20)
      for (std::size_t j = 0; j < lat.size(); ++j)
        worst = std::max(worst, std::abs(r.coeffs.R(m, j)(0, 0) - chain_rule_diffusion(r.flow, m, j)(0, 0)));
    CHECK(worst <= 1e-4);
  }

  TEST_CASE("two-dimensional coefficients") {
    const ModeSet spec = ModeSet::sine_law(unit_box(2), 6, 0.5);
    const Lattice lat(unit_box(2), {24, 24});
    const auto r = realize(spec, sample_path(spec, TimeGrid(0.05, 200), 0.1, 8), lat);
    double asym = 0.0, chain = 0.0;
    for (int m = 0; m <= 200; m += 50)
      for (std::size_t j = 0; j < lat.size(); ++j) {
        const Matrix2 R = r.coeffs.R(m, j);
        asym = std::max(asym, std::abs(R(0, 1) - R(1, 0)));
        if (lat.on_boundary_ring(j)) {
          CHECK(R(0, 0) == 1.0);
          CHECK(R(1, 1) == 1.0);
          CHECK(R(0, 1) == 0.0);
          CHECK(r.coeffs.S(m, j)[0] == 0.0);
        } else {
          const Matrix2 C = chain_rule_diffusion(r.flow, m, j);
          for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) chain = std::max(chain, std::abs(R(a, b) - C(a, b)));
        }
      }
    CHECK(asym <= 1e-14);
    CHECK(chain <= 1e-2);
    CHECK(r.coeffs.ellipticity() > 0.0);
  }

  TEST_CASE("a collapsed inverse is reported as degenerate") {
    const Lattice lat = line(16);
    const TimeGrid grid(0.1, 1);
    std::vector<double> ident(2 * lat.size()), squashed(2 * lat.size());
    for (std::size_t j = 0; j < lat.size(); ++j) {
      ident[j] = ident[lat.size() + j] = squashed[j] = lat.node(j)[0];
      squashed[lat.size() + j] = lat.on_boundary_ring(j) ? lat.node(j)[0] : 0.5;
    }
    const FlowPath flow(lat, grid, FlowKind::stratonovich, ident);
    const FlowPath inverse(lat, grid, FlowKind::stratonovich, squashed, true);
    CHECK_THROWS_AS(build_coefficients(flow, inverse), DegenerateCoefficientError);
    CHECK_THROWS_AS(build_coefficients(flow, flow), ParameterError);
  }

  TEST_CASE("coefficient Hoelder report") {
    SUBCASE("constant coefficients have zero seminorms") {
      const auto rep = coefficient_holder_report(CoefficientField::identity(line(16), TimeGrid(0.1, 20)), 0.4);
      CHECK(rep.R_time == 0.0);
      CHECK(rep.S_time == 0.0);
      CHECK(rep.R_space == 0.0);
      CHECK(rep.space_exponent == doctest::Approx(0.8));
    }
    SUBCASE("gamma outside (0,1) is rejected") {
      CHECK_THROWS_AS(coefficient_holder_report(CoefficientField::identity(line(4), TimeGrid(0.1, 2)), 1.0), ParameterError);
    }
    SUBCASE("smooth drift flow is stable under joint refinement") {
      std::vector<Mode> modes(2);
      modes[0] = Mode{ModeShape::sine, 1.0, 0, {1, 1}};
      const ModeSet spec(unit_box(), 0.0, modes);
      std::vector<CoefficientHolderReport> reps;
      for (int level = 0; level < 2; ++level) {
        const int cells = 64 << level, steps = 100 << level;
        const auto r = realize(spec, sample_path(spec, TimeGrid(0.1, steps), 0.0, 1), line(cells));
        reps.push_back(coefficient_holder_report(r.coeffs, 0.4));
      }
      CHECK(reps[1].R_time / reps[0].R_time <= 1.2);
      CHECK(reps[1].S_time / reps[0].S_time <= 1.2);
      CHECK(reps[1].R_space / reps[0].R_space <= 1.2);
      CHECK(reps[1].S_space / reps[0].S_space <= 1.2);
      CHECK(reps[1].R_time > 0.0);
    }
    SUBCASE("time seminorm under refinement of one path") {
      const ModeSet spec = ModeSet::sine_law(unit_box(), 4, 0.5);
      const Lattice lat = line(64);
      FieldPath path = sample_path(spec, TimeGrid(0.1, 250), 0.1, derive_seed(5, "holder"));
      std::vector<double> below, above;
      for (int level = 0; level < 3; ++level) {
        const auto r = realize(spec, path, lat);
        below.push_back(coefficient_holder_report(r.coeffs, 0.4).R_time);
        above.push_back(coefficient_holder_report(r.coeffs, 0.6).R_time);
        path = refine_path(path, derive_seed(5, "refine", static_cast<std::uint64_t>(level)));
      }
      CHECK(below[2] / below[0] <= 1.2);
      CHECK(above[1] > above[0]);
      CHECK(above[2] > above[1]);
    }
  }

  TEST_CASE("CSV and JSON output") {
    const CoefficientField c = CoefficientField::identity(line(2), TimeGrid(0.1, 1));
    std::ostringstream out;
    c.write_csv(out, 1);
    CHECK(out.str().rfind("node,x0,R00,S0\n", 0) == 0);
    CHECK(c.ellipticity_json().find("\"ellipticity\"") != std::string::npos);
  }
}
