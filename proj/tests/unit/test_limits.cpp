// Refinement claims that the discretization cannot meet. They are checked as stated and
// registered as their own ctest so the other suites stay meaningful.
#include <doctest.h>

#include <cmath>
#include <nlohmann/json.hpp>

#include "sacflow/analysis.hpp"
#include "sacflow/flow.hpp"
#include "sacflow/ldp.hpp"
#include "sacflow/rng.hpp"
#include "support.hpp"

using namespace sacflow;

TEST_SUITE("limits") {
  TEST_CASE("drift-only cocycle defect halves with the time step") {
    std::vector<Mode> modes(2);
    modes[0] = Mode{ModeShape::sine, 2.0, 0, {1, 1}};
    const ModeSet spec(testing::unit_box(), 0.0, modes);
    const Lattice lat = testing::line(128);
    std::vector<double> defect;
    for (int steps : {100, 200, 400, 800})
      defect.push_back(cocycle_defect(spec, sample_path(spec, TimeGrid(0.2, steps), 0.0, 1), lat, 0.0, 0.1, 0.2));
    for (std::size_t k = 1; k < defect.size(); ++k) {
      INFO("defects " << defect[k - 1] << " -> " << defect[k]);
      const double ratio = defect[k - 1] / defect[k];
      CHECK(ratio >= 1.5);
      CHECK(ratio <= 3.0);
    }
  }

  TEST_CASE("Brownian seminorm above one half grows by 1.3 per refinement") {
    const StateNorm sup{};
    FieldPath p = sample_path(testing::plateau_mode(1.0), TimeGrid(1.0, 256), 1.0, derive_seed(20261019, "holder-brownian"));
    double previous = 0.0;
    for (int level = 0; level < 4; ++level) {
      StateSeries s;
      double w = 0.0;
      s.push(0.0, std::vector<double>{w});
      for (int m = 0; m < p.grid().steps(); ++m) {
        w += p.increment(m, 1);
        s.push(p.grid().time(m + 1), std::vector<double>{w});
      }
      const double now = holder_seminorm(s, sup, 0.55).seminorm;
      if (previous > 0.0) {
        INFO("seminorm " << previous << " -> " << now);
        CHECK(now / previous >= 1.3);
      }
      previous = now;
      p = refine_path(p, derive_seed(20261019, "bridge", static_cast<std::uint64_t>(level)));
    }
  }

  TEST_CASE("constant-mode scan extrapolates to within 10 percent of the rate") {
    const double c = 0.5, T = 0.1, d = 0.1;
    EventSpec e;
    e.observable = Observable::flow_probe_displacement;
    e.probe = {0.5, 0};
    e.threshold = d;
    e.direction = Direction::two_sided;
    const ScanTable scan = mc_probability_scan(e, testing::plateau_mode(c), testing::line(64), TimeGrid(T, 1000),
                                               InitialData::constant(0.0), {0.2, 0.1, 0.05}, 10000, 20261019);
    RateResult rate;
    rate.cost = d * d / (2 * c * c * T);
    rate.converged = true;
    const auto report = nlohmann::json::parse(ldp_report(scan, rate));
    REQUIRE(report["extrapolation"].is_object());
    const double intercept = report["extrapolation"]["intercept"].get<double>();
    INFO("intercept " << intercept);
    CHECK(std::abs(intercept + rate.cost) <= 0.1 * rate.cost);
  }
}
