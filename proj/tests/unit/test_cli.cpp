#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "sacflow/error.hpp"
#include "sacflow_app/config.hpp"
#include "sacflow_app/parallel.hpp"
#include "sacflow_app/serialize.hpp"

using namespace sacflow;
using namespace sacflow::app;

namespace {

ExperimentConfig load(const std::string& text, const Overrides& o = {}) { return load_config(KeyValueText::parse(text), o); }

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("empty file resolves to the documented defaults") {
    const ExperimentConfig c = load("");
    CHECK(c.field.noise_modes() == 8);
    CHECK(c.field.mode(2).amplitude == doctest::Approx(0.125));
    CHECK(c.grid.horizon() == doctest::Approx(0.1));
    CHECK(c.grid.steps() == 1000);
    CHECK(c.lattice.cells(0) == 128);
    CHECK(c.sigma == 0.1);
    CHECK(c.ladder == std::vector<double>{0.2, 0.1, 0.05});
    CHECK(c.samples == 1000);
    CHECK(c.event.observable == Observable::interface_position);
    CHECK(c.event.direction == Direction::two_sided);
    CHECK_FALSE(c.event.reference.has_value());
    CHECK(c.u0.kind() == InitialData::Kind::tanh);
    CHECK(c.seed == 20261019);
    CHECK(c.route == Route::flow);
    CHECK(c.output_dir == "out");
  }

  TEST_CASE("the shipped default file matches the built-in defaults") {
    const ExperimentConfig shipped = load_config(KeyValueText::load(SACFLOW_CONFIG_DIR "/default.conf"));
    CHECK(canonical_text(shipped) == canonical_text(load("")));
    CHECK(config_hash(shipped) == config_hash(load("")));
  }

  TEST_CASE("validation errors carry the key and its line") {
    const auto expect = [](const std::string& text, int line, const std::string& key) {
      try {
        load(text);
        FAIL("accepted: " << text);
      } catch (const ConfigError& e) {
        CHECK(e.line() == line);
        CHECK(e.key() == key);
        CHECK(std::string(e.what()).find(key) != std::string::npos);
      }
    };
    expect("seed = 3\n\nsigma.ladder = 0.05 0.1 0.2\n", 3, "sigma.ladder");
    expect("sigma.ladder = 0.1 0.1\n", 1, "sigma.ladder");
    expect("grid.T = 0.1\ngrid.dt = 0.03\n", 2, "grid.dt");
    expect("grid.dx = 0.3\n", 1, "grid.dx");
    expect("mc.samples = 99\n", 1, "mc.samples");
    expect("sigma = -1\n", 1, "sigma");
    expect("grid.T = 0.1\nrate.segments = 7\n", 2, "rate.segments");
    expect("event.direction = sideways\n", 1, "event.direction");
    expect("route = teleport\n", 1, "route");
    expect("# comment\nsigam = 0.1\n", 2, "sigam");
    expect("grr.ensemble = 10\n", 1, "grr.ensemble");
  }

  TEST_CASE("overrides replace file values") {
    Overrides o;
    o.seed = 7;
    o.output_dir = "elsewhere";
    o.threads = 4;
    o.route = "direct";
    const ExperimentConfig c = load("seed = 3\nroute = flow\n", o);
    CHECK(c.seed == 7);
    CHECK(c.output_dir == "elsewhere");
    CHECK(c.threads == 4);
    CHECK(c.route == Route::direct);
    Overrides bad;
    bad.route = "sideways";
    CHECK_THROWS_AS(load("", bad), ConfigError);
  }

  TEST_CASE("config hash follows the resolved values") {
    const std::string base = config_hash(load(""));
    CHECK(config_hash(load("sigma = 0.1\nseed = 20261019\n")) == base);
    CHECK(config_hash(load("seed = 20261019\nsigma = 0.1\n")) == base);
    CHECK(config_hash(load("sigma = 0.10000\n")) == base);
    CHECK(config_hash(load("sigma = 0.2\n")) != base);
    CHECK(config_hash(load("field.modes = 4\n")) != base);
    CHECK(config_hash(load("seed = 1\n")) != base);
    Overrides threads;
    threads.threads = 3;
    CHECK(config_hash(load("", threads)) == base);
    CHECK(base.size() == 16);
    CHECK(base.find_first_not_of("0123456789abcdef") == std::string::npos);
  }

  TEST_CASE("rate results round-trip through JSON") {
    RateResult r;
    r.cost = 0.123456789012345;
    r.control = Control(TimeGrid(0.1, 10), 2, 2, {0.1, -0.2, 0.3, 1e-17});
    r.achieved_target_distance = 3e-7;
    r.iterations = 12;
    r.converged = false;
    r.final_mu = 1e4;
    r.truncation_modes = 2;
    r.truncation_segments = 2;
    const std::string text = to_json(r);
    CHECK(text.find("non-converged") != std::string::npos);
    const RateResult back = rate_from_json(text);
    CHECK(back.cost == r.cost);
    CHECK(back.control.coefficients() == r.control.coefficients());
    CHECK(back.control.segments() == 2);
    CHECK(back.control.grid().steps() == 10);
    CHECK(back.iterations == 12);
    CHECK_FALSE(back.converged);
    CHECK(back.final_mu == r.final_mu);
    CHECK(to_json(back) == text);
  }

  TEST_CASE("scan tables round-trip through JSON") {
    ScanTable s;
    s.event.observable = Observable::flow_probe_displacement;
    s.event.probe = {0.5, 0};
    s.event.threshold = 0.1;
    s.event.direction = Direction::below;
    s.route = Route::direct;
    s.reference = 0.4999999999999;
    s.seed = 99;
    ScanRow row;
    row.sigma = 0.05;
    row.samples = 1000;
    row.hits = 0;
    row.lower_bound_only = true;
    row.sigma_log_p = 0.05 * std::log(1e-3);
    s.rows = {row};
    const ScanTable back = scan_from_json(to_json(s));
    CHECK(back.event.observable == s.event.observable);
    CHECK(back.event.direction == Direction::below);
    CHECK(back.reference == s.reference);
    CHECK(back.route == Route::direct);
    CHECK(back.seed == 99);
    REQUIRE(back.rows.size() == 1);
    CHECK(back.rows[0].lower_bound_only);
    CHECK(back.rows[0].sigma_log_p == row.sigma_log_p);
    CHECK(to_json(back) == to_json(s));
    CHECK_THROWS(scan_from_json("{"));
  }

  TEST_CASE("control CSV") {
    const std::string csv = control_csv(Control(TimeGrid(1.0, 4), 1, 2, {0.5, -0.5}));
    CHECK(csv.rfind("segment,t_start,t_end,mode,value\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  }

  TEST_CASE("parallel_for visits every index once and rethrows failures") {
    for (unsigned threads : {1u, 3u}) {
      std::vector<int> hits(1000, 0);
      parallel_for(hits.size(), threads, [&](std::size_t i) { hits[i] += static_cast<int>(i % 7); });
      for (std::size_t i = 0; i < hits.size(); ++i) CHECK(hits[i] == static_cast<int>(i % 7));
    }
    std::atomic<int> calls{0};
    CHECK_THROWS_AS(parallel_for(50, 2,
                                 [&](std::size_t i) {
                                   ++calls;
                                   if (i == 10) throw std::runtime_error("boom");
                                 }),
                    std::runtime_error);
    CHECK(calls.load() <= 50);
    parallel_for(0, 4, [](std::size_t) { FAIL("no work expected"); });
  }

  TEST_CASE("shipped example configs load") {
    for (const char* name : {"gaussian_probe.conf", "interface_shift.conf"}) {
      INFO(name);
      CHECK_NOTHROW(load_config(KeyValueText::parse(slurp(std::string(SACFLOW_CONFIG_DIR) + "/" + name))));
    }
  }
}
