#include "sacflow_app/serialize.hpp"

#include <nlohmann/json.hpp>
#include <sstream>

#include "sacflow/error.hpp"

namespace sacflow::app {

using nlohmann::json;

namespace {

json parse(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("cannot parse ") + what + ": " + e.what());
  }
}

template <typename F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw Error(std::string("malformed ") + what + ": " + e.what());
  }
}

}  // namespace

std::string to_json(const RateResult& r) {
  const Control& c = r.control;
  json j{{"cost", r.cost},
         {"achieved_target_distance", r.achieved_target_distance},
         {"iterations", r.iterations},
         {"converged", r.converged},
         {"final_mu", r.final_mu},
         {"truncation", {{"modes", r.truncation_modes}, {"segments", r.truncation_segments}}},
         {"control",
          {{"horizon", c.grid().horizon()},
           {"steps", c.grid().steps()},
           {"modes", c.modes()},
           {"segments", c.segments()},
           {"coefficients", c.coefficients()}}}};
  if (!r.converged) j["flag"] = "non-converged";
  return j.dump(2);
}

RateResult rate_from_json(const std::string& text) {
  const json j = parse(text, "rate result");
  return guarded("rate result", [&] {
    RateResult r;
    r.cost = j.at("cost").get<double>();
    r.achieved_target_distance = j.at("achieved_target_distance").get<double>();
    r.iterations = j.at("iterations").get<int>();
    r.converged = j.at("converged").get<bool>();
    r.final_mu = j.at("final_mu").get<double>();
    r.truncation_modes = j.at("truncation").at("modes").get<int>();
    r.truncation_segments = j.at("truncation").at("segments").get<int>();
    const json& c = j.at("control");
    r.control = Control(TimeGrid(c.at("horizon").get<double>(), c.at("steps").get<int>()), c.at("modes").get<int>(),
                        c.at("segments").get<int>(), c.at("coefficients").get<std::vector<double>>());
    return r;
  });
}

std::string to_json(const ScanTable& s) {
  json rows = json::array();
  for (const ScanRow& r : s.rows)
    rows.push_back({{"sigma", r.sigma},
                    {"samples", r.samples},
                    {"hits", r.hits},
                    {"p_hat", r.p_hat},
                    {"wilson_lo", r.wilson_lo},
                    {"wilson_hi", r.wilson_hi},
                    {"sigma_log_p", r.sigma_log_p},
                    {"lower_bound_only", r.lower_bound_only}});
  json event{{"observable", to_string(s.event.observable)},
             {"probe", {s.event.probe[0], s.event.probe[1]}},
             {"axis", s.event.axis},
             {"threshold", s.event.threshold},
             {"direction", to_string(s.event.direction)},
             {"reference", s.event.reference ? json(*s.event.reference) : json(nullptr)}};
  return json{{"event", event}, {"route", to_string(s.route)}, {"reference", s.reference}, {"seed", s.seed}, {"rows", rows}}
      .dump(2);
}

ScanTable scan_from_json(const std::string& text) {
  const json j = parse(text, "scan table");
  return guarded("scan table", [&] {
    ScanTable s;
    const json& e = j.at("event");
    s.event.observable = parse_observable(e.at("observable").get<std::string>());
    const auto probe = e.at("probe").get<std::vector<double>>();
    if (probe.size() != 2) throw Error("malformed scan table: probe needs two components");
    s.event.probe = {probe[0], probe[1]};
    s.event.axis = e.at("axis").get<int>();
    s.event.threshold = e.at("threshold").get<double>();
    s.event.direction = parse_direction(e.at("direction").get<std::string>());
    if (!e.at("reference").is_null()) s.event.reference = e.at("reference").get<double>();
    s.route = parse_route(j.at("route").get<std::string>());
    s.reference = j.at("reference").get<double>();
    s.seed = j.at("seed").get<std::uint64_t>();
    for (const json& r : j.at("rows")) {
      ScanRow row;
      row.sigma = r.at("sigma").get<double>();
      row.samples = r.at("samples").get<std::size_t>();
      row.hits = r.at("hits").get<std::size_t>();
      row.p_hat = r.at("p_hat").get<double>();
      row.wilson_lo = r.at("wilson_lo").get<double>();
      row.wilson_hi = r.at("wilson_hi").get<double>();
      row.sigma_log_p = r.at("sigma_log_p").get<double>();
      row.lower_bound_only = r.at("lower_bound_only").get<bool>();
      s.rows.push_back(row);
    }
    return s;
  });
}

std::string control_csv(const Control& control) {
  std::ostringstream out;
  out.precision(17);
  out << "segment,t_start,t_end,mode,value\n";
  const double len = control.segment_duration();
  for (int k = 0; k < control.segments(); ++k)
    for (int l = 1; l <= control.modes(); ++l)
      out << k << ',' << k * len << ',' << (k + 1) * len << ',' << l << ',' << control.coefficient(k, l) << '\n';
  return out.str();
}

}  // namespace sacflow::app
