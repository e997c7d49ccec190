#pragma once

#include <string>
#include <vector>

#include "sacflow_app/config.hpp"

namespace sacflow::app {

struct CheckResult {
  std::string module;
  std::string name;
  double value = 0.0;
  double bound = 0.0;
  bool passed = false;
  std::string note;
};

/// Every structural invariant of the library, evaluated on the experiment's field, grids, noise level and seed.
std::vector<CheckResult> run_invariant_suite(const ExperimentConfig& config);

std::string to_json(const std::vector<CheckResult>& checks);

}  // namespace sacflow::app
