#pragma once

#include <string>

#include "sacflow/ldp.hpp"

namespace sacflow::app {

/// JSON round trip of optimizer results (control included) and Monte Carlo tables.
std::string to_json(const RateResult& rate);
RateResult rate_from_json(const std::string& text);

std::string to_json(const ScanTable& scan);
ScanTable scan_from_json(const std::string& text);

/// CSV: segment,t_start,t_end,mode,value
std::string control_csv(const Control& control);

}  // namespace sacflow::app
