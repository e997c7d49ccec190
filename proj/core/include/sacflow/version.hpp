#pragma once

#include <string>

namespace sacflow {

/// Library version, e.g. "0.1.0".
std::string library_version();

/// JSON object naming the library version, the compiler and the versions of the linked dependencies.
std::string build_info_json();

}  // namespace sacflow
