#include "sacflow/version.hpp"

#include <Eigen/Core>
#include <ceres/version.h>
#include <nlohmann/json.hpp>

namespace sacflow {

std::string library_version() { return SACFLOW_VERSION_STRING; }

std::string build_info_json() {
  nlohmann::json info;
  info["sacflow"] = library_version();
  info["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                  std::to_string(EIGEN_MINOR_VERSION);
  info["ceres"] = CERES_VERSION_STRING;
  info["nlohmann_json"] = std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                          std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                          std::to_string(NLOHMANN_JSON_VERSION_PATCH);
#if defined(__clang__)
  info["compiler"] = "clang " __clang_version__;
#elif defined(__GNUC__)
  info["compiler"] = "gcc " __VERSION__;
#else
  info["compiler"] = "unknown";
#endif
  return info.dump();
}

}  // namespace sacflow
