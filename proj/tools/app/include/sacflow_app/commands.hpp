#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sacflow_app/config.hpp"

namespace sacflow::app {

/// Inputs of `report` that do not belong to the experiment itself.
struct ReportInputs {
  std::optional<std::string> scan_path;
  std::optional<std::string> rate_path;
};

/// Collects artifacts in the output directory, each written atomically, and finishes with a manifest.
class ArtifactWriter {
 public:
  explicit ArtifactWriter(std::string directory);
  void write(const std::string& name, const std::string& contents);
  /// manifest.json: subcommand, config hash, seed, versions and a checksum per artifact.
  void finish(const ExperimentConfig& config, const std::string& subcommand);
  const std::string& directory() const { return directory_; }

 private:
  struct Entry {
    std::string name;
    std::size_t bytes;
    std::string checksum;
  };
  std::string directory_;
  std::vector<Entry> entries_;
};

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"simulate", "rate-flow", "rate-ac", "mc-scan", "report", "verify", "grr"};
  return names;
}

/// Run one subcommand. Returns the process exit status (0 success, 1 failed invariant).
/// Library errors propagate; a mismatch between subcommand and config raises ConfigError.
int run(const ExperimentConfig& config, const std::string& subcommand, std::ostream& log,
        const ReportInputs& report = {});

}  // namespace sacflow::app
