#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sacflow/field.hpp"
#include "sacflow/grid.hpp"
#include "sacflow/keyvalue.hpp"
#include "sacflow/ldp.hpp"
#include "sacflow/pde.hpp"

namespace sacflow::app {

/// Settings of the Hoelder and Garsia-Rodemich-Rumsey diagnostics.
struct GrrSettings {
  double alpha = 0.4;
  double p = 8.0;
  double q = 1.0;
  std::size_t ensemble = 100;
};

/// Everything one experiment needs, resolved from key-value text with defaults filled in.
struct ExperimentConfig {
  ModeSet field = ModeSet::sine_law(Box{}, 8, 0.5);
  Lattice lattice;
  TimeGrid grid;
  double sigma = 0.1;
  std::vector<double> ladder;
  std::size_t samples = 1000;
  EventSpec event;
  InitialData u0 = InitialData::constant(0.0);
  RateOptions rate;
  /// "event": constrain the event observable; "deterministic": reproduce the noise-free endpoint.
  std::string ac_target = "event";
  GrrSettings grr;
  std::string output_dir = "out";
  std::uint64_t seed = 20261019;
  unsigned threads = 1;
  Route route = Route::flow;
  /// Source line of every key present in the file.
  std::map<std::string, int> key_lines;
};

/// ConfigError for `key`, anchored at its source line when the key came from the file.
[[noreturn]] void config_error(const ExperimentConfig& config, const std::string& key, const std::string& message);

/// Command line overrides applied on top of the file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
  std::optional<unsigned> threads;
  std::optional<std::string> route;
};

/// Parse and validate. Throws ConfigError carrying the line and key of the offending entry
/// (line 0 when the value came from a default or an override).
ExperimentConfig load_config(KeyValueText kv, const Overrides& overrides = {});

/// Every resolved field as sorted `key=value` lines with round-trip number formatting.
std::string canonical_text(const ExperimentConfig& config);

/// 64-bit FNV-1a of canonical_text, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

}  // namespace sacflow::app
