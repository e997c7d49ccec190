#include <CLI11.hpp>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "sacflow/error.hpp"
#include "sacflow/keyvalue.hpp"
#include "sacflow_app/commands.hpp"
#include "sacflow_app/config.hpp"

namespace {

constexpr int kRuntimeError = 1;
constexpr int kConfigError = 2;

std::string describe(const std::string& name) {
  if (name == "simulate") return "sample one path; write the flow, coefficients and both solution routes";
  if (name == "rate-flow") return "minimize the control cost for the configured flow-probe event";
  if (name == "rate-ac") return "minimize the control cost for the configured Allen-Cahn event";
  if (name == "mc-scan") return "Monte Carlo probability of the event along the sigma ladder";
  if (name == "report") return "compare a scan with a rate result and extrapolate to sigma = 0";
  if (name == "verify") return "run the built-in invariant checks for every module";
  if (name == "grr") return "Hoelder, GRR and moment diagnostics on Brownian field paths and one flow";
  return "";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Stochastic Allen-Cahn equations with transport noise: flows, transformed solves and rate estimates"};
  cli.require_subcommand(1);

  std::optional<std::string> config_path;
  sacflow::app::Overrides overrides;
  sacflow::app::ReportInputs report;

  for (const std::string& name : sacflow::app::subcommands()) {
    CLI::App* sub = cli.add_subcommand(name, describe(name));
    sub->add_option("--config", config_path, "key = value experiment file (defaults apply when omitted)");
    sub->add_option("--seed", overrides.seed, "master seed");
    sub->add_option("--out", overrides.output_dir, "output directory");
    sub->add_option("--threads", overrides.threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--route", overrides.route, "solution route for Monte Carlo")->check(CLI::IsMember({"flow", "direct"}));
    if (name == "report") {
      sub->add_option("--scan", report.scan_path, "scan table JSON (default: <out>/scan.json)");
      sub->add_option("--rate", report.rate_path, "rate result JSON (default: <out>/rate_flow.json or rate_ac.json)");
    }
  }

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = cli.exit(e);
    return code == 0 ? 0 : kConfigError;
  }
  const std::string subcommand = cli.get_subcommands().front()->get_name();

  sacflow::app::ExperimentConfig config;
  try {
    auto kv = config_path ? sacflow::KeyValueText::load(*config_path) : sacflow::KeyValueText::parse("");
    config = sacflow::app::load_config(std::move(kv), overrides);
  } catch (const sacflow::ConfigError& e) {
    std::cerr << "config error: " << (config_path ? *config_path + ": " : "") << e.what() << "\n";
    return kConfigError;
  } catch (const sacflow::Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  }

  try {
    return sacflow::app::run(config, subcommand, std::cout, report);
  } catch (const sacflow::ConfigError& e) {
    std::cerr << "config error: " << (config_path ? *config_path + ": " : "") << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << subcommand << " failed: " << e.what() << "\n";
    return kRuntimeError;
  }
}
