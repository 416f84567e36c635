#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "netlqr/config.hpp"
#include "netlqr/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Decomposed optimal control of networked linear systems"};
  app.require_subcommand(1);

  std::string config_path;
  netlqr::RunOverrides overrides;
  std::string out;
  std::uint64_t seed = 0;
  std::size_t paths = 0;
  double tol = 0.0;

  const std::pair<netlqr::RunMode, const char*> commands[] = {
      {netlqr::RunMode::Decompose, "spectral decomposition and assumption checks"},
      {netlqr::RunMode::Synthesize, "solve the decoupled Riccati equations"},
      {netlqr::RunMode::Simulate, "simulate the network under the decomposed controller"},
      {netlqr::RunMode::Verify, "compare against the centralized oracle"},
      {netlqr::RunMode::Consensus, "optimal consensus protocol run"},
      {netlqr::RunMode::Bench, "decomposed vs centralized solve times over kron sizes"},
  };
  std::vector<std::pair<CLI::App*, netlqr::RunMode>> subs;
  for (const auto& [mode, help] : commands) {
    CLI::App* sub = app.add_subcommand(netlqr::to_string(mode), help);
    sub->add_option("--config", config_path, "experiment configuration (YAML)")->required();
    sub->add_option("--out", out, "output directory (overrides config)");
    sub->add_option("--seed", seed, "Monte Carlo seed");
    sub->add_option("--paths", paths, "Monte Carlo paths");
    sub->add_flag("--svg", overrides.svg, "also write SVG plots");
    sub->add_option("--tol", tol, "verification tolerance");
    subs.emplace_back(sub, mode);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : netlqr::kExitValidation;
  }

  netlqr::RunMode mode = netlqr::RunMode::Decompose;
  for (const auto& [sub, m] : subs) {
    if (sub->parsed()) {
      mode = m;
      if (sub->count("--out")) overrides.out = out;
      if (sub->count("--seed")) overrides.seed = seed;
      if (sub->count("--paths")) overrides.paths = paths;
      if (sub->count("--tol")) overrides.tolerance = tol;
    }
  }

  try {
    netlqr::ExperimentConfig config = netlqr::parse_config(config_path);
    netlqr::apply_overrides(config, overrides);
    const netlqr::RunOutcome outcome = netlqr::run_experiment(config, mode);
    std::cout << outcome.message << "\n";
    return outcome.exit_code;
  } catch (const netlqr::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return netlqr::exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return netlqr::kExitNumerical;
  }
}
