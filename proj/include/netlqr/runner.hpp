#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "netlqr/config.hpp"
#include "netlqr/errors.hpp"

namespace netlqr {

enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 1,
  kExitNumerical = 2,
  kExitVerificationGap = 3,
};

int exit_code_for(const Error& error);

struct RunOverrides {
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> paths;
  std::optional<double> tolerance;
  bool svg = false;
};

void apply_overrides(ExperimentConfig& config, const RunOverrides& overrides);

struct RunOutcome {
  int exit_code = kExitOk;
  std::string message;  // one-paragraph human summary
};

// Runs the pipeline of `mode` and writes report.json, summary.csv, mode
// specific CSVs, optional SVGs and manifest.json under config.output.
// Module errors propagate as netlqr::Error.
RunOutcome run_experiment(const ExperimentConfig& config, RunMode mode);

}  // namespace netlqr
