#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "gibbs/app/config.hpp"

namespace gibbs::app {

enum ExitCode : int { kOk = 0, kVerificationFailed = 1, kConfigurationError = 2, kIoError = 3 };

/// Each command writes its files under config.out, echoes the effective config
/// there, appends timestamps to run.log and prints a short summary to `out`.
/// Errors propagate as exceptions; exit_code_for maps them.
int cmd_simulate(const RunConfig& config, std::ostream& out);
int cmd_calibrate(const RunConfig& config, std::ostream& out);
/// Samples the full posterior from a checkpoint (default: the one selected by
/// calibrate), or at W = 1 without calibration when config.bayes is set.
int cmd_sample(const RunConfig& config, const std::optional<std::filesystem::path>& checkpoint, std::ostream& out);
int cmd_select(const RunConfig& config, std::ostream& out);
/// stability | w-continuity | approximation | consistency | predictive | inequalities | oracle-equivalence
int cmd_verify(const RunConfig& config, const std::string& suite, std::ostream& out);

std::vector<std::string> verify_suites();

/// Exit code for the exception currently being handled.
int exit_code_for_current_exception(std::ostream& err);

}  // namespace gibbs::app
