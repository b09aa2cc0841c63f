#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "gibbs/smc/filter.hpp"

namespace gibbs::calib {

/// Self-normalised leave-one-out weights over particles for held-out datum i:
/// r_i(s) proportional to w_s exp(W l_si) / sum_j exp(W l_sj).
/// `losses` is S x n row-major and `log_weights` has S entries.
std::vector<double> loo_importance_weights(std::span<const double> losses, std::span<const double> log_weights,
                                           std::size_t n, double w, std::size_t i);
std::vector<double> loo_importance_weights(const smc::ParticleSystem& ps, double w, std::size_t i);

struct RiskEstimate {
  double r_cv = 0.0;
  /// Standard deviation of the per-datum terms over sqrt(n).
  double se = 0.0;
  /// sum_s r_i(s) l_si for each held-out i.
  std::vector<double> per_datum;
};

/// R_CV(W) = (1/n) sum_i sum_s r_i(s) l_si. Works for any S >= 1.
RiskEstimate estimate_r_cv(std::span<const double> losses, std::span<const double> log_weights, std::size_t n,
                           double w);
RiskEstimate estimate_r_cv(const smc::ParticleSystem& ps, double w);

enum class SelectionRule { Min, OneStandardError };

std::string to_string(SelectionRule rule);
SelectionRule selection_rule_from_string(const std::string& text);

struct CalibrationEntry {
  double w = 0.0;
  std::size_t grid_index = 0;
  double r_cv = 0.0;
  double se = 0.0;
  double ess = 1.0;
  bool resampled = false;
  double acceptance_rate = 0.0;
};

struct CalibrationReport {
  std::vector<CalibrationEntry> entries;
  std::size_t selected = 0;
  double selected_w = 0.0;
  SelectionRule rule = SelectionRule::OneStandardError;

  /// Columns W, R_CV, SE, ESS, resampled.
  std::string to_csv() const;
  std::string to_json() const;
};

/// Index of the chosen entry among those with W > 0. Ties go to the smaller W.
/// Throws ConfigurationError when no entry has W > 0.
std::size_t select_index(std::span<const CalibrationEntry> entries, SelectionRule rule);
/// Fills report.selected and report.selected_w and returns W*.
double select_w(CalibrationReport& report, SelectionRule rule);

struct CalibrationResult {
  smc::FilterRun run;
  CalibrationReport report;
};

/// Runs the calibration filter, records R_CV at every visited W and selects W*.
CalibrationResult calibrate(const smc::Problem& problem, const smc::FilterConfig& config, SelectionRule rule);

void write_report(const CalibrationReport& report, const std::filesystem::path& csv_path,
                  const std::filesystem::path& json_path);

}  // namespace gibbs::calib
