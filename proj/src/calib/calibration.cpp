#include "gibbs/calib/calibration.hpp"

#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "gibbs/core/errors.hpp"
#include "gibbs/util/numeric.hpp"
#include "json.hpp"

namespace gibbs::calib {

namespace {

void check_shape(std::span<const double> losses, std::span<const double> log_weights, std::size_t n) {
  if (n == 0 || log_weights.empty() || losses.size() != log_weights.size() * n)
    throw ConfigurationError("loss matrix must be S x n with S, n >= 1");
}

// log sum_j exp(W l_sj) for each particle, over a sorted copy of the row.
std::vector<double> row_normalisers(std::span<const double> losses, std::size_t n, double w) {
  const std::size_t S = losses.size() / n;
  std::vector<double> out(S);
  std::vector<double> scaled(n);
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t j = 0; j < n; ++j) scaled[j] = w * losses[s * n + j];
    std::sort(scaled.begin(), scaled.end());
    out[s] = util::log_sum_exp(scaled);
  }
  return out;
}

std::vector<double> normalised_loo(std::span<const double> losses, std::span<const double> log_weights,
                                   std::span<const double> normalisers, std::size_t n, double w, std::size_t i) {
  const std::size_t S = log_weights.size();
  std::vector<double> log_r(S);
  for (std::size_t s = 0; s < S; ++s) log_r[s] = log_weights[s] + w * losses[s * n + i] - normalisers[s];
  return util::exp_normalized(log_r);
}

}  // namespace

std::vector<double> loo_importance_weights(std::span<const double> losses, std::span<const double> log_weights,
                                           std::size_t n, double w, std::size_t i) {
  check_shape(losses, log_weights, n);
  if (i >= n) throw ConfigurationError(fmt::format("held-out index {} out of range for n = {}", i, n));
  return normalised_loo(losses, log_weights, row_normalisers(losses, n, w), n, w, i);
}

std::vector<double> loo_importance_weights(const smc::ParticleSystem& ps, double w, std::size_t i) {
  return loo_importance_weights(ps.loss_matrix(), ps.log_weights(), ps.data_size(), w, i);
}

RiskEstimate estimate_r_cv(std::span<const double> losses, std::span<const double> log_weights, std::size_t n,
                           double w) {
  check_shape(losses, log_weights, n);
  const auto normalisers = row_normalisers(losses, n, w);
  RiskEstimate out;
  out.per_datum.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = normalised_loo(losses, log_weights, normalisers, n, w, i);
    double acc = 0.0;
    for (std::size_t s = 0; s < r.size(); ++s) acc += r[s] * losses[s * n + i];
    out.per_datum[i] = acc;
  }
  out.r_cv = util::order_free_mean(out.per_datum);
  out.se = util::standard_error_of_mean(out.per_datum);
  return out;
}

RiskEstimate estimate_r_cv(const smc::ParticleSystem& ps, double w) {
  return estimate_r_cv(ps.loss_matrix(), ps.log_weights(), ps.data_size(), w);
}

std::string to_string(SelectionRule rule) { return rule == SelectionRule::Min ? "min" : "one-se"; }

SelectionRule selection_rule_from_string(const std::string& text) {
  if (text == "min") return SelectionRule::Min;
  if (text == "one-se") return SelectionRule::OneStandardError;
  throw ConfigurationError(fmt::format("unknown selection rule '{}' (expected min or one-se)", text));
}

std::size_t select_index(std::span<const CalibrationEntry> entries, SelectionRule rule) {
  std::size_t best = entries.size();
  for (std::size_t t = 0; t < entries.size(); ++t) {
    if (!(entries[t].w > 0.0)) continue;
    if (best == entries.size() || entries[t].r_cv < entries[best].r_cv ||
        (entries[t].r_cv == entries[best].r_cv && entries[t].w < entries[best].w))
      best = t;
  }
  if (best == entries.size()) throw ConfigurationError("calibration report has no entry with W > 0");
  if (rule == SelectionRule::Min) return best;
  const double bound = entries[best].r_cv + entries[best].se;
  std::size_t chosen = best;
  for (std::size_t t = 0; t < entries.size(); ++t) {
    if (entries[t].w > 0.0 && entries[t].r_cv <= bound && entries[t].w < entries[chosen].w) chosen = t;
  }
  return chosen;
}

double select_w(CalibrationReport& report, SelectionRule rule) {
  report.selected = select_index(report.entries, rule);
  report.selected_w = report.entries[report.selected].w;
  report.rule = rule;
  return report.selected_w;
}

std::string CalibrationReport::to_csv() const {
  std::string out = "W,R_CV,SE,ESS,resampled\n";
  for (const auto& e : entries)
    out += fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{}\n", e.w, e.r_cv, e.se, e.ess, e.resampled ? 1 : 0);
  return out;
}

std::string CalibrationReport::to_json() const {
  nlohmann::json j;
  j["rule"] = to_string(rule);
  j["selected_index"] = selected;
  j["selected_w"] = selected_w;
  j["entries"] = nlohmann::json::array();
  for (const auto& e : entries) {
    nlohmann::json row;
    row["w"] = e.w;
    row["grid_index"] = e.grid_index == smc::kInsertedStep ? nlohmann::json(nullptr) : nlohmann::json(e.grid_index);
    row["r_cv"] = e.r_cv;
    row["se"] = e.se;
    row["ess"] = e.ess;
    row["resampled"] = e.resampled;
    row["acceptance_rate"] = e.acceptance_rate;
    j["entries"].push_back(row);
  }
  return j.dump(2);
}

CalibrationResult calibrate(const smc::Problem& problem, const smc::FilterConfig& config, SelectionRule rule) {
  CalibrationResult result;
  result.run = smc::run_calibration_filter(problem, config, [&](const smc::ParticleSystem& ps, const smc::StepRecord& step) {
    const auto risk = estimate_r_cv(ps, step.w);
    result.report.entries.push_back(CalibrationEntry{step.w, step.grid_index, risk.r_cv, risk.se, step.ess,
                                                     step.resampled, step.mutation.acceptance_rate()});
  });
  select_w(result.report, rule);
  return result;
}

void write_report(const CalibrationReport& report, const std::filesystem::path& csv_path,
                  const std::filesystem::path& json_path) {
  std::ofstream csv(csv_path);
  std::ofstream json(json_path);
  if (!csv || !json) throw IoError(fmt::format("cannot write calibration report to '{}'", csv_path.string()));
  csv << report.to_csv();
  json << report.to_json() << '\n';
}

}  // namespace gibbs::calib
