#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "gibbs/oracle/verification.hpp"
#include "gibbs/smc/filter.hpp"
#include "gibbs/smc/particles.hpp"

namespace gibbs::app {

/// Weighted quantile: smallest value whose cumulative weight reaches q.
double weighted_quantile(std::span<const double> values, std::span<const double> weights, double q);

struct ComponentSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double q05 = 0.0;
  double q95 = 0.0;
};

std::vector<ComponentSummary> summarize(const smc::ParticleSystem& ps, const std::vector<std::string>& names);
std::string summary_csv(const std::vector<ComponentSummary>& rows);

/// Pointwise 5% / 95% quantiles and mean of u(theta)(t) for the piecewise-constant model.
struct CredibleBand {
  std::vector<double> t;
  std::vector<double> lower;
  std::vector<double> mean;
  std::vector<double> upper;

  double average_width() const;
  std::string to_csv() const;
};

CredibleBand credible_band(const smc::ParticleSystem& ps, std::size_t blocks, std::size_t points = 101);

/// SMC against brute-force quadrature for every W of the grid on a 1-D problem:
/// posterior mean (full-posterior filter), R_CV and P_CV, averaged over seeds
/// and compared within 3 standard errors.
struct EquivalenceRow {
  double w = 0.0;
  double mean_smc = 0.0, mean_se = 0.0, mean_oracle = 0.0;
  double r_cv_smc = 0.0, r_cv_se = 0.0, r_cv_oracle = 0.0;
  double p_cv_smc = 0.0, p_cv_se = 0.0, p_cv_oracle = 0.0;
};

struct EquivalenceResult {
  std::vector<EquivalenceRow> rows;
  oracle::VerificationReport report;
  std::string to_csv() const;
};

EquivalenceResult oracle_equivalence(const smc::Problem& problem, const smc::FilterConfig& config, std::size_t seeds);

}  // namespace gibbs::app
