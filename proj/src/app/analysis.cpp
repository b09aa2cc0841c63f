#include "gibbs/app/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "gibbs/calib/calibration.hpp"
#include "gibbs/core/errors.hpp"
#include "gibbs/models/fredholm.hpp"
#include "gibbs/oracle/quadrature.hpp"
#include "gibbs/predictive/predictive.hpp"
#include "gibbs/smc/filter.hpp"
#include "gibbs/util/numeric.hpp"

namespace gibbs::app {

double weighted_quantile(std::span<const double> values, std::span<const double> weights, double q) {
  if (values.empty() || values.size() != weights.size()) throw ConfigurationError("weighted_quantile: size mismatch");
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  const double total = util::order_free_sum(weights);
  double acc = 0.0;
  for (std::size_t k : order) {
    acc += weights[k];
    if (acc >= q * total) return values[k];
  }
  return values[order.back()];
}

std::vector<ComponentSummary> summarize(const smc::ParticleSystem& ps, const std::vector<std::string>& names) {
  const auto w = ps.weights();
  const auto mean = ps.mean();
  const auto cov = ps.covariance();
  const std::size_t p = ps.parameter_dimension();
  std::vector<ComponentSummary> rows;
  std::vector<double> column(ps.size());
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t s = 0; s < ps.size(); ++s) column[s] = ps.particle(s)[j];
    rows.push_back({j < names.size() ? names[j] : fmt::format("theta{}", j + 1), mean[j], std::sqrt(cov[j * p + j]),
                    weighted_quantile(column, w, 0.05), weighted_quantile(column, w, 0.95)});
  }
  return rows;
}

std::string summary_csv(const std::vector<ComponentSummary>& rows) {
  std::string out = "component,mean,sd,q05,q95\n";
  for (const auto& r : rows) out += fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g}\n", r.name, r.mean, r.sd, r.q05, r.q95);
  return out;
}

double CredibleBand::average_width() const {
  std::vector<double> widths(t.size());
  for (std::size_t k = 0; k < t.size(); ++k) widths[k] = upper[k] - lower[k];
  return util::order_free_mean(widths);
}

std::string CredibleBand::to_csv() const {
  std::string out = "t,lower,mean,upper\n";
  for (std::size_t k = 0; k < t.size(); ++k)
    out += fmt::format("{:.17g},{:.17g},{:.17g},{:.17g}\n", t[k], lower[k], mean[k], upper[k]);
  return out;
}

CredibleBand credible_band(const smc::ParticleSystem& ps, std::size_t blocks, std::size_t points) {
  CredibleBand band;
  band.t = models::unit_grid(points);
  const auto w = ps.weights();
  std::vector<models::PiecewiseConstantFunction> functions;
  functions.reserve(ps.size());
  for (std::size_t s = 0; s < ps.size(); ++s)
    functions.push_back(models::PiecewiseConstantFunction::from_parameters(ps.particle(s), blocks));
  std::vector<double> values(ps.size()), terms(ps.size());
  for (double t : band.t) {
    for (std::size_t s = 0; s < ps.size(); ++s) {
      values[s] = functions[s](t);
      terms[s] = w[s] * values[s];
    }
    band.lower.push_back(weighted_quantile(values, w, 0.05));
    band.upper.push_back(weighted_quantile(values, w, 0.95));
    band.mean.push_back(util::order_free_sum(terms));
  }
  return band;
}

std::string EquivalenceResult::to_csv() const {
  std::string out = "W,mean_smc,mean_se,mean_oracle,R_CV_smc,R_CV_se,R_CV_oracle,P_CV_smc,P_CV_se,P_CV_oracle\n";
  for (const auto& r : rows)
    out += fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", r.w,
                       r.mean_smc, r.mean_se, r.mean_oracle, r.r_cv_smc, r.r_cv_se, r.r_cv_oracle, r.p_cv_smc, r.p_cv_se,
                       r.p_cv_oracle);
  return out;
}

EquivalenceResult oracle_equivalence(const smc::Problem& problem, const smc::FilterConfig& config, std::size_t seeds) {
  problem.validate();
  if (problem.prior->dimension() != 1 || problem.data->dimension() != 1)
    throw ConfigurationError("oracle equivalence needs a scalar parameter and scalar observations");
  const auto& grid = config.grid.values();
  const std::size_t n = problem.data->size();
  std::vector<std::vector<double>> means(grid.size()), rcv(grid.size()), pcv(grid.size());
  for (std::uint64_t seed = 1; seed <= seeds; ++seed) {
    auto cfg = config;
    cfg.seed = config.seed + seed - 1;
    const auto run = smc::run_calibration_filter(problem, cfg);
    for (std::size_t t = 0; t < grid.size(); ++t) {
      const auto& ps = run.systems[t];
      rcv[t].push_back(calib::estimate_r_cv(ps, grid[t]).r_cv);
      pcv[t].push_back(predictive::estimate_p_cv(ps, grid[t], *problem.loss, *problem.data).p_cv);
      means[t].push_back(smc::run_full_posterior_filter(ps, problem, grid[t], config.mh_steps).mean()[0]);
    }
  }

  EquivalenceResult result;
  result.report.suite = "oracle-equivalence";
  result.report.x_label = "W";
  result.report.value_label = "mean_smc";
  const auto& loss = *problem.loss;
  const auto& prior = *problem.prior;
  const auto& data = *problem.data;
  for (std::size_t t = 0; t < grid.size(); ++t) {
    const double w = grid[t];
    EquivalenceRow row;
    row.w = w;
    row.mean_oracle = oracle::quadrature_posterior(loss, prior, data, w).mean()[0];
    std::vector<double> risk(n), score(n);
    for (std::size_t i = 0; i < n; ++i) {
      // leave-one-out posterior; with a single datum it is the prior
      const auto post = n == 1 ? oracle::quadrature_posterior(loss, prior, data, 0.0)
                               : oracle::quadrature_posterior(loss, prior, data.without(i), w);
      const auto y = data.observation(i);
      risk[i] = post.expectation([&](std::span<const double> theta) {
        return loss.evaluate(ParameterVector(std::vector<double>(theta.begin(), theta.end())), y);
      });
      score[i] = -oracle::grid_log_predictive(post, loss, y[0]);
    }
    row.r_cv_oracle = util::order_free_mean(risk);
    row.p_cv_oracle = util::order_free_mean(score);
    row.mean_smc = util::order_free_mean(means[t]);
    row.mean_se = util::standard_error_of_mean(means[t]);
    row.r_cv_smc = util::order_free_mean(rcv[t]);
    row.r_cv_se = util::standard_error_of_mean(rcv[t]);
    row.p_cv_smc = util::order_free_mean(pcv[t]);
    row.p_cv_se = util::standard_error_of_mean(pcv[t]);
    auto within = [](double a, double b, double se) { return std::abs(a - b) <= 3.0 * se; };
    result.report.check(fmt::format("W={:g} posterior mean within 3 SE", w), within(row.mean_smc, row.mean_oracle, row.mean_se),
                        fmt::format("{:.6g} vs {:.6g} (SE {:.3g})", row.mean_smc, row.mean_oracle, row.mean_se));
    result.report.check(fmt::format("W={:g} R_CV within 3 SE", w), within(row.r_cv_smc, row.r_cv_oracle, row.r_cv_se),
                        fmt::format("{:.6g} vs {:.6g} (SE {:.3g})", row.r_cv_smc, row.r_cv_oracle, row.r_cv_se));
    result.report.check(fmt::format("W={:g} P_CV within 3 SE", w), within(row.p_cv_smc, row.p_cv_oracle, row.p_cv_se),
                        fmt::format("{:.6g} vs {:.6g} (SE {:.3g})", row.p_cv_smc, row.p_cv_oracle, row.p_cv_se));
    result.report.rows.push_back({w, row.mean_smc, std::nullopt});
    result.rows.push_back(row);
  }
  return result;
}

}  // namespace gibbs::app
