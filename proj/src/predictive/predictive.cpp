#include "gibbs/predictive/predictive.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <fmt/format.h>

#include "gibbs/core/errors.hpp"
#include "gibbs/util/numeric.hpp"
#include "gibbs/util/parallel.hpp"
#include "json.hpp"

namespace gibbs::predictive {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct LineIntegral {
  double value = 0.0;
  double error = 0.0;
};

// Integral over the real line split at the given points.
template <typename F>
LineIntegral integrate_line(F&& f, std::vector<double> cuts) {
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  using Rule = boost::math::quadrature::gauss_kronrod<double, 31>;
  double total = 0.0;
  double error = 0.0;
  double lo = -kInf;
  for (std::size_t k = 0; k <= cuts.size(); ++k) {
    const double hi = k < cuts.size() ? cuts[k] : kInf;
    double piece_error = 0.0;
    total += Rule::integrate(f, lo, hi, 12, 1e-12, &piece_error);
    error += piece_error;
    lo = hi;
  }
  return {total, error};
}

double checked(LineIntegral r) {
  if (!std::isfinite(r.value) || !(r.value > 0.0) || r.error > 1e-6 * r.value)
    throw UnsupportedLossError(fmt::format(
        "exp(-L) has no finite positive integral against the reference (value {}, error {})", r.value, r.error));
  return r.value;
}

double numeric_partition(std::span<const double> prediction, const LossModel& loss, const PartitionOptions& options) {
  const std::size_t d = prediction.size();
  if (d == 0 || d > 2)
    throw UnsupportedLossError(fmt::format("numeric partition needs output dimension 1 or 2, got {}", d));
  const bool gaussian = options.reference == Reference::Gaussian;
  auto weight = [&](double y) {
    if (!gaussian) return 1.0;
    const double z = y / options.reference_sd;
    return std::exp(-0.5 * z * z) / (options.reference_sd * std::sqrt(2.0 * std::numbers::pi));
  };
  std::vector<double> y(d);
  if (d == 1) {
    return checked(integrate_line(
        [&](double a) {
          y[0] = a;
          return std::exp(-loss.evaluate_prediction(prediction, y)) * weight(a);
        },
        {prediction[0], 0.0}));
  }
  return checked(integrate_line(
      [&](double a) {
        std::vector<double> inner(2);
        inner[0] = a;
        return weight(a) * integrate_line(
                               [&](double b) {
                                 inner[1] = b;
                                 return std::exp(-loss.evaluate_prediction(prediction, inner)) * weight(b);
                               },
                               {prediction[1], 0.0})
                                   .value;
      },
      {prediction[0], 0.0}));
}

void require_options(const PartitionOptions& options) {
  if (options.reference == Reference::Gaussian && !(options.reference_sd > 0.0))
    throw ConfigurationError("Gaussian reference needs a positive standard deviation");
}

}  // namespace

double log_loss_partition(std::span<const double> theta, const LossModel& loss, const PartitionOptions& options) {
  require_options(options);
  const std::size_t d = loss.forward().output_dimension();
  if (options.reference == Reference::Lebesgue && loss.translation_invariant()) {
    if (const auto closed = loss.log_partition(d)) return *closed;
  }
  if (!options.numeric_fallback)
    throw UnsupportedLossError(fmt::format("loss '{}' has no closed-form partition under this reference; "
                                           "enable the numeric fallback (output dimension <= 2)",
                                           loss.name()));
  std::vector<double> prediction(d);
  loss.forward().apply(theta, prediction);
  return std::log(numeric_partition(prediction, loss, options));
}

double loss_partition(const ParameterVector& theta, const LossModel& loss, const PartitionOptions& options) {
  return std::exp(log_loss_partition(theta.values(), loss, options));
}

double log_reference_density(std::span<const double> y, const PartitionOptions& options) {
  if (options.reference == Reference::Lebesgue) return 0.0;
  double acc = 0.0;
  for (double v : y) {
    const double z = v / options.reference_sd;
    acc += -0.5 * z * z - std::log(options.reference_sd) - 0.5 * std::log(2.0 * std::numbers::pi);
  }
  return acc;
}

std::vector<double> log_partitions(const smc::ParticleSystem& ps, const LossModel& loss,
                                   const PartitionOptions& options) {
  const std::size_t d = loss.forward().output_dimension();
  if (options.reference == Reference::Lebesgue && loss.translation_invariant()) {
    if (const auto closed = loss.log_partition(d)) return std::vector<double>(ps.size(), *closed);
  }
  std::vector<double> out(ps.size());
  util::parallel_for(ps.size(), [&](std::size_t s) { out[s] = log_loss_partition(ps.particle(s), loss, options); });
  return out;
}

PredictiveDensity log_predictive_density(const smc::ParticleSystem& ps, std::span<const double> y_new,
                                         const LossModel& loss, const PartitionOptions& options) {
  const auto log_z = log_partitions(ps, loss, options);
  std::vector<double> numer(ps.size()), denom(ps.size());
  std::vector<double> prediction(loss.forward().output_dimension());
  for (std::size_t s = 0; s < ps.size(); ++s) {
    loss.forward().apply(ps.particle(s), prediction);
    numer[s] = ps.log_weights()[s] - loss.evaluate_prediction(prediction, y_new);
    denom[s] = ps.log_weights()[s] + log_z[s];
  }
  PredictiveDensity out;
  out.log_reference = log_reference_density(y_new, options);
  const double top = util::log_sum_exp(numer);
  out.log_density = top - util::log_sum_exp(denom) + out.log_reference;
  if (top == util::kNegInf)
    out.diagnostic = "exp(-L) underflowed for every particle; the predictive density is numerically zero here";
  return out;
}

PredictiveEstimate estimate_p_cv(std::span<const double> losses, std::span<const double> log_weights,
                                 std::span<const double> log_z, std::span<const double> log_lambda, std::size_t n,
                                 double w) {
  const std::size_t S = log_weights.size();
  if (n == 0 || S == 0 || losses.size() != S * n || log_z.size() != S || !(log_lambda.empty() || log_lambda.size() == n))
    throw ConfigurationError("estimate_p_cv: inconsistent shapes");
  std::vector<double> normalisers(S), scaled(n);
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t j = 0; j < n; ++j) scaled[j] = w * losses[s * n + j];
    std::sort(scaled.begin(), scaled.end());
    normalisers[s] = util::log_sum_exp(scaled);
  }
  PredictiveEstimate out;
  out.per_datum.resize(n);
  util::parallel_for(n, [&](std::size_t i) {
    std::vector<double> log_r(S), a(S), b(S);
    for (std::size_t s = 0; s < S; ++s) log_r[s] = log_weights[s] + w * losses[s * n + i] - normalisers[s];
    const double lse = util::log_sum_exp(log_r);
    for (std::size_t s = 0; s < S; ++s) {
      const double lr = log_r[s] - lse;
      a[s] = lr + log_z[s];
      b[s] = lr - losses[s * n + i];
    }
    out.per_datum[i] = util::log_sum_exp(a) - util::log_sum_exp(b) - (log_lambda.empty() ? 0.0 : log_lambda[i]);
  });
  out.p_cv = util::order_free_mean(out.per_datum);
  out.se = util::standard_error_of_mean(out.per_datum);
  return out;
}

PredictiveEstimate estimate_p_cv(const smc::ParticleSystem& ps, double w, const LossModel& loss, const Dataset& data,
                                 const PartitionOptions& options) {
  if (data.size() != ps.data_size()) throw ConfigurationError("dataset size does not match the particle system");
  const auto log_z = log_partitions(ps, loss, options);
  std::vector<double> log_lambda;
  if (options.reference != Reference::Lebesgue) {
    for (std::size_t i = 0; i < data.size(); ++i) log_lambda.push_back(log_reference_density(data.observation(i), options));
  }
  return estimate_p_cv(ps.loss_matrix(), ps.log_weights(), log_z, log_lambda, ps.data_size(), w);
}

PredictiveReport compare_models(std::span<const Candidate> candidates, const Dataset& data,
                                const PartitionOptions& options) {
  if (candidates.empty()) throw ConfigurationError("compare_models needs at least one candidate");
  const auto hash = data.content_hash();
  PredictiveReport report;
  for (const auto& c : candidates) {
    if (!c.loss) throw ConfigurationError(fmt::format("candidate '{}' has no loss", c.name));
    if (c.dataset_hash != hash)
      throw ConfigurationError(fmt::format("candidate '{}' was fitted to a different dataset", c.name));
    const auto est = estimate_p_cv(c.system, c.w, *c.loss, data, options);
    if (!std::isfinite(est.p_cv))
      throw NumericalError(fmt::format("P_CV for candidate '{}' is not finite", c.name), {});
    report.ranking.push_back(PredictiveEntry{c.name, c.w, est.p_cv, est.se});
  }
  std::stable_sort(report.ranking.begin(), report.ranking.end(),
                   [](const auto& a, const auto& b) { return a.p_cv < b.p_cv; });
  for (std::size_t a = 0; a < report.ranking.size(); ++a) {
    for (std::size_t b = a + 1; b < report.ranking.size(); ++b) {
      const auto& x = report.ranking[a];
      const auto& y = report.ranking[b];
      if (x.p_cv == y.p_cv) report.ties.emplace_back(a, b);
      if (std::abs(x.p_cv - y.p_cv) < x.se + y.se) report.overlaps.emplace_back(a, b);
    }
  }
  return report;
}

std::string PredictiveReport::to_json() const {
  nlohmann::json j;
  j["ranking"] = nlohmann::json::array();
  for (const auto& e : ranking) j["ranking"].push_back({{"model", e.name}, {"w", e.w}, {"p_cv", e.p_cv}, {"se", e.se}});
  j["overlaps"] = overlaps;
  j["ties"] = ties;
  return j.dump(2);
}

std::string PredictiveReport::to_table() const {
  std::string out = fmt::format("{:<16} {:>12} {:>14} {:>12}\n", "model", "W", "P_CV", "SE");
  for (const auto& e : ranking) out += fmt::format("{:<16} {:>12.6g} {:>14.6g} {:>12.4g}\n", e.name, e.w, e.p_cv, e.se);
  for (const auto& [a, b] : overlaps)
    out += fmt::format("overlap: {} and {} differ by less than their combined SE\n", ranking[a].name, ranking[b].name);
  return out;
}

}  // namespace gibbs::predictive
