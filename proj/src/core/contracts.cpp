#include "gibbs/core/contracts.hpp"

#include <cmath>

#include <fmt/format.h>

#include "gibbs/core/errors.hpp"
#include "gibbs/core/risk.hpp"
#include "gibbs/util/numeric.hpp"

namespace gibbs {

std::vector<double> ForwardModel::apply(const ParameterVector& theta) const {
  std::vector<double> out(output_dimension());
  apply(theta.values(), out);
  return out;
}

LossModel::LossModel(std::shared_ptr<const ForwardModel> forward, double scale)
    : forward_(std::move(forward)), scale_(scale) {
  if (!forward_) throw ConfigurationError("LossModel: forward model is required");
  if (!(scale_ > 0.0) || !std::isfinite(scale_))
    throw ConfigurationError(fmt::format("LossModel: scale must be positive and finite, got {}", scale_));
}

double LossModel::evaluate(const ParameterVector& theta, std::span<const double> y) const {
  std::vector<double> prediction(forward_->output_dimension());
  forward_->apply(theta.values(), prediction);
  for (double v : prediction) {
    if (!std::isfinite(v)) throw NumericalError("forward model output is not finite", theta.to_vector());
  }
  if (y.size() != prediction.size())
    throw DomainError(fmt::format("observation has dimension {}, forward model produces {}",
                                  y.size(), prediction.size()));
  return evaluate_prediction(prediction, y);
}

void LossModel::evaluate_all(std::span<const double> theta, const Dataset& data,
                             std::span<double> out) const {
  if (data.dimension() != forward_->output_dimension())
    throw DomainError(fmt::format("dataset dimension {} does not match forward model output {}",
                                  data.dimension(), forward_->output_dimension()));
  std::vector<double> prediction(forward_->output_dimension());
  forward_->apply(theta, prediction);
  for (double v : prediction) {
    if (!std::isfinite(v))
      throw NumericalError("forward model output is not finite",
                           std::vector<double>(theta.begin(), theta.end()));
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    out[i] = evaluate_prediction(prediction, data.observation(i));
    if (!std::isfinite(out[i]))
      throw NumericalError("loss is not finite", std::vector<double>(theta.begin(), theta.end()));
  }
}

std::vector<double> LossModel::evaluate_all(const ParameterVector& theta, const Dataset& data) const {
  std::vector<double> out(data.size());
  evaluate_all(theta.values(), data, out);
  return out;
}

PriorModel::PriorModel(std::vector<std::string> names)
    : names_(std::make_shared<const std::vector<std::string>>(std::move(names))) {}

ParameterVector PriorModel::sample(Rng& rng) const {
  std::vector<double> values(dimension());
  sample_into(rng, values);
  return ParameterVector(std::move(values), names_);
}

ParameterVector PriorModel::make_parameter(std::vector<double> values) const {
  if (values.size() != dimension())
    throw DomainError(fmt::format("prior expects dimension {}, got {}", dimension(), values.size()));
  return ParameterVector(std::move(values), names_);
}

double average_loss(const LossModel& loss, const ParameterVector& theta, const Dataset& data) {
  const auto losses = loss.evaluate_all(theta, data);
  return util::order_free_mean(losses);
}

double loss_scale_estimate(const Dataset& data) {
  const std::size_t n = data.size();
  if (n < 2) throw DegenerateDataError("loss_scale_estimate: need at least two observations");
  std::vector<double> log_variances;
  std::vector<double> column(n);
  std::vector<double> squares(n);
  for (std::size_t k = 0; k < data.dimension(); ++k) {
    for (std::size_t i = 0; i < n; ++i) column[i] = data.observation(i)[k];
    const double mean = util::order_free_mean(column);
    for (std::size_t i = 0; i < n; ++i) squares[i] = (column[i] - mean) * (column[i] - mean);
    const double variance = util::order_free_sum(squares) / static_cast<double>(n - 1);
    if (variance >= kVarianceFloor) log_variances.push_back(std::log(variance));
  }
  if (log_variances.empty())
    throw DegenerateDataError("loss_scale_estimate: observations have no spread at any grid point");
  const double geometric_mean = std::exp(util::order_free_mean(log_variances));
  const double w0 = 1.0 / (2.0 * geometric_mean);
  if (!std::isfinite(w0)) throw DegenerateDataError("loss_scale_estimate: scale is not finite");
  return w0;
}

}  // namespace gibbs
