#include "gibbs/models/losses.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "gibbs/core/errors.hpp"

namespace gibbs::models {

namespace {

void check_sizes(std::span<const double> prediction, std::span<const double> y) {
  if (prediction.size() != y.size())
    throw DomainError(fmt::format("prediction has dimension {}, observation {}", prediction.size(), y.size()));
}

}  // namespace

double SquaredL2Loss::raw_discrepancy(std::span<const double> prediction, std::span<const double> y) const {
  check_sizes(prediction, y);
  double acc = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) acc += (prediction[k] - y[k]) * (prediction[k] - y[k]);
  return acc;
}

std::shared_ptr<const LossModel> SquaredL2Loss::with_scale(double scale) const {
  return std::make_shared<SquaredL2Loss>(forward_ptr(), scale);
}

std::optional<double> SquaredL2Loss::log_partition(std::size_t d) const {
  return 0.5 * static_cast<double>(d) * std::log(std::numbers::pi / scale());
}

double L1Loss::raw_discrepancy(std::span<const double> prediction, std::span<const double> y) const {
  check_sizes(prediction, y);
  double acc = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) acc += std::abs(prediction[k] - y[k]);
  return acc;
}

std::shared_ptr<const LossModel> L1Loss::with_scale(double scale) const {
  return std::make_shared<L1Loss>(forward_ptr(), scale);
}

std::optional<double> L1Loss::log_partition(std::size_t d) const {
  return static_cast<double>(d) * std::log(2.0 / scale());
}

GaussianNllLoss::GaussianNllLoss(std::shared_ptr<const ForwardModel> forward, double scale, double sigma)
    : LossModel(std::move(forward), scale), sigma_(sigma) {
  if (!(2.0 * std::numbers::pi * sigma_ * sigma_ >= 1.0) || !std::isfinite(sigma_))
    throw ConfigurationError(
        fmt::format("gaussian-nll: sigma = {} gives a negative loss; need sigma >= 1/sqrt(2 pi)", sigma_));
}

double GaussianNllLoss::raw_discrepancy(std::span<const double> prediction, std::span<const double> y) const {
  check_sizes(prediction, y);
  const double per_point = 0.5 * std::log(2.0 * std::numbers::pi * sigma_ * sigma_);
  double acc = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) {
    const double r = prediction[k] - y[k];
    acc += r * r / (2.0 * sigma_ * sigma_) + per_point;
  }
  return acc;
}

std::shared_ptr<const LossModel> GaussianNllLoss::with_scale(double scale) const {
  return std::make_shared<GaussianNllLoss>(forward_ptr(), scale, sigma_);
}

std::optional<double> GaussianNllLoss::log_partition(std::size_t d) const {
  const double c = scale();
  const double per_point = 0.5 * std::log(2.0 * std::numbers::pi * sigma_ * sigma_);
  return static_cast<double>(d) *
         (-c * per_point + 0.5 * std::log(2.0 * std::numbers::pi * sigma_ * sigma_ / c));
}

LaplaceNllLoss::LaplaceNllLoss(std::shared_ptr<const ForwardModel> forward, double scale, double width)
    : LossModel(std::move(forward), scale), width_(width) {
  if (!(2.0 * width_ >= 1.0) || !std::isfinite(width_))
    throw ConfigurationError(fmt::format("laplace-nll: width = {} gives a negative loss; need width >= 1/2", width_));
}

double LaplaceNllLoss::raw_discrepancy(std::span<const double> prediction, std::span<const double> y) const {
  check_sizes(prediction, y);
  const double per_point = std::log(2.0 * width_);
  double acc = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) acc += std::abs(prediction[k] - y[k]) / width_ + per_point;
  return acc;
}

std::shared_ptr<const LossModel> LaplaceNllLoss::with_scale(double scale) const {
  return std::make_shared<LaplaceNllLoss>(forward_ptr(), scale, width_);
}

std::optional<double> LaplaceNllLoss::log_partition(std::size_t d) const {
  const double c = scale();
  return static_cast<double>(d) * (-c * std::log(2.0 * width_) + std::log(2.0 * width_ / c));
}

std::vector<std::string> builtin_loss_names() { return {"squared-l2", "l1", "gaussian-nll", "laplace-nll"}; }

std::map<std::string, std::shared_ptr<const LossModel>> builtin_losses(std::shared_ptr<const ForwardModel> forward,
                                                                       double scale) {
  std::map<std::string, std::shared_ptr<const LossModel>> out;
  for (const auto& name : builtin_loss_names()) out.emplace(name, make_loss(name, forward, scale));
  return out;
}

std::shared_ptr<const LossModel> make_loss(const std::string& name, std::shared_ptr<const ForwardModel> forward,
                                           double scale, double parameter) {
  if (name == "squared-l2") return std::make_shared<SquaredL2Loss>(std::move(forward), scale);
  if (name == "l1") return std::make_shared<L1Loss>(std::move(forward), scale);
  if (name == "gaussian-nll") return std::make_shared<GaussianNllLoss>(std::move(forward), scale, parameter);
  if (name == "laplace-nll") return std::make_shared<LaplaceNllLoss>(std::move(forward), scale, parameter);
  throw ConfigurationError(fmt::format("unknown loss '{}'", name));
}

void IdentityForwardModel::apply(std::span<const double> theta, std::span<double> out) const {
  if (theta.size() != dimension_ || out.size() != dimension_)
    throw DomainError(fmt::format("identity model expects dimension {}, got {}", dimension_, theta.size()));
  std::copy(theta.begin(), theta.end(), out.begin());
}

}  // namespace gibbs::models
