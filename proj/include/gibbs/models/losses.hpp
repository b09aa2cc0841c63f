#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "gibbs/core/contracts.hpp"

namespace gibbs::models {

/// l(p, y) = sum_k (p_k - y_k)^2.
class SquaredL2Loss final : public LossModel {
 public:
  using LossModel::LossModel;
  std::string name() const override { return "squared-l2"; }
  bool translation_invariant() const override { return true; }
  double raw_discrepancy(std::span<const double> prediction, std::span<const double> y) const override;
  std::shared_ptr<const LossModel> with_scale(double scale) const override;
  std::optional<double> log_partition(std::size_t d) const override;
};

/// l(p, y) = sum_k |p_k - y_k|.
class L1Loss final : public LossModel {
 public:
  using LossModel::LossModel;
  std::string name() const override { return "l1"; }
  bool translation_invariant() const override { return true; }
  double raw_discrepancy(std::span<const double> prediction, std::span<const double> y) const override;
  std::shared_ptr<const LossModel> with_scale(double scale) const override;
  std::optional<double> log_partition(std::size_t d) const override;
};

/// Negative log-likelihood of independent N(0, sigma^2) residuals. Nonnegative
/// only when 2 pi sigma^2 >= 1, which the constructor enforces.
class GaussianNllLoss final : public LossModel {
 public:
  GaussianNllLoss(std::shared_ptr<const ForwardModel> forward, double scale, double sigma = 1.0);
  std::string name() const override { return "gaussian-nll"; }
  bool translation_invariant() const override { return true; }
  double raw_discrepancy(std::span<const double> prediction, std::span<const double> y) const override;
  std::shared_ptr<const LossModel> with_scale(double scale) const override;
  std::optional<double> log_partition(std::size_t d) const override;
  double sigma() const noexcept { return sigma_; }

 private:
  double sigma_;
};

/// Negative log-likelihood of independent Laplace(0, b) residuals; needs 2b >= 1.
class LaplaceNllLoss final : public LossModel {
 public:
  LaplaceNllLoss(std::shared_ptr<const ForwardModel> forward, double scale, double width = 1.0);
  std::string name() const override { return "laplace-nll"; }
  bool translation_invariant() const override { return true; }
  double raw_discrepancy(std::span<const double> prediction, std::span<const double> y) const override;
  std::shared_ptr<const LossModel> with_scale(double scale) const override;
  std::optional<double> log_partition(std::size_t d) const override;
  double width() const noexcept { return width_; }

 private:
  double width_;
};

/// Names accepted by make_loss.
std::vector<std::string> builtin_loss_names();

/// One instance of every built-in loss family over `forward`, keyed by name.
std::map<std::string, std::shared_ptr<const LossModel>> builtin_losses(
    std::shared_ptr<const ForwardModel> forward, double scale = 1.0);

/// `parameter` is sigma for gaussian-nll and the width for laplace-nll; ignored otherwise.
std::shared_ptr<const LossModel> make_loss(const std::string& name, std::shared_ptr<const ForwardModel> forward,
                                           double scale, double parameter = 1.0);

/// F(theta) = theta, for scalar and vector location problems.
class IdentityForwardModel final : public ForwardModel {
 public:
  explicit IdentityForwardModel(std::size_t dimension) : dimension_(dimension) {}
  std::size_t output_dimension() const override { return dimension_; }
  std::size_t parameter_dimension() const override { return dimension_; }
  void apply(std::span<const double> theta, std::span<double> out) const override;
  using ForwardModel::apply;

 private:
  std::size_t dimension_;
};

}  // namespace gibbs::models
