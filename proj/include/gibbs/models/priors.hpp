#pragma once

#include <memory>
#include <string>
#include <vector>

#include "gibbs/core/contracts.hpp"

namespace gibbs::models {

/// Independent Gamma(shape, rate) components on (0, inf).
class GammaPrior final : public PriorModel {
 public:
  GammaPrior(double shape, double rate, std::size_t dimension, std::vector<std::string> names = {});

  std::size_t dimension() const override { return dimension_; }
  double log_density(std::span<const double> theta) const override;
  void sample_into(Rng& rng, std::span<double> out) const override;
  const ParameterDomain& domain() const override { return domain_; }
  std::vector<std::pair<double, double>> central_box(double tail) const override;
  double mass_outside(std::span<const double> lower, std::span<const double> upper) const override;
  using PriorModel::log_density;

  double cdf(double x) const;

 private:
  double shape_;
  double rate_;
  std::size_t dimension_;
  ParameterDomain domain_;
};

/// Independent N(mean, sd^2) components.
class GaussianPrior final : public PriorModel {
 public:
  GaussianPrior(double mean, double sd, std::size_t dimension, std::vector<std::string> names = {});

  std::size_t dimension() const override { return dimension_; }
  double log_density(std::span<const double> theta) const override;
  void sample_into(Rng& rng, std::span<double> out) const override;
  const ParameterDomain& domain() const override { return domain_; }
  std::vector<std::pair<double, double>> central_box(double tail) const override;
  double mass_outside(std::span<const double> lower, std::span<const double> upper) const override;
  using PriorModel::log_density;

  double cdf(double x) const;

 private:
  double mean_;
  double sd_;
  std::size_t dimension_;
  ParameterDomain domain_;
};

/// Independent components lower_k + (upper_k - lower_k) * Beta(alpha, beta).
class ScaledBetaPrior final : public PriorModel {
 public:
  ScaledBetaPrior(double alpha, double beta, std::vector<double> lower, std::vector<double> upper,
                  std::vector<std::string> names = {});

  std::size_t dimension() const override { return lower_.size(); }
  double log_density(std::span<const double> theta) const override;
  void sample_into(Rng& rng, std::span<double> out) const override;
  const ParameterDomain& domain() const override { return domain_; }
  std::vector<std::pair<double, double>> central_box(double tail) const override;
  double mass_outside(std::span<const double> lower, std::span<const double> upper) const override;
  using PriorModel::log_density;

  double cdf(std::size_t component, double x) const;

 private:
  double alpha_;
  double beta_;
  std::vector<double> lower_;
  std::vector<double> upper_;
  ParameterDomain domain_;
};

/// Uniform on {0 < c_1 < ... < c_k < 1}, density k!.
class OrderedUniformPrior final : public PriorModel {
 public:
  explicit OrderedUniformPrior(std::size_t count, std::vector<std::string> names = {});

  std::size_t dimension() const override { return count_; }
  double log_density(std::span<const double> theta) const override;
  void sample_into(Rng& rng, std::span<double> out) const override;
  const ParameterDomain& domain() const override { return domain_; }
  std::vector<std::pair<double, double>> central_box(double tail) const override;
  /// Union bound over the Beta(j, k - j + 1) marginals; exact for k = 1.
  double mass_outside(std::span<const double> lower, std::span<const double> upper) const override;
  using PriorModel::log_density;

 private:
  std::size_t count_;
  double log_normaliser_;
  ParameterDomain domain_;
};

/// Independent blocks concatenated in order.
class ProductPrior final : public PriorModel {
 public:
  explicit ProductPrior(std::vector<std::shared_ptr<const PriorModel>> blocks);

  std::size_t dimension() const override { return dimension_; }
  double log_density(std::span<const double> theta) const override;
  void sample_into(Rng& rng, std::span<double> out) const override;
  const ParameterDomain& domain() const override { return domain_; }
  std::vector<std::pair<double, double>> central_box(double tail) const override;
  double mass_outside(std::span<const double> lower, std::span<const double> upper) const override;
  using PriorModel::log_density;

 private:
  std::vector<std::shared_ptr<const PriorModel>> blocks_;
  std::size_t dimension_;
  ParameterDomain domain_;
};

/// Gamma(2,1) on J coefficients times ordered-uniform on J-1 cutpoints.
std::shared_ptr<const PriorModel> fredholm_prior(std::size_t blocks);
/// Beta(1,3) on each component of the surrogate's physical box.
std::shared_ptr<const PriorModel> surrogate_prior();

/// One instance of each built-in prior family, keyed by family name.
std::vector<std::pair<std::string, std::shared_ptr<const PriorModel>>> builtin_priors();

}  // namespace gibbs::models
