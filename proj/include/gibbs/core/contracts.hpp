#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gibbs/core/dataset.hpp"
#include "gibbs/core/parameter.hpp"

namespace gibbs {

using Rng = std::mt19937_64;

/// Parameter-to-observation map F(theta) evaluated on a dataset grid.
/// Implementations are stateless after construction and safe to call concurrently.
class ForwardModel {
 public:
  virtual ~ForwardModel() = default;

  virtual std::size_t output_dimension() const = 0;
  virtual std::size_t parameter_dimension() const = 0;

  /// Writes F(theta) into `out` (size output_dimension()). Throws DomainError
  /// for parameters the model cannot evaluate.
  virtual void apply(std::span<const double> theta, std::span<double> out) const = 0;

  /// Mesh width of the discretisation, for models that have one.
  virtual std::optional<double> mesh_width() const { return std::nullopt; }

  std::vector<double> apply(const ParameterVector& theta) const;
};

/// L(theta, y) = scale * l(F(theta), y), nonnegative and deterministic.
///
/// The scale is the data-driven normalisation W0 so that tempering weights
/// live on (0, 1]. Subclasses supply the raw discrepancy l between a
/// prediction and an observation.
class LossModel {
 public:
  LossModel(std::shared_ptr<const ForwardModel> forward, double scale);
  virtual ~LossModel() = default;

  virtual std::string name() const = 0;
  /// True when l depends on (prediction, y) only through prediction - y.
  virtual bool translation_invariant() const = 0;
  virtual double raw_discrepancy(std::span<const double> prediction,
                                 std::span<const double> y) const = 0;
  /// Same loss family with a different scale.
  virtual std::shared_ptr<const LossModel> with_scale(double scale) const = 0;
  /// log of the integral over r in R^d of exp(-scale * l(r, 0)), when closed-form.
  virtual std::optional<double> log_partition(std::size_t /*d*/) const { return std::nullopt; }

  double scale() const noexcept { return scale_; }
  const ForwardModel& forward() const noexcept { return *forward_; }
  const std::shared_ptr<const ForwardModel>& forward_ptr() const noexcept { return forward_; }

  /// Loss given a precomputed prediction F(theta).
  double evaluate_prediction(std::span<const double> prediction, std::span<const double> y) const {
    return scale_ * raw_discrepancy(prediction, y);
  }

  double evaluate(const ParameterVector& theta, std::span<const double> y) const;

  /// Losses of theta against every observation, using one forward evaluation.
  /// Throws NumericalError if F(theta) is not finite.
  void evaluate_all(std::span<const double> theta, const Dataset& data, std::span<double> out) const;
  std::vector<double> evaluate_all(const ParameterVector& theta, const Dataset& data) const;

 private:
  std::shared_ptr<const ForwardModel> forward_;
  double scale_;
};

/// Prior density rho_0 with an exact sampler.
class PriorModel {
 public:
  virtual ~PriorModel() = default;

  virtual std::size_t dimension() const = 0;
  /// log density, or -infinity outside the support.
  virtual double log_density(std::span<const double> theta) const = 0;
  virtual void sample_into(Rng& rng, std::span<double> out) const = 0;
  virtual const ParameterDomain& domain() const = 0;

  /// Interval per component holding all but `tail` prior mass on each side.
  virtual std::vector<std::pair<double, double>> central_box(double tail) const = 0;
  /// Prior mass outside the box [lower, upper] (product of the marginals' inside mass
  /// for independent priors).
  virtual double mass_outside(std::span<const double> lower, std::span<const double> upper) const = 0;

  double log_density(const ParameterVector& theta) const { return log_density(theta.values()); }
  ParameterVector sample(Rng& rng) const;
  /// Wraps raw values as a ParameterVector labelled with this prior's component names.
  ParameterVector make_parameter(std::vector<double> values) const;
  const ParameterVector::Names& names() const noexcept { return names_; }

 protected:
  explicit PriorModel(std::vector<std::string> names);

 private:
  ParameterVector::Names names_;
};

}  // namespace gibbs
