#pragma once

#include <vector>

#include "gibbs/core/contracts.hpp"

namespace gibbs::models {

/// Closed-form stand-in for a waveguide dispersion solver.
///
/// theta = (shear modulus [kPa], wall thickness [mm], radius [mm]) on the box
/// [5, 95] x [5, 6.5] x [2, 4]. With bulk shear speed c_s = sqrt(1e3 mu / 1000)
/// [m/s], guide length l = 3 + 0.1 (h - 5.75) - 0.5 (a - 3) [mm] and
/// x = 2 pi f l / (1000 c_s), the phase velocity is
///
///   c(f) = c_s (0.3 + 0.65 (1 - exp(-x))).
///
/// c rises monotonically with frequency towards 0.95 c_s. The modulus sets the
/// overall level; thickness and radius only move the knee of the curve.
class SurrogateDispersionModel final : public ForwardModel {
 public:
  explicit SurrogateDispersionModel(std::vector<double> frequencies_hz);

  static ParameterDomain box();
  static std::vector<double> default_frequencies(std::size_t d = 40);

  std::size_t output_dimension() const override { return frequencies_.size(); }
  std::size_t parameter_dimension() const override { return 3; }
  void apply(std::span<const double> theta, std::span<double> out) const override;
  using ForwardModel::apply;

  const std::vector<double>& frequencies() const noexcept { return frequencies_; }

 private:
  std::vector<double> frequencies_;
};

/// surrogate_dispersion_forward on the default 40-point grid.
std::vector<double> surrogate_dispersion_forward(const ParameterVector& theta);

}  // namespace gibbs::models
