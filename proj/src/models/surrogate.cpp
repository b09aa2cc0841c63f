#include "gibbs/models/surrogate.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "gibbs/core/errors.hpp"

namespace gibbs::models {

namespace {
constexpr double kDensity = 1000.0;  // kg/m^3
}

SurrogateDispersionModel::SurrogateDispersionModel(std::vector<double> frequencies_hz)
    : frequencies_(std::move(frequencies_hz)) {
  if (frequencies_.empty()) throw ConfigurationError("surrogate model needs a frequency grid");
  for (std::size_t k = 0; k < frequencies_.size(); ++k) {
    if (!(frequencies_[k] > 0.0) || (k > 0 && !(frequencies_[k] > frequencies_[k - 1])))
      throw ConfigurationError("surrogate frequencies must be positive and strictly increasing");
  }
}

ParameterDomain SurrogateDispersionModel::box() { return ParameterDomain({5.0, 5.0, 2.0}, {95.0, 6.5, 4.0}); }

std::vector<double> SurrogateDispersionModel::default_frequencies(std::size_t d) {
  if (d < 2) throw ConfigurationError("surrogate frequency grid needs at least two points");
  std::vector<double> f(d);
  for (std::size_t k = 0; k < d; ++k) f[k] = 50.0 + 1950.0 * static_cast<double>(k) / static_cast<double>(d - 1);
  return f;
}

void SurrogateDispersionModel::apply(std::span<const double> theta, std::span<double> out) const {
  if (theta.size() != 3) throw DomainError(fmt::format("surrogate expects 3 parameters, got {}", theta.size()));
  static const ParameterDomain domain = box();
  if (!domain.contains(theta))
    throw DomainError(fmt::format("surrogate parameters ({}, {}, {}) outside the physical box", theta[0],
                                  theta[1], theta[2]));
  const double shear_speed = std::sqrt(theta[0] * 1e3 / kDensity);
  const double guide_mm = 3.0 + 0.1 * (theta[1] - 5.75) - 0.5 * (theta[2] - 3.0);
  for (std::size_t k = 0; k < frequencies_.size(); ++k) {
    const double x = 2.0 * std::numbers::pi * frequencies_[k] * guide_mm * 1e-3 / shear_speed;
    out[k] = shear_speed * (0.3 + 0.65 * -std::expm1(-x));
  }
}

std::vector<double> surrogate_dispersion_forward(const ParameterVector& theta) {
  return SurrogateDispersionModel(SurrogateDispersionModel::default_frequencies()).apply(theta);
}

}  // namespace gibbs::models
