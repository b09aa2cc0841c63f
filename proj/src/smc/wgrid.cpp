#include "gibbs/smc/wgrid.hpp"

#include <cmath>

#include <fmt/format.h>

#include "gibbs/core/errors.hpp"

namespace gibbs::smc {

WGrid::WGrid(std::vector<double> values, std::string policy) : values_(std::move(values)), policy_(std::move(policy)) {
  if (values_.size() < 2) throw ConfigurationError("W grid needs W_0 = 0 and at least one positive weight");
  if (values_.front() != 0.0) throw ConfigurationError(fmt::format("W grid must start at 0, got {}", values_.front()));
  for (std::size_t t = 1; t < values_.size(); ++t) {
    if (!(values_[t] > values_[t - 1]))
      throw ConfigurationError(fmt::format("W grid must be strictly increasing at index {}", t));
  }
  if (!(values_.back() <= 1.0))
    throw ConfigurationError(fmt::format("W grid must end at or below 1, got {}", values_.back()));
}

WGrid WGrid::dyadic(int min_exponent) {
  if (min_exponent > -1) throw ConfigurationError("dyadic grid needs a negative minimum exponent");
  std::vector<double> values{0.0};
  for (int e = min_exponent; e <= 0; ++e) values.push_back(std::ldexp(1.0, e));
  return WGrid(std::move(values), fmt::format("dyadic(2^{}..1)", min_exponent));
}

WGrid WGrid::uniform(std::size_t count) {
  if (count == 0) throw ConfigurationError("uniform grid needs at least one positive weight");
  std::vector<double> values{0.0};
  for (std::size_t t = 1; t <= count; ++t) values.push_back(static_cast<double>(t) / static_cast<double>(count));
  return WGrid(std::move(values), fmt::format("uniform({})", count));
}

WGrid WGrid::rescaled(double factor) const {
  if (!(factor > 0.0)) throw ConfigurationError("rescale factor must be positive");
  std::vector<double> values;
  for (double w : values_) values.push_back(w / factor);
  return WGrid(std::move(values), policy_ + fmt::format("/{}", factor));
}

}  // namespace gibbs::smc
