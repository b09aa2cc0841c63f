#include "gibbs/core/parameter.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "gibbs/core/errors.hpp"

namespace gibbs {

ParameterVector::ParameterVector(std::vector<double> values, Names names)
    : values_(std::move(values)), names_(std::move(names)) {
  if (values_.empty()) throw DomainError("ParameterVector: dimension must be at least 1");
  for (std::size_t k = 0; k < values_.size(); ++k) {
    if (!std::isfinite(values_[k]))
      throw DomainError(fmt::format("ParameterVector: component {} is not finite", k));
  }
  if (names_ && names_->size() != values_.size())
    throw DomainError("ParameterVector: names and values differ in length");
}

ParameterVector::ParameterVector(std::initializer_list<double> values)
    : ParameterVector(std::vector<double>(values)) {}

std::string ParameterVector::name(std::size_t k) const {
  if (names_) return (*names_)[k];
  return fmt::format("theta[{}]", k);
}

ParameterDomain::ParameterDomain(std::vector<double> lower, std::vector<double> upper,
                                 std::vector<OrderingConstraint> ordering)
    : lower_(std::move(lower)), upper_(std::move(upper)), ordering_(std::move(ordering)) {
  if (lower_.size() != upper_.size() || lower_.empty())
    throw ConfigurationError("ParameterDomain: bounds must be non-empty and of equal length");
  for (std::size_t k = 0; k < lower_.size(); ++k) {
    if (std::isnan(lower_[k]) || std::isnan(upper_[k]) || !(lower_[k] < upper_[k]))
      throw ConfigurationError(
          fmt::format("ParameterDomain: need lower < upper for component {}", k));
  }
  for (const auto& c : ordering_) {
    if (c.lower_index >= lower_.size() || c.upper_index >= lower_.size() ||
        c.lower_index == c.upper_index)
      throw ConfigurationError("ParameterDomain: ordering constraint index out of range");
  }
}

ParameterDomain ParameterDomain::unbounded(std::size_t dimension) {
  const double inf = std::numeric_limits<double>::infinity();
  return ParameterDomain(std::vector<double>(dimension, -inf), std::vector<double>(dimension, inf));
}

bool ParameterDomain::contains(std::span<const double> theta) const {
  if (theta.size() != lower_.size()) return false;
  for (std::size_t k = 0; k < theta.size(); ++k) {
    if (!(theta[k] >= lower_[k] && theta[k] <= upper_[k])) return false;
  }
  for (const auto& c : ordering_) {
    if (!(theta[c.lower_index] < theta[c.upper_index])) return false;
  }
  return true;
}

void ParameterDomain::require(std::span<const double> theta) const {
  if (theta.size() != lower_.size())
    throw DomainError(fmt::format("parameter has dimension {}, domain expects {}", theta.size(),
                                  lower_.size()));
  for (std::size_t k = 0; k < theta.size(); ++k) {
    if (!(theta[k] >= lower_[k] && theta[k] <= upper_[k]))
      throw DomainError(fmt::format("component {} = {} outside [{}, {}]", k, theta[k], lower_[k],
                                    upper_[k]));
  }
  for (const auto& c : ordering_) {
    if (!(theta[c.lower_index] < theta[c.upper_index]))
      throw DomainError(fmt::format("ordering violated: component {} must be below component {}",
                                    c.lower_index, c.upper_index));
  }
}

ParameterDomain ParameterDomain::concatenate(const ParameterDomain& other) const {
  auto lower = lower_;
  auto upper = upper_;
  lower.insert(lower.end(), other.lower_.begin(), other.lower_.end());
  upper.insert(upper.end(), other.upper_.begin(), other.upper_.end());
  auto ordering = ordering_;
  const std::size_t shift = dimension();
  for (const auto& c : other.ordering_)
    ordering.push_back({c.lower_index + shift, c.upper_index + shift});
  return ParameterDomain(std::move(lower), std::move(upper), std::move(ordering));
}

}  // namespace gibbs
