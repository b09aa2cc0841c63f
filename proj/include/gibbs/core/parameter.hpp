#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace gibbs {

/// A point of the parameter space. Dimension is fixed at construction and all
/// components are finite; there are no mutators.
class ParameterVector {
 public:
  using Names = std::shared_ptr<const std::vector<std::string>>;

  explicit ParameterVector(std::vector<double> values, Names names = nullptr);
  ParameterVector(std::initializer_list<double> values);

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t k) const { return values_[k]; }
  std::span<const double> values() const noexcept { return values_; }
  const std::vector<double>& to_vector() const noexcept { return values_; }

  /// Component label; falls back to "theta[k]" when no names were given.
  std::string name(std::size_t k) const;
  const Names& names() const noexcept { return names_; }

  friend bool operator==(const ParameterVector& a, const ParameterVector& b) {
    return a.values_ == b.values_;
  }

 private:
  std::vector<double> values_;
  Names names_;
};

/// Requires values[lower_index] < values[upper_index].
struct OrderingConstraint {
  std::size_t lower_index;
  std::size_t upper_index;
};

/// Box (possibly with infinite sides) plus optional strict ordering constraints.
class ParameterDomain {
 public:
  ParameterDomain(std::vector<double> lower, std::vector<double> upper,
                  std::vector<OrderingConstraint> ordering = {});

  static ParameterDomain unbounded(std::size_t dimension);

  std::size_t dimension() const noexcept { return lower_.size(); }
  const std::vector<double>& lower() const noexcept { return lower_; }
  const std::vector<double>& upper() const noexcept { return upper_; }
  const std::vector<OrderingConstraint>& ordering() const noexcept { return ordering_; }

  bool contains(std::span<const double> theta) const;
  bool contains(const ParameterVector& theta) const { return contains(theta.values()); }

  /// Throws DomainError if theta is not contained.
  void require(std::span<const double> theta) const;

  /// Domain of the concatenated vector (this, other); ordering indices of
  /// `other` are shifted.
  ParameterDomain concatenate(const ParameterDomain& other) const;

 private:
  std::vector<double> lower_;
  std::vector<double> upper_;
  std::vector<OrderingConstraint> ordering_;
};

}  // namespace gibbs
