#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace gibbs::smc {

/// Tempering weights 0 = W_0 < W_1 < ... < W_T <= 1.
class WGrid {
 public:
  WGrid(std::vector<double> values, std::string policy = "custom");

  /// {0, 2^min_exponent, ..., 1/2, 1}.
  static WGrid dyadic(int min_exponent = -8);
  /// {0} followed by `count` equally spaced points ending at 1.
  static WGrid uniform(std::size_t count);

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t t) const { return values_[t]; }
  const std::vector<double>& values() const noexcept { return values_; }
  const std::string& policy() const noexcept { return policy_; }

  /// Every weight divided by `factor`; needs factor >= W_T.
  WGrid rescaled(double factor) const;

 private:
  std::vector<double> values_;
  std::string policy_;
};

}  // namespace gibbs::smc
