#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace gibbs::util {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// log(sum(exp(x))) with max-shift. Returns -inf for an empty or all -inf input.
inline double log_sum_exp(std::span<const double> x) {
  double peak = kNegInf;
  for (double v : x) peak = std::max(peak, v);
  if (!std::isfinite(peak)) return peak;
  double acc = 0.0;
  for (double v : x) acc += std::exp(v - peak);
  return peak + std::log(acc);
}

/// Sum taken over an ascending-sorted copy, so the result does not depend on
/// the input order.
inline double order_free_sum(std::span<const double> x) {
  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  double acc = 0.0;
  for (double v : sorted) acc += v;
  return acc;
}

inline double order_free_mean(std::span<const double> x) {
  return order_free_sum(x) / static_cast<double>(x.size());
}

/// Sample standard deviation of x divided by sqrt(size): the across-item
/// standard error of the mean. Zero for fewer than two items.
inline double standard_error_of_mean(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2) return 0.0;
  const double mean = order_free_mean(x);
  std::vector<double> sq;
  sq.reserve(n);
  for (double v : x) sq.push_back((v - mean) * (v - mean));
  const double var = order_free_sum(sq) / static_cast<double>(n - 1);
  return std::sqrt(var / static_cast<double>(n));
}

/// Exponentiates normalised log-weights.
inline std::vector<double> exp_normalized(std::span<const double> log_w) {
  const double lse = log_sum_exp(log_w);
  std::vector<double> w(log_w.size());
  for (std::size_t k = 0; k < log_w.size(); ++k) w[k] = std::exp(log_w[k] - lse);
  return w;
}

}  // namespace gibbs::util
