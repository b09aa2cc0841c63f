#pragma once

#include <span>
#include <string>
#include <vector>

namespace gibbs::app {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f77b4";
  bool dashed = false;
};

/// Line chart with axes and a legend.
std::string svg_lines(const std::string& title, const std::vector<Series>& series, const std::string& x_label,
                      const std::string& y_label);

/// One weighted histogram panel per component, with an outline of a reference
/// (prior) sample on the same bins.
std::string svg_marginals(const std::vector<std::string>& names, std::span<const double> values, std::size_t dimension,
                          std::span<const double> weights, std::span<const double> reference_values);

/// Pairwise scatter matrix of at most `max_points` particles.
std::string svg_pairs(const std::vector<std::string>& names, std::span<const double> values, std::size_t dimension,
                      std::size_t max_points = 500);

}  // namespace gibbs::app
