#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gibbs/core/contracts.hpp"

namespace gibbs::models {

/// u(t) = b_j on [c_{j-1}, c_j), with c_0 = 0 and c_J = 1.
class PiecewiseConstantFunction {
 public:
  /// Requires 0 < c_1 < ... < c_{J-1} < 1 and b_j >= 0 (DomainError otherwise).
  PiecewiseConstantFunction(std::vector<double> coefficients, std::vector<double> cutpoints);

  /// Splits theta = (b_1..b_J, c_1..c_{J-1}).
  static PiecewiseConstantFunction from_parameters(std::span<const double> theta, std::size_t blocks);

  std::size_t blocks() const noexcept { return coefficients_.size(); }
  const std::vector<double>& coefficients() const noexcept { return coefficients_; }
  const std::vector<double>& cutpoints() const noexcept { return cutpoints_; }

  double operator()(double t) const;
  /// Left and right end of block j.
  double block_begin(std::size_t j) const { return j == 0 ? 0.0 : cutpoints_[j - 1]; }
  double block_end(std::size_t j) const { return j + 1 == blocks() ? 1.0 : cutpoints_[j]; }
  /// Average of u over [a, b], a < b.
  double average(double a, double b) const;

 private:
  std::vector<double> coefficients_;
  std::vector<double> cutpoints_;
};

/// Discretisation of (Kv)(t) = int_0^1 v(s) / (1 + (s - t)^2)^{3/2} ds.
///
/// Source nodes s_k = k/(m-1), k = 0..m-1, carry trapezoid weights. A
/// function is sampled by its average over each node's cell
/// [s_k - h/2, s_k + h/2] clipped to [0, 1], which keeps the rule second
/// order for piecewise constant inputs with breakpoints off the nodes.
class SmoothingKernelOperator {
 public:
  SmoothingKernelOperator(std::vector<double> evaluation_grid, std::size_t source_points);

  static double kernel(double s, double t);

  std::size_t source_points() const noexcept { return m_; }
  std::size_t output_dimension() const noexcept { return grid_.size(); }
  double mesh_width() const noexcept { return 1.0 / static_cast<double>(m_ - 1); }
  const std::vector<double>& evaluation_grid() const noexcept { return grid_; }
  double source_node(std::size_t k) const { return static_cast<double>(k) / static_cast<double>(m_ - 1); }

  /// Row-major d x m matrix of kernel values times trapezoid weights.
  const std::vector<double>& matrix() const noexcept { return matrix_; }

  /// Cell averages of u at the source nodes.
  std::vector<double> sample(const PiecewiseConstantFunction& u) const;
  /// K applied to a vector of node values.
  void apply(std::span<const double> node_values, std::span<double> out) const;
  std::vector<double> apply(const PiecewiseConstantFunction& u) const;

 private:
  std::vector<double> grid_;
  std::size_t m_;
  std::vector<double> matrix_;
};

/// F(theta) = K u(theta) with theta = (b_1..b_J, c_1..c_{J-1}).
class FredholmForwardModel final : public ForwardModel {
 public:
  FredholmForwardModel(SmoothingKernelOperator op, std::size_t blocks);

  std::size_t output_dimension() const override { return op_.output_dimension(); }
  std::size_t parameter_dimension() const override { return 2 * blocks_ - 1; }
  void apply(std::span<const double> theta, std::span<double> out) const override;
  std::optional<double> mesh_width() const override { return op_.mesh_width(); }
  using ForwardModel::apply;

  const SmoothingKernelOperator& kernel_operator() const noexcept { return op_; }
  std::size_t blocks() const noexcept { return blocks_; }

 private:
  SmoothingKernelOperator op_;
  std::size_t blocks_;
};

/// K u(theta) on the operator's evaluation grid.
std::vector<double> toy_forward(const ParameterVector& theta, const SmoothingKernelOperator& op,
                                std::size_t blocks);

/// d equally spaced points on [0, 1].
std::vector<double> unit_grid(std::size_t d);

}  // namespace gibbs::models
