#include "gibbs/models/fredholm.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Core>
#include <fmt/format.h>

#include "gibbs/core/errors.hpp"

namespace gibbs::models {

PiecewiseConstantFunction::PiecewiseConstantFunction(std::vector<double> coefficients,
                                                     std::vector<double> cutpoints)
    : coefficients_(std::move(coefficients)), cutpoints_(std::move(cutpoints)) {
  if (coefficients_.empty()) throw DomainError("piecewise constant function needs at least one block");
  if (cutpoints_.size() + 1 != coefficients_.size())
    throw DomainError(fmt::format("{} blocks need {} cutpoints, got {}", coefficients_.size(),
                                  coefficients_.size() - 1, cutpoints_.size()));
  for (std::size_t j = 0; j < coefficients_.size(); ++j) {
    if (!(coefficients_[j] >= 0.0) || !std::isfinite(coefficients_[j]))
      throw DomainError(fmt::format("coefficient b_{} = {} must be nonnegative", j + 1, coefficients_[j]));
  }
  double previous = 0.0;
  for (std::size_t j = 0; j < cutpoints_.size(); ++j) {
    if (!(cutpoints_[j] > previous) || !(cutpoints_[j] < 1.0))
      throw DomainError(fmt::format("cutpoints must satisfy 0 < c_1 < ... < 1; c_{} = {}", j + 1,
                                    cutpoints_[j]));
    previous = cutpoints_[j];
  }
}

PiecewiseConstantFunction PiecewiseConstantFunction::from_parameters(std::span<const double> theta,
                                                                     std::size_t blocks) {
  if (blocks == 0 || theta.size() != 2 * blocks - 1)
    throw DomainError(fmt::format("expected {} parameters for {} blocks, got {}", 2 * blocks - 1,
                                  blocks, theta.size()));
  return PiecewiseConstantFunction(std::vector<double>(theta.begin(), theta.begin() + blocks),
                                   std::vector<double>(theta.begin() + blocks, theta.end()));
}

double PiecewiseConstantFunction::operator()(double t) const {
  const auto it = std::upper_bound(cutpoints_.begin(), cutpoints_.end(), t);
  return coefficients_[static_cast<std::size_t>(it - cutpoints_.begin())];
}

double PiecewiseConstantFunction::average(double a, double b) const {
  double acc = 0.0;
  for (std::size_t j = 0; j < blocks(); ++j) {
    const double lo = std::max(a, block_begin(j));
    const double hi = std::min(b, block_end(j));
    if (hi > lo) acc += coefficients_[j] * (hi - lo);
  }
  return acc / (b - a);
}

SmoothingKernelOperator::SmoothingKernelOperator(std::vector<double> evaluation_grid,
                                                 std::size_t source_points)
    : grid_(std::move(evaluation_grid)), m_(source_points) {
  if (m_ < 2) throw ConfigurationError("SmoothingKernelOperator: need at least two source points");
  if (grid_.empty()) throw ConfigurationError("SmoothingKernelOperator: empty evaluation grid");
  const double h = mesh_width();
  matrix_.resize(grid_.size() * m_);
  for (std::size_t r = 0; r < grid_.size(); ++r) {
    for (std::size_t k = 0; k < m_; ++k) {
      const double w = (k == 0 || k + 1 == m_) ? 0.5 * h : h;
      matrix_[r * m_ + k] = w * kernel(source_node(k), grid_[r]);
    }
  }
}

double SmoothingKernelOperator::kernel(double s, double t) {
  const double q = 1.0 + (s - t) * (s - t);
  return 1.0 / (q * std::sqrt(q));
}

std::vector<double> SmoothingKernelOperator::sample(const PiecewiseConstantFunction& u) const {
  const double h = mesh_width();
  std::vector<double> values(m_);
  for (std::size_t k = 0; k < m_; ++k) {
    const double s = source_node(k);
    const double a = k == 0 ? 0.0 : s - 0.5 * h;
    const double b = k + 1 == m_ ? 1.0 : s + 0.5 * h;
    // cells entirely inside one block take the coefficient exactly
    const double left = u(a);
    values[k] = (left == u(std::nextafter(b, 0.0)) && u.average(a, b) == left) ? left : u.average(a, b);
  }
  return values;
}

void SmoothingKernelOperator::apply(std::span<const double> node_values, std::span<double> out) const {
  if (node_values.size() != m_ || out.size() != grid_.size())
    throw DomainError("SmoothingKernelOperator::apply: size mismatch");
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RowMajor> k(matrix_.data(), static_cast<Eigen::Index>(grid_.size()),
                               static_cast<Eigen::Index>(m_));
  Eigen::Map<const Eigen::VectorXd> v(node_values.data(), static_cast<Eigen::Index>(m_));
  Eigen::Map<Eigen::VectorXd> y(out.data(), static_cast<Eigen::Index>(out.size()));
  y.noalias() = k * v;
}

std::vector<double> SmoothingKernelOperator::apply(const PiecewiseConstantFunction& u) const {
  std::vector<double> out(grid_.size());
  apply(sample(u), out);
  return out;
}

FredholmForwardModel::FredholmForwardModel(SmoothingKernelOperator op, std::size_t blocks)
    : op_(std::move(op)), blocks_(blocks) {
  if (blocks_ == 0) throw ConfigurationError("FredholmForwardModel: need at least one block");
}

void FredholmForwardModel::apply(std::span<const double> theta, std::span<double> out) const {
  const auto u = PiecewiseConstantFunction::from_parameters(theta, blocks_);
  op_.apply(op_.sample(u), out);
}

std::vector<double> toy_forward(const ParameterVector& theta, const SmoothingKernelOperator& op,
                                std::size_t blocks) {
  return op.apply(PiecewiseConstantFunction::from_parameters(theta.values(), blocks));
}

std::vector<double> unit_grid(std::size_t d) {
  if (d == 0) throw ConfigurationError("unit_grid: need at least one point");
  if (d == 1) return {0.5};
  std::vector<double> grid(d);
  for (std::size_t k = 0; k < d; ++k) grid[k] = static_cast<double>(k) / static_cast<double>(d - 1);
  return grid;
}

}  // namespace gibbs::models
