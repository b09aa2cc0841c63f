#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "gibbs/core/contracts.hpp"

namespace gibbs::oracle {

/// Tensor grid with one axis per parameter component (one or two axes).
using GridAxes = std::vector<std::vector<double>>;

/// n equally spaced points on [lo, hi].
std::vector<double> linspace(double lo, double hi, std::size_t n);

struct GridSpec {
  std::size_t points = 4096;  ///< per dimension
  double tail = 1e-10;        ///< allowed truncated mass, prior and posterior
  std::size_t max_zooms = 8;  ///< passes that shrink the box onto the posterior
};

/// Gibbs posterior tabulated on a tensor grid, integrated by the trapezoid rule.
class GridPosterior {
 public:
  GridPosterior(GridAxes axes, std::vector<double> log_unnormalized);

  std::size_t dimension() const noexcept { return axes_.size(); }
  std::size_t size() const noexcept { return log_unnormalized_.size(); }
  const GridAxes& axes() const noexcept { return axes_; }
  std::vector<double> mesh_widths() const;

  /// Coordinates of flat index k (first axis outermost).
  std::vector<double> point(std::size_t k) const;
  /// Trapezoid weight of flat index k.
  double weight(std::size_t k) const;

  /// log Z = log of the integral of exp(-W sum_i L) rho_0 over the grid.
  double log_partition() const noexcept { return log_z_; }
  const std::vector<double>& log_unnormalized() const noexcept { return log_unnormalized_; }
  double log_density(std::size_t k) const { return log_unnormalized_[k] - log_z_; }
  double density(std::size_t k) const;

  /// Integral of f against the normalized density.
  double expectation(const std::function<double(std::span<const double>)>& f) const;
  std::vector<double> mean() const;
  /// Per-component variance.
  std::vector<double> variance() const;
  /// Mass outside the Euclidean ball of the given radius.
  double mass_outside_ball(std::span<const double> center, double radius) const;
  /// Mass of the outermost grid cells; small when the grid covers the posterior.
  double edge_mass() const;
  /// Estimated posterior mass cut off while zooming.
  double truncated_mass() const noexcept { return truncated_; }
  void set_truncated_mass(double m) noexcept { truncated_ = m; }

  bool same_grid(const GridPosterior& other) const { return axes_ == other.axes_; }

 private:
  GridAxes axes_;
  std::vector<double> log_unnormalized_;
  std::vector<std::vector<double>> axis_weights_;
  double log_z_ = 0.0;
  double truncated_ = 0.0;
};

/// Posterior on a fixed grid. Prior and loss are evaluated at every node.
GridPosterior quadrature_posterior(const LossModel& loss, const PriorModel& prior, const Dataset& data, double w,
                                   const GridAxes& axes);

/// Posterior on an automatically chosen grid: starts from the prior box holding
/// all but spec.tail prior mass (CoverageError if the prior leaves more outside
/// it) and zooms onto the region holding all but spec.tail posterior mass.
GridPosterior quadrature_posterior(const LossModel& loss, const PriorModel& prior, const Dataset& data, double w,
                                   const GridSpec& spec = {});

/// Same axes with each one widened about its center by `factor`, clipped to the prior box.
GridAxes widened(const GridAxes& axes, double factor, const PriorModel& prior, double tail = 1e-10);

struct Divergences {
  double kl_pq = 0.0;
  double kl_qp = 0.0;
  double hellinger = 0.0;  ///< d_H^2 = 1 - integral of sqrt(pq), so d_H is in [0, 1]
  double tv = 0.0;         ///< half the L1 distance
};

/// All four on a shared grid. KL is +infinity when the second density vanishes
/// where the first does not. Throws ConfigurationError for different grids.
Divergences divergences(const GridPosterior& p, const GridPosterior& q);

/// Gibbs objective E_rho[R_n] + KL(rho || rho_0) / (n W) evaluated at the grid
/// posterior. At the minimizer this equals -log Z / (n W).
double gibbs_objective(const GridPosterior& posterior, const LossModel& loss, const PriorModel& prior,
                       const Dataset& data, double w);

}  // namespace gibbs::oracle
