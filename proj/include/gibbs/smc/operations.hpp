#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "gibbs/core/contracts.hpp"
#include "gibbs/smc/particles.hpp"

namespace gibbs::smc {

/// Loss, prior and data shared by every stage of a run.
struct Problem {
  std::shared_ptr<const LossModel> loss;
  std::shared_ptr<const PriorModel> prior;
  std::shared_ptr<const Dataset> data;

  /// Throws ConfigurationError on missing members or mismatched dimensions.
  void validate() const;
};

/// log sum_i exp(-W (T - l_i)) with T = sum_i l_i. Summation order is fixed
/// by sorting, so the value does not depend on the order of the losses.
double log_mixture_kernel(std::span<const double> losses, double w);

/// Unnormalised log target from a cached log prior and loss row.
double log_target(double log_prior, std::span<const double> losses, double w, Target target);

/// log[rho_0(theta) sum_i exp(-W sum_{j != i} L(theta, y_j))]; -inf outside the prior support.
double log_mixture_density_unnormalized(const ParameterVector& theta, double w, const Dataset& data,
                                        const LossModel& loss, const PriorModel& prior);

/// Moves the weights from the target at from_w to the target at to_w using the
/// cached losses. Throws DegeneracyError if the weights collapse (no finite
/// weight, or normalised ESS at or below `degeneracy_threshold`).
ParticleSystem reweight(ParticleSystem ps, double from_w, double to_w, double degeneracy_threshold = 0.0);

/// (sum w)^2 / (S sum w^2) from log-weights; in [1/S, 1].
double effective_sample_size(std::span<const double> log_weights);
double effective_sample_size(const ParticleSystem& ps);

/// Systematic resampling: ancestors of S offspring for normalised weights and
/// one uniform offset u in [0, 1).
std::vector<std::size_t> systematic_ancestors(std::span<const double> weights, double u);
ParticleSystem resample(ParticleSystem ps);

/// Gaussian random-walk proposal with covariance Sigma = chol * chol^T.
class MutationKernel {
 public:
  /// Uses `covariance` (row-major p x p) as given.
  static MutationKernel fixed(std::vector<double> covariance, std::size_t dimension);
  /// 2.38^2/p times the weighted particle covariance, eigenvalues floored at 1e-10.
  static MutationKernel adaptive(const ParticleSystem& ps);

  std::size_t dimension() const noexcept { return p_; }
  const std::vector<double>& covariance() const noexcept { return covariance_; }
  /// theta + chol * z for standard normal z.
  void propose(std::span<const double> theta, Rng& rng, std::span<double> out) const;

 private:
  MutationKernel(std::vector<double> covariance, std::size_t dimension);
  std::vector<double> covariance_;
  std::vector<double> chol_;
  std::size_t p_;
};

/// `steps` Metropolis-Hastings moves per particle targeting the mixture or full
/// posterior at `w`. Proposals outside the prior support, or whose forward
/// evaluation fails, are rejected and counted.
ParticleSystem mutate(ParticleSystem ps, double w, Target target, const MutationKernel& kernel, std::size_t steps,
                      const Problem& problem, MutationStats* stats = nullptr);

}  // namespace gibbs::smc
