#include "gibbs/smc/operations.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "gibbs/core/errors.hpp"
#include "gibbs/util/numeric.hpp"
#include "gibbs/util/parallel.hpp"
#include "gibbs/util/random.hpp"

namespace gibbs::smc {

namespace {

constexpr std::uint64_t kResampleStream = std::numeric_limits<std::uint64_t>::max();
constexpr double kCovarianceFloor = 1e-10;

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

double sorted_log_sum_exp(std::vector<double>& values) {
  std::sort(values.begin(), values.end());
  return util::log_sum_exp(values);
}

}  // namespace

void Problem::validate() const {
  if (!loss || !prior || !data) throw ConfigurationError("problem needs a loss, a prior and a dataset");
  if (prior->dimension() != loss->forward().parameter_dimension())
    throw ConfigurationError(fmt::format("prior dimension {} does not match the forward model's {}",
                                         prior->dimension(), loss->forward().parameter_dimension()));
  if (data->dimension() != loss->forward().output_dimension())
    throw ConfigurationError(fmt::format("dataset dimension {} does not match the forward model output {}",
                                         data->dimension(), loss->forward().output_dimension()));
}

double log_mixture_kernel(std::span<const double> losses, double w) {
  const double total = util::order_free_sum(losses);
  std::vector<double> exponents(losses.size());
  for (std::size_t i = 0; i < losses.size(); ++i) exponents[i] = -w * (total - losses[i]);
  return sorted_log_sum_exp(exponents);
}

double log_target(double log_prior, std::span<const double> losses, double w, Target target) {
  if (log_prior == util::kNegInf) return log_prior;
  if (target == Target::Mixture) return log_prior + log_mixture_kernel(losses, w);
  return log_prior - w * util::order_free_sum(losses);
}

double log_mixture_density_unnormalized(const ParameterVector& theta, double w, const Dataset& data,
                                        const LossModel& loss, const PriorModel& prior) {
  if (!(w >= 0.0)) throw ConfigurationError(fmt::format("W must be nonnegative, got {}", w));
  const double log_prior = prior.log_density(theta);
  if (log_prior == util::kNegInf) return log_prior;
  const auto losses = loss.evaluate_all(theta, data);
  return log_target(log_prior, losses, w, Target::Mixture);
}

ParticleSystem reweight(ParticleSystem ps, double from_w, double to_w, double degeneracy_threshold) {
  if (to_w < from_w) throw ConfigurationError(fmt::format("reweight must not decrease W ({} -> {})", from_w, to_w));
  if (to_w == from_w) return ps;
  std::vector<double> log_w = ps.log_weights();
  for (std::size_t s = 0; s < ps.size(); ++s) {
    const auto row = ps.losses(s);
    double increment;
    if (ps.target() == Target::Mixture) {
      increment = log_mixture_kernel(row, to_w) - log_mixture_kernel(row, from_w);
    } else {
      increment = -(to_w - from_w) * util::order_free_sum(row);
    }
    log_w[s] += increment;
  }
  const std::size_t step = ps.target_index();
  try {
    ps.set_log_weights(std::move(log_w));
  } catch (const DegeneracyError&) {
    throw DegeneracyError(
        fmt::format("all importance weights vanished moving from W = {} to W = {}; use a finer W step", from_w, to_w),
        step, from_w, to_w);
  }
  const double ess = effective_sample_size(ps);
  if (ess <= degeneracy_threshold)
    throw DegeneracyError(fmt::format("normalised ESS {} moving from W = {} to W = {} is at or below {}; use a finer W step",
                                      ess, from_w, to_w, degeneracy_threshold),
                          step, from_w, to_w);
  ps.set_target(to_w, ps.target(), ps.target_index());
  return ps;
}

double effective_sample_size(std::span<const double> log_weights) {
  const double lse = util::log_sum_exp(log_weights);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double v : log_weights) {
    const double w = std::exp(v - lse);
    sum += w;
    sum_sq += w * w;
  }
  return sum * sum / (static_cast<double>(log_weights.size()) * sum_sq);
}

double effective_sample_size(const ParticleSystem& ps) { return effective_sample_size(ps.log_weights()); }

std::vector<std::size_t> systematic_ancestors(std::span<const double> weights, double u) {
  const std::size_t count = weights.size();
  double total = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t s = 0; s < count; ++s) {
    total += weights[s];
    if (weights[s] > 0.0) last_positive = s;
  }
  std::vector<std::size_t> ancestors(count);
  std::size_t j = 0;
  double cumulative = weights[0] / total;
  for (std::size_t k = 0; k < count; ++k) {
    const double position = (u + static_cast<double>(k)) / static_cast<double>(count);
    while (position >= cumulative && j < last_positive) cumulative += weights[++j] / total;
    ancestors[k] = j;
  }
  return ancestors;
}

ParticleSystem resample(ParticleSystem ps) {
  auto rng = util::stream_rng(ps.seed(), kResampleStream, ps.next_phase());
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  const auto ancestors = systematic_ancestors(ps.weights(), u);
  ps.select(ancestors);
  return ps;
}

MutationKernel::MutationKernel(std::vector<double> covariance, std::size_t dimension)
    : covariance_(std::move(covariance)), p_(dimension) {
  if (p_ == 0 || covariance_.size() != p_ * p_)
    throw ConfigurationError("mutation covariance must be p x p with p >= 1");
  Eigen::Map<const RowMatrix> cov(covariance_.data(), static_cast<Eigen::Index>(p_), static_cast<Eigen::Index>(p_));
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw ConfigurationError("mutation covariance is not positive definite");
  const Eigen::MatrixXd lower = llt.matrixL();
  chol_.resize(p_ * p_);
  for (std::size_t a = 0; a < p_; ++a)
    for (std::size_t b = 0; b < p_; ++b)
      chol_[a * p_ + b] = lower(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
}

MutationKernel MutationKernel::fixed(std::vector<double> covariance, std::size_t dimension) {
  return MutationKernel(std::move(covariance), dimension);
}

MutationKernel MutationKernel::adaptive(const ParticleSystem& ps) {
  const std::size_t p = ps.parameter_dimension();
  const auto weighted = ps.covariance();
  Eigen::Map<const RowMatrix> cov(weighted.data(), static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
  const double factor = 2.38 * 2.38 / static_cast<double>(p);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(factor * Eigen::MatrixXd(cov));
  Eigen::VectorXd values = eig.eigenvalues().cwiseMax(kCovarianceFloor);
  const Eigen::MatrixXd floored = eig.eigenvectors() * values.asDiagonal() * eig.eigenvectors().transpose();
  std::vector<double> out(p * p);
  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t b = 0; b < p; ++b)
      out[a * p + b] = 0.5 * (floored(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) +
                              floored(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)));
  return MutationKernel(std::move(out), p);
}

void MutationKernel::propose(std::span<const double> theta, Rng& rng, std::span<double> out) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> z(p_);
  for (double& v : z) v = normal(rng);
  for (std::size_t a = 0; a < p_; ++a) {
    double step = 0.0;
    for (std::size_t b = 0; b <= a; ++b) step += chol_[a * p_ + b] * z[b];
    out[a] = theta[a] + step;
  }
}

ParticleSystem mutate(ParticleSystem ps, double w, Target target, const MutationKernel& kernel, std::size_t steps,
                      const Problem& problem, MutationStats* stats) {
  if (steps == 0) return ps;
  if (kernel.dimension() != ps.parameter_dimension())
    throw ConfigurationError("mutation kernel dimension does not match the particles");
  const std::size_t p = ps.parameter_dimension();
  const std::size_t n = ps.data_size();
  const std::uint64_t phase = ps.next_phase();
  std::vector<MutationStats> per_particle(ps.size());
  util::parallel_for(ps.size(), [&](std::size_t s) {
    auto rng = util::stream_rng(ps.seed(), s, phase);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> theta(ps.particle(s).begin(), ps.particle(s).end());
    std::vector<double> losses(ps.losses(s).begin(), ps.losses(s).end());
    std::vector<double> proposal(p), proposal_losses(n);
    double current = log_target(problem.prior->log_density(theta), losses, w, target);
    MutationStats& st = per_particle[s];
    for (std::size_t k = 0; k < steps; ++k) {
      kernel.propose(theta, rng, proposal);
      const double log_u = std::log(unif(rng));
      ++st.proposals;
      const double log_prior = problem.prior->log_density(proposal);
      if (log_prior == util::kNegInf) {
        ++st.out_of_support;
        continue;
      }
      try {
        problem.loss->evaluate_all(proposal, *problem.data, proposal_losses);
      } catch (const Error&) {
        ++st.evaluation_failures;
        continue;
      }
      const double candidate = log_target(log_prior, proposal_losses, w, target);
      if (log_u < candidate - current) {
        theta.swap(proposal);
        losses.swap(proposal_losses);
        current = candidate;
        ++st.accepted;
      }
    }
    ps.set_particle(s, theta, losses);
  });
  if (stats) {
    for (const auto& st : per_particle) *stats += st;
  }
  ps.set_target(w, target, ps.target_index());
  return ps;
}

}  // namespace gibbs::smc
