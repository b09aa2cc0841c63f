#include "gibbs/smc/particles.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "gibbs/core/errors.hpp"
#include "gibbs/util/numeric.hpp"
#include "gibbs/util/parallel.hpp"
#include "gibbs/util/random.hpp"

namespace gibbs::smc {

MutationStats& MutationStats::operator+=(const MutationStats& other) noexcept {
  proposals += other.proposals;
  accepted += other.accepted;
  out_of_support += other.out_of_support;
  evaluation_failures += other.evaluation_failures;
  return *this;
}

ParticleSystem::ParticleSystem(std::vector<double> particles, std::vector<double> losses,
                               std::vector<double> log_weights, std::size_t parameter_dimension,
                               std::size_t data_size)
    : size_(log_weights.size()),
      p_(parameter_dimension),
      n_(data_size),
      particles_(std::move(particles)),
      losses_(std::move(losses)) {
  if (size_ < 2) throw ConfigurationError(fmt::format("a particle system needs S >= 2, got {}", size_));
  if (p_ == 0 || n_ == 0) throw ConfigurationError("particle system needs p >= 1 and n >= 1");
  if (particles_.size() != size_ * p_ || losses_.size() != size_ * n_)
    throw ConfigurationError("particle system storage does not match S, p and n");
  set_log_weights(std::move(log_weights));
}

ParticleSystem ParticleSystem::from_prior(const PriorModel& prior, const LossModel& loss, const Dataset& data,
                                          std::size_t particles, std::uint64_t seed) {
  if (particles < 2) throw ConfigurationError(fmt::format("need at least two particles, got {}", particles));
  const std::size_t p = prior.dimension();
  const std::size_t n = data.size();
  std::vector<double> values(particles * p);
  std::vector<double> losses(particles * n);
  util::parallel_for(particles, [&](std::size_t s) {
    auto rng = util::stream_rng(seed, s, 0);
    std::span<double> theta(values.data() + s * p, p);
    std::span<double> row(losses.data() + s * n, n);
    for (int attempt = 0;; ++attempt) {
      prior.sample_into(rng, theta);
      try {
        loss.evaluate_all(theta, data, row);
        return;
      } catch (const Error&) {
        if (attempt >= 100) throw;
      }
    }
  });
  ParticleSystem ps(std::move(values), std::move(losses),
                    std::vector<double>(particles, 0.0), p, n);
  ps.set_seed(seed, 1);
  return ps;
}

std::vector<double> ParticleSystem::weights() const {
  std::vector<double> w(size_);
  for (std::size_t s = 0; s < size_; ++s) w[s] = std::exp(log_weights_[s]);
  return w;
}

void ParticleSystem::set_log_weights(std::vector<double> log_weights) {
  if (log_weights.size() != size_) throw ConfigurationError("log-weight count does not match S");
  for (double v : log_weights) {
    if (std::isnan(v) || v == std::numeric_limits<double>::infinity())
      throw DegeneracyError("log-weights contain NaN or +inf", target_index_, w_, w_);
  }
  const double lse = util::log_sum_exp(log_weights);
  if (!std::isfinite(lse)) throw DegeneracyError("every particle weight is zero", target_index_, w_, w_);
  for (double& v : log_weights) v -= lse;
  log_weights_ = std::move(log_weights);
}

void ParticleSystem::restore_log_weights(std::vector<double> log_weights) {
  if (log_weights.size() != size_) throw ConfigurationError("log-weight count does not match S");
  log_weights_ = std::move(log_weights);
}

void ParticleSystem::set_particle(std::size_t s, std::span<const double> theta, std::span<const double> losses) {
  std::copy(theta.begin(), theta.end(), particles_.begin() + static_cast<std::ptrdiff_t>(s * p_));
  std::copy(losses.begin(), losses.end(), losses_.begin() + static_cast<std::ptrdiff_t>(s * n_));
}

void ParticleSystem::select(std::span<const std::size_t> ancestors) {
  if (ancestors.size() != size_) throw ConfigurationError("ancestor count does not match S");
  std::vector<double> particles(particles_.size());
  std::vector<double> losses(losses_.size());
  for (std::size_t s = 0; s < size_; ++s) {
    const std::size_t a = ancestors[s];
    std::copy_n(particles_.begin() + static_cast<std::ptrdiff_t>(a * p_), p_,
                particles.begin() + static_cast<std::ptrdiff_t>(s * p_));
    std::copy_n(losses_.begin() + static_cast<std::ptrdiff_t>(a * n_), n_,
                losses.begin() + static_cast<std::ptrdiff_t>(s * n_));
  }
  particles_ = std::move(particles);
  losses_ = std::move(losses);
  log_weights_.assign(size_, -std::log(static_cast<double>(size_)));
}

std::vector<double> ParticleSystem::mean() const {
  const auto w = weights();
  std::vector<double> m(p_, 0.0);
  for (std::size_t s = 0; s < size_; ++s)
    for (std::size_t k = 0; k < p_; ++k) m[k] += w[s] * particles_[s * p_ + k];
  return m;
}

std::vector<double> ParticleSystem::covariance() const {
  const auto w = weights();
  const auto m = mean();
  std::vector<double> c(p_ * p_, 0.0);
  for (std::size_t s = 0; s < size_; ++s) {
    for (std::size_t a = 0; a < p_; ++a) {
      const double da = particles_[s * p_ + a] - m[a];
      for (std::size_t b = 0; b < p_; ++b) c[a * p_ + b] += w[s] * da * (particles_[s * p_ + b] - m[b]);
    }
  }
  return c;
}

}  // namespace gibbs::smc
