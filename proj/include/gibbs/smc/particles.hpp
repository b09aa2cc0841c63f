#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gibbs/core/contracts.hpp"

namespace gibbs::smc {

/// Which distribution a particle system targets at weight W.
enum class Target {
  Mixture,        ///< rho_0(theta) * sum_i exp(-W sum_{j != i} L(theta, y_j))
  FullPosterior,  ///< rho_0(theta) * exp(-W sum_i L(theta, y_i))
};

/// Running acceptance counts of the Metropolis-Hastings mutation.
struct MutationStats {
  std::size_t proposals = 0;
  std::size_t accepted = 0;
  std::size_t out_of_support = 0;
  std::size_t evaluation_failures = 0;

  double acceptance_rate() const noexcept {
    return proposals == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(proposals);
  }
  MutationStats& operator+=(const MutationStats& other) noexcept;
};

/// S weighted particles with their per-datum losses.
///
/// Storage is flat and row-major: particle s occupies values [s*p, (s+1)*p)
/// and losses [s*n, (s+1)*n). Log-weights are kept normalised so that their
/// exponentials sum to one.
class ParticleSystem {
 public:
  ParticleSystem(std::vector<double> particles, std::vector<double> losses, std::vector<double> log_weights,
                 std::size_t parameter_dimension, std::size_t data_size);

  /// S i.i.d. prior draws at W = 0 with uniform weights and a filled loss cache.
  static ParticleSystem from_prior(const PriorModel& prior, const LossModel& loss, const Dataset& data,
                                   std::size_t particles, std::uint64_t seed);

  std::size_t size() const noexcept { return size_; }
  std::size_t parameter_dimension() const noexcept { return p_; }
  std::size_t data_size() const noexcept { return n_; }

  std::span<const double> particle(std::size_t s) const { return {particles_.data() + s * p_, p_}; }
  std::span<const double> losses(std::size_t s) const { return {losses_.data() + s * n_, n_}; }
  const std::vector<double>& particle_values() const noexcept { return particles_; }
  const std::vector<double>& loss_matrix() const noexcept { return losses_; }
  const std::vector<double>& log_weights() const noexcept { return log_weights_; }
  std::vector<double> weights() const;

  double w() const noexcept { return w_; }
  Target target() const noexcept { return target_; }
  std::size_t target_index() const noexcept { return target_index_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t phase() const noexcept { return phase_; }

  void set_target(double w, Target target, std::size_t index) noexcept {
    w_ = w;
    target_ = target;
    target_index_ = index;
  }
  void set_seed(std::uint64_t seed, std::uint64_t phase) noexcept {
    seed_ = seed;
    phase_ = phase;
  }
  /// Returns the current phase counter and advances it; each random operation
  /// uses a fresh phase so streams never repeat.
  std::uint64_t next_phase() noexcept { return phase_++; }

  /// Replaces the log-weights, normalising them. Throws DegeneracyError if no
  /// weight is positive and finite.
  void set_log_weights(std::vector<double> log_weights);
  /// Installs already normalised log-weights verbatim (checkpoint restore).
  void restore_log_weights(std::vector<double> log_weights);
  void set_particle(std::size_t s, std::span<const double> theta, std::span<const double> losses);

  /// Copies rows according to `ancestors` and resets weights to uniform.
  void select(std::span<const std::size_t> ancestors);

  /// Weighted mean and covariance (row-major p x p) of the particles.
  std::vector<double> mean() const;
  std::vector<double> covariance() const;

  friend bool operator==(const ParticleSystem&, const ParticleSystem&) = default;

 private:
  std::size_t size_;
  std::size_t p_;
  std::size_t n_;
  std::vector<double> particles_;
  std::vector<double> losses_;
  std::vector<double> log_weights_;
  double w_ = 0.0;
  Target target_ = Target::Mixture;
  std::size_t target_index_ = 0;
  std::uint64_t seed_ = 0;
  std::uint64_t phase_ = 0;
};

}  // namespace gibbs::smc
