#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gibbs/core/contracts.hpp"
#include "gibbs/smc/particles.hpp"

namespace gibbs::predictive {

/// Reference measure lambda for the predictive kernel exp(-L(theta, y)) lambda(y).
enum class Reference {
  Lebesgue,  ///< lambda = 1
  Gaussian,  ///< lambda = N(0, sd^2 I) density
};

struct PartitionOptions {
  Reference reference = Reference::Lebesgue;
  double reference_sd = 1.0;
  /// Integrate numerically (output dimension <= 2) when no closed form applies.
  bool numeric_fallback = false;
  std::size_t nodes_per_dimension = 2001;
  /// Half-width of the integration box around F(theta) (Lebesgue) or 0 (Gaussian, in units of sd).
  double half_width = 60.0;
};

/// log of Z(theta) = int exp(-L(theta, y)) lambda(y) dy. Closed form for
/// translation-invariant losses under the Lebesgue reference; numeric
/// otherwise when enabled. Throws UnsupportedLossError when no finite value
/// can be established.
double log_loss_partition(std::span<const double> theta, const LossModel& loss, const PartitionOptions& options = {});
double loss_partition(const ParameterVector& theta, const LossModel& loss, const PartitionOptions& options = {});

/// log lambda(y).
double log_reference_density(std::span<const double> y, const PartitionOptions& options);

/// log Z(theta_s) for every particle.
std::vector<double> log_partitions(const smc::ParticleSystem& ps, const LossModel& loss,
                                   const PartitionOptions& options = {});

struct PredictiveDensity {
  /// log[sum_s w_s exp(-L(theta_s, y))] - log[sum_s w_s Z(theta_s)] + log lambda(y).
  double log_density = 0.0;
  /// log lambda(y), already included in log_density.
  double log_reference = 0.0;
  /// Non-empty when every exp(-L) underflowed and log_density is -inf.
  std::string diagnostic;
};

PredictiveDensity log_predictive_density(const smc::ParticleSystem& ps, std::span<const double> y_new,
                                         const LossModel& loss, const PartitionOptions& options = {});

struct PredictiveEstimate {
  double p_cv = 0.0;
  double se = 0.0;
  std::vector<double> per_datum;
};

/// P_CV = (1/n) sum_i [log sum_s r_i(s) Z(theta_s) - log sum_s r_i(s) exp(-l_si) - log lambda(y_i)]
/// with self-normalised leave-one-out weights r_i at tempering weight w.
/// `log_z` holds log Z(theta_s); `log_lambda` holds log lambda(y_i) (empty means zero).
PredictiveEstimate estimate_p_cv(std::span<const double> losses, std::span<const double> log_weights,
                                 std::span<const double> log_z, std::span<const double> log_lambda, std::size_t n,
                                 double w);
PredictiveEstimate estimate_p_cv(const smc::ParticleSystem& ps, double w, const LossModel& loss, const Dataset& data,
                                 const PartitionOptions& options = {});

struct Candidate {
  std::string name;
  std::shared_ptr<const LossModel> loss;
  double w = 0.0;
  /// System targeting the mixture at w, built with this candidate's loss.
  smc::ParticleSystem system;
  std::string dataset_hash;
};

struct PredictiveEntry {
  std::string name;
  double w = 0.0;
  double p_cv = 0.0;
  double se = 0.0;
};

struct PredictiveReport {
  /// Ascending in P_CV.
  std::vector<PredictiveEntry> ranking;
  /// Pairs (by ranking position) with |difference| < sum of SEs.
  std::vector<std::pair<std::size_t, std::size_t>> overlaps;
  /// Pairs with exactly equal P_CV.
  std::vector<std::pair<std::size_t, std::size_t>> ties;

  std::string to_json() const;
  /// Columns: model, W, P_CV, SE.
  std::string to_table() const;
};

/// Throws ConfigurationError when the candidates were fitted to different datasets.
PredictiveReport compare_models(std::span<const Candidate> candidates, const Dataset& data,
                                const PartitionOptions& options = {});

}  // namespace gibbs::predictive
