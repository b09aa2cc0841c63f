#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gibbs/core/contracts.hpp"
#include "gibbs/oracle/quadrature.hpp"

namespace gibbs::oracle {

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// One point of a verification curve: the schedule value, an optional scalar
/// (mass, KL gap, ...) and optional divergences against the reference.
struct CurveRow {
  double x = 0.0;
  std::optional<double> value;
  std::optional<Divergences> divergences;
};

struct VerificationReport {
  std::string suite;
  std::string x_label;
  std::string value_label;
  std::vector<CurveRow> rows;
  std::vector<Check> checks;
  std::map<std::string, double> scalars;

  bool passed() const;
  void check(std::string name, bool ok, std::string detail = {});
  /// x, value, KL, KL_reverse, hellinger, TV; empty cells where a column does not apply.
  std::string to_csv() const;
  std::string to_json() const;
};

/// y = theta* + N(0, noise_sd^2) scored by scale * (theta - y)^2 under a
/// N(0, prior_sd^2) prior. The default scale 1/(2 noise_sd^2) makes the
/// loss-based predictive at theta* equal to the data distribution.
struct LocationProblem {
  double theta_star = 0.5;
  double noise_sd = 0.25;
  double loss_scale = 8.0;
  double prior_sd = 1.0;
  double w = 0.25;
  std::uint64_t seed = 1;

  std::shared_ptr<const LossModel> loss() const;
  std::shared_ptr<const PriorModel> prior() const;
  /// n fresh observations; different `stream`s give independent datasets.
  Dataset simulate(std::size_t n, std::uint64_t stream) const;
};

/// Divergences between posteriors for data y and y + delta (every entry shifted).
/// Checks that they vanish with delta, that KL / sum ||delta||^2 stays bounded and,
/// for each halving of delta, that KL shrinks by a factor in [2.5, 6].
VerificationReport verify_stability(const LossModel& loss, const PriorModel& prior, const Dataset& data, double w,
                                    std::vector<double> deltas = {0.2, 0.1, 0.05, 0.025},
                                    const GridSpec& spec = {});

/// Hellinger distance between the posteriors at W and W (1 + offset) shrinks to zero.
VerificationReport verify_w_continuity(const LossModel& loss, const PriorModel& prior, const Dataset& data, double w,
                                       std::vector<double> offsets = {0.2, 0.1, 0.05, 0.025},
                                       const GridSpec& spec = {});

/// Loss for a forward model discretised with m source points.
using MeshLossFactory = std::function<std::shared_ptr<const LossModel>(std::size_t m)>;

/// sqrt(1 - exp(-a W (1 + e^{b n W})^2 psi)).
double approximation_hellinger_bound(double a, double b, std::size_t n, double w, double psi);

/// Divergences between the posterior at a fine reference mesh and coarser ones.
/// Both must decrease (up to 1e-8) as the mesh is refined. The Hellinger bound
/// with psi(h) = h^2 is fitted to the curve and checked to be <= 1 and monotone.
VerificationReport verify_finite_approximation(const MeshLossFactory& make_loss, const PriorModel& prior,
                                               const Dataset& data, double w,
                                               std::vector<std::size_t> meshes = {25, 50, 100, 200},
                                               std::size_t reference = 800, const GridSpec& spec = {});

/// Posterior mass outside the radius-eps ball about theta*, fresh data per n.
/// Checks strict decrease and mass < 0.01 at the largest n; the n = 0 row is the prior.
VerificationReport verify_consistency(const LocationProblem& problem, std::vector<std::size_t> ns = {10, 100, 1000},
                                      double eps = 0.1, const GridSpec& spec = {});

/// Skewed (asymmetric Laplace) noise with the squared loss: the posterior
/// concentrates at the risk minimizer (the noise mean), found by brute-force
/// minimization of a Monte Carlo risk, and not at the noise median.
struct SkewedProblem {
  double location = 0.0;  ///< mode of the noise
  double left_scale = 0.2;
  double right_scale = 1.0;
  double loss_scale = 4.0;
  double w = 0.25;
  std::size_t n = 10000;
  std::size_t risk_draws = 100000;
  std::uint64_t seed = 1;

  double median() const;
  double mean() const;
  double draw(Rng& rng) const;
};

VerificationReport verify_misspecified_concentration(const SkewedProblem& problem, double eps = 0.1,
                                                     const GridSpec& spec = {});

struct GapEstimate {
  double gap = 0.0;
  double se = 0.0;
  std::vector<double> per_draw;
};

/// Monte Carlo estimate of KL(P || p_hat) - KL(P || p_star) = E_P[log p_star - log p_hat].
GapEstimate kl_gap(std::span<const double> draws, const std::function<double(double)>& log_p_hat,
                   const std::function<double(double)>& log_p_star);

/// log of the grid-posterior predictive density at a scalar y.
double grid_log_predictive(const GridPosterior& posterior, const LossModel& loss, double y);

/// KL gap between the Gibbs predictive and the loss-based predictive at theta*
/// for each n, on common draws of y_new. Checks decrease within Monte Carlo noise
/// and |gap| < 0.02 at the largest n.
VerificationReport verify_predictive_convergence(const LocationProblem& problem,
                                                 std::vector<std::size_t> ns = {10, 100, 1000},
                                                 std::size_t draws = 10000, const GridSpec& spec = {});

/// d_H^2 <= TV <= sqrt(1 - exp(-min KL)) on randomized posterior pairs.
VerificationReport verify_inequalities(std::uint64_t seed, std::size_t pairs = 100, const GridSpec& spec = {});

}  // namespace gibbs::oracle
