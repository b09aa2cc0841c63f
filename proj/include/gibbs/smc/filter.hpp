#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "gibbs/smc/operations.hpp"
#include "gibbs/smc/wgrid.hpp"

namespace gibbs::smc {

struct FilterConfig {
  WGrid grid = WGrid::dyadic();
  std::size_t particles = 2000;
  std::size_t mh_steps = 10;
  /// Resample and mutate when the normalised ESS drops below this.
  double ess_threshold = 0.5;
  std::uint64_t seed = 1;
  /// Insert midpoints between grid weights when reweighting degenerates.
  bool adaptive_bisection = false;
  std::size_t max_bisections = 8;
  /// Normalised ESS at or below which a reweight counts as degenerate.
  double degeneracy_threshold = 0.0;

  void validate() const;
};

inline constexpr std::size_t kInsertedStep = std::numeric_limits<std::size_t>::max();

/// What happened on arrival at one weight.
struct StepRecord {
  double w = 0.0;
  /// Index into the configured grid, or kInsertedStep for bisection midpoints.
  std::size_t grid_index = 0;
  double ess = 1.0;
  bool resampled = false;
  MutationStats mutation;
};

struct FilterRun {
  /// Particle system retained at each visited weight, W_0 first.
  std::vector<ParticleSystem> systems;
  std::vector<StepRecord> steps;
};

using StepObserver = std::function<void(const ParticleSystem&, const StepRecord&)>;

/// Particle filter over the grid of mixture targets, starting from prior draws
/// at W_0 = 0. `observer` sees the system retained at each weight.
FilterRun run_calibration_filter(const Problem& problem, const FilterConfig& config, const StepObserver& observer = {});

/// Corrects a system targeting the mixture at w to the full posterior at w,
/// then resamples and applies `mh_steps` mutation steps.
ParticleSystem run_full_posterior_filter(ParticleSystem ps, const Problem& problem, double w, std::size_t mh_steps,
                                         MutationStats* stats = nullptr);

}  // namespace gibbs::smc
