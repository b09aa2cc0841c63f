#include "gibbs/smc/filter.hpp"

#include <deque>

#include <fmt/format.h>

#include "gibbs/core/errors.hpp"
#include "gibbs/util/numeric.hpp"

namespace gibbs::smc {

void FilterConfig::validate() const {
  if (particles < 2) throw ConfigurationError(fmt::format("need at least two particles, got {}", particles));
  if (!(ess_threshold >= 0.0 && ess_threshold <= 1.0))
    throw ConfigurationError(fmt::format("ESS threshold must lie in [0, 1], got {}", ess_threshold));
  if (!(degeneracy_threshold >= 0.0 && degeneracy_threshold < 1.0))
    throw ConfigurationError(fmt::format("degeneracy threshold must lie in [0, 1), got {}", degeneracy_threshold));
}

FilterRun run_calibration_filter(const Problem& problem, const FilterConfig& config, const StepObserver& observer) {
  problem.validate();
  config.validate();
  FilterRun run;
  ParticleSystem ps = ParticleSystem::from_prior(*problem.prior, *problem.loss, *problem.data, config.particles, config.seed);
  ps.set_target(0.0, Target::Mixture, 0);
  const StepRecord initial{0.0, 0, effective_sample_size(ps), false, {}};
  run.systems.push_back(ps);
  run.steps.push_back(initial);
  if (observer) observer(ps, initial);

  std::deque<std::pair<double, std::size_t>> pending;
  for (std::size_t t = 1; t < config.grid.size(); ++t) pending.emplace_back(config.grid[t], t);
  std::size_t bisections = 0;
  while (!pending.empty()) {
    const auto [to_w, grid_index] = pending.front();
    const double from_w = ps.w();
    ParticleSystem next = [&]() -> ParticleSystem {
      try {
        return reweight(ps, from_w, to_w, config.degeneracy_threshold);
      } catch (const DegeneracyError& e) {
        if (!config.adaptive_bisection || bisections >= config.max_bisections)
          throw DegeneracyError(e.what(), grid_index, from_w, to_w);
        return ps;
      }
    }();
    if (next.w() != to_w) {
      ++bisections;
      pending.emplace_front(0.5 * (from_w + to_w), kInsertedStep);
      continue;
    }
    pending.pop_front();
    StepRecord record{to_w, grid_index, effective_sample_size(next), false, {}};
    if (record.ess < config.ess_threshold) {
      const auto kernel = MutationKernel::adaptive(next);
      next = resample(std::move(next));
      next = mutate(std::move(next), to_w, Target::Mixture, kernel, config.mh_steps, problem, &record.mutation);
      record.resampled = true;
    }
    next.set_target(to_w, Target::Mixture, run.systems.size());
    run.systems.push_back(next);
    run.steps.push_back(record);
    if (observer) observer(next, record);
    ps = std::move(next);
  }
  return run;
}

ParticleSystem run_full_posterior_filter(ParticleSystem ps, const Problem& problem, double w, std::size_t mh_steps,
                                         MutationStats* stats) {
  problem.validate();
  if (ps.target() != Target::Mixture || ps.w() != w)
    throw ConfigurationError(fmt::format("full posterior correction expects the mixture at W = {}", w));
  std::vector<double> log_w = ps.log_weights();
  for (std::size_t s = 0; s < ps.size(); ++s) {
    const auto row = ps.losses(s);
    log_w[s] += -w * util::order_free_sum(row) - log_mixture_kernel(row, w);
  }
  ps.set_log_weights(std::move(log_w));
  const auto kernel = MutationKernel::adaptive(ps);
  ps = resample(std::move(ps));
  ps.set_target(w, Target::FullPosterior, ps.target_index());
  return mutate(std::move(ps), w, Target::FullPosterior, kernel, mh_steps, problem, stats);
}

}  // namespace gibbs::smc
