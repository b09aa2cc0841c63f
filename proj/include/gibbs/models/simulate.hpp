#pragma once

#include <cstdint>
#include <string>


#include "gibbs/core/contracts.hpp"
#include "gibbs/models/fredholm.hpp"

namespace gibbs::models {

enum class NoiseKind { AdditiveGaussian, MultiplicativeLognormalBlockwise, MultiplicativeLognormalSmooth };

/// Observation noise. Multiplicative kinds draw exp(Z) with Z ~ N(-sigma^2/2, sigma^2)
/// so the factor has mean 1. The smooth kind correlates Z across the grid with a
/// squared-exponential kernel whose length scale is a fraction of the grid span.
struct NoiseSpec {
  NoiseKind kind = NoiseKind::AdditiveGaussian;
  double sigma = 0.0;
  double length_scale = 0.2;
  std::uint64_t seed = 0;

  double location() const noexcept { return -0.5 * sigma * sigma; }
  std::string describe() const;
};

std::string to_string(NoiseKind kind);
NoiseKind noise_kind_from_string(const std::string& text);

/// Curves y_i = K(eps_i * u(truth)). Blockwise noise scales the truth's
/// coefficients independently per curve; additive noise is added to K u.
Dataset simulate_toy_dataset(const ParameterVector& truth, const NoiseSpec& noise, std::size_t n,
                             const SmoothingKernelOperator& op, std::size_t blocks);

/// Curves from any forward model with additive Gaussian or smooth
/// multiplicative noise on the output.
Dataset simulate_curves(const ForwardModel& forward, const ParameterVector& truth, const NoiseSpec& noise,
                        std::size_t n, std::vector<double> grid);

}  // namespace gibbs::models
