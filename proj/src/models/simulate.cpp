#include "gibbs/models/simulate.hpp"

#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <fmt/format.h>

#include "gibbs/core/errors.hpp"

namespace gibbs::models {

std::string to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::AdditiveGaussian: return "additive-gaussian";
    case NoiseKind::MultiplicativeLognormalBlockwise: return "multiplicative-lognormal-blockwise";
    case NoiseKind::MultiplicativeLognormalSmooth: return "multiplicative-lognormal-smooth";
  }
  return "unknown";
}

NoiseKind noise_kind_from_string(const std::string& text) {
  for (auto kind : {NoiseKind::AdditiveGaussian, NoiseKind::MultiplicativeLognormalBlockwise,
                    NoiseKind::MultiplicativeLognormalSmooth}) {
    if (to_string(kind) == text) return kind;
  }
  throw ConfigurationError(fmt::format("unknown noise kind '{}'", text));
}

std::string NoiseSpec::describe() const {
  if (kind == NoiseKind::AdditiveGaussian) return fmt::format("{}(sigma={})", to_string(kind), sigma);
  if (kind == NoiseKind::MultiplicativeLognormalBlockwise)
    return fmt::format("{}(location={}, scale={})", to_string(kind), location(), sigma);
  return fmt::format("{}(location={}, scale={}, length_scale={})", to_string(kind), location(), sigma, length_scale);
}

namespace {

void check_noise(const NoiseSpec& noise, std::size_t n) {
  if (n == 0) throw ConfigurationError("simulation needs n >= 1");
  if (!(noise.sigma >= 0.0) || !std::isfinite(noise.sigma))
    throw ConfigurationError(fmt::format("noise scale must be nonnegative, got {}", noise.sigma));
  if (noise.kind == NoiseKind::MultiplicativeLognormalSmooth && !(noise.length_scale > 0.0))
    throw ConfigurationError("smooth noise needs a positive length scale");
}

DatasetMetadata metadata_for(const NoiseSpec& noise, const ParameterVector& truth) {
  return DatasetMetadata{noise.seed, noise.describe(), truth.to_vector()};
}

}  // namespace

Dataset simulate_toy_dataset(const ParameterVector& truth, const NoiseSpec& noise, std::size_t n,
                             const SmoothingKernelOperator& op, std::size_t blocks) {
  check_noise(noise, n);
  if (noise.kind == NoiseKind::MultiplicativeLognormalSmooth)
    throw ConfigurationError("toy simulator supports additive or blockwise multiplicative noise");
  const auto u = PiecewiseConstantFunction::from_parameters(truth.values(), blocks);
  Rng rng(noise.seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<std::vector<double>> rows;
  rows.reserve(n);
  const auto clean = op.apply(u);
  for (std::size_t i = 0; i < n; ++i) {
    if (noise.kind == NoiseKind::AdditiveGaussian) {
      auto y = clean;
      if (noise.sigma > 0.0) {
        for (double& v : y) v += noise.sigma * z(rng);
      }
      rows.push_back(std::move(y));
    } else {
      auto coefficients = u.coefficients();
      if (noise.sigma > 0.0) {
        for (double& b : coefficients) b *= std::exp(noise.location() + noise.sigma * z(rng));
      }
      rows.push_back(op.apply(PiecewiseConstantFunction(std::move(coefficients), u.cutpoints())));
    }
  }
  return Dataset(std::move(rows), op.evaluation_grid(), metadata_for(noise, truth));
}

Dataset simulate_curves(const ForwardModel& forward, const ParameterVector& truth, const NoiseSpec& noise,
                        std::size_t n, std::vector<double> grid) {
  check_noise(noise, n);
  if (noise.kind == NoiseKind::MultiplicativeLognormalBlockwise)
    throw ConfigurationError("blockwise noise needs the piecewise constant toy simulator");
  const auto clean = forward.apply(truth);
  const std::size_t d = clean.size();
  if (grid.size() != d) throw ConfigurationError("simulation grid does not match forward output");

  Eigen::MatrixXd chol;
  if (noise.kind == NoiseKind::MultiplicativeLognormalSmooth) {
    const double span = grid.back() - grid.front();
    Eigen::MatrixXd cov(d, d);
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = 0; b < d; ++b) {
        const double r = span > 0.0 ? (grid[a] - grid[b]) / (span * noise.length_scale) : 0.0;
        cov(a, b) = std::exp(-0.5 * r * r) + (a == b ? 1e-10 : 0.0);
      }
    }
    chol = Eigen::LLT<Eigen::MatrixXd>(cov).matrixL();
  }

  Rng rng(noise.seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<std::vector<double>> rows;
  rows.reserve(n);
  Eigen::VectorXd draw(d);
  for (std::size_t i = 0; i < n; ++i) {
    auto y = clean;
    if (noise.sigma > 0.0) {
      for (std::size_t k = 0; k < d; ++k) draw(static_cast<Eigen::Index>(k)) = z(rng);
      if (noise.kind == NoiseKind::AdditiveGaussian) {
        for (std::size_t k = 0; k < d; ++k) y[k] += noise.sigma * draw(static_cast<Eigen::Index>(k));
      } else {
        const Eigen::VectorXd field = chol * draw;
        for (std::size_t k = 0; k < d; ++k)
          y[k] *= std::exp(noise.location() + noise.sigma * field(static_cast<Eigen::Index>(k)));
      }
    }
    rows.push_back(std::move(y));
  }
  return Dataset(std::move(rows), std::move(grid), metadata_for(noise, truth));
}

}  // namespace gibbs::models
