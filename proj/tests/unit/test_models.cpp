#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "doctest.h"
#include "gibbs/core/errors.hpp"
#include "gibbs/core/risk.hpp"
#include "gibbs/models/dataset_io.hpp"
#include "gibbs/models/fredholm.hpp"
#include "gibbs/models/losses.hpp"
#include "gibbs/models/priors.hpp"
#include "gibbs/models/simulate.hpp"
#include "gibbs/models/surrogate.hpp"
#include "gibbs/util/numeric.hpp"

using namespace gibbs;
using namespace gibbs::models;

namespace {

template <typename F>
double integrate(F&& f, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-13);
}

std::vector<double> random_fredholm_theta(std::mt19937_64& rng, std::size_t blocks) {
  std::uniform_real_distribution<double> coef(0.1, 8.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> theta;
  for (std::size_t j = 0; j < blocks; ++j) theta.push_back(coef(rng));
  std::vector<double> cuts;
  for (std::size_t j = 1; j < blocks; ++j) cuts.push_back(unit(rng));
  std::sort(cuts.begin(), cuts.end());
  theta.insert(theta.end(), cuts.begin(), cuts.end());
  return theta;
}

// Kolmogorov-Smirnov statistic of samples against a CDF tabulated by
// trapezoid integration of the prior density on [lo, hi].
double ks_statistic(const PriorModel& prior, std::vector<double> samples, double lo, double hi) {
  const std::size_t nodes = 200001;
  std::vector<double> x(nodes), cdf(nodes, 0.0);
  const double h = (hi - lo) / static_cast<double>(nodes - 1);
  double previous = 0.0;
  for (std::size_t k = 0; k < nodes; ++k) {
    x[k] = lo + h * static_cast<double>(k);
    const double f = std::exp(prior.log_density(std::vector<double>{x[k]}));
    if (k > 0) cdf[k] = cdf[k - 1] + 0.5 * h * (f + previous);
    previous = f;
  }
  std::sort(samples.begin(), samples.end());
  double worst = 0.0;
  const double n = static_cast<double>(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto it = std::lower_bound(x.begin(), x.end(), samples[i]);
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(it - x.begin()), nodes - 1);
    worst = std::max({worst, std::abs(cdf[k] - static_cast<double>(i) / n),
                      std::abs(cdf[k] - static_cast<double>(i + 1) / n)});
  }
  return worst;
}

}  // namespace

TEST_CASE("kernel operator: shape and positivity") {
  const SmoothingKernelOperator op(unit_grid(100), 400);
  CHECK(op.matrix().size() == 100 * 400);
  CHECK(std::all_of(op.matrix().begin(), op.matrix().end(), [](double v) { return v > 0.0; }));
}

TEST_CASE("toy forward: zero function") {
  const SmoothingKernelOperator op(unit_grid(100), 400);
  const auto out = toy_forward(ParameterVector{0.0, 0.0, 0.0, 0.0, 0.25, 0.5, 0.75}, op, 4);
  CHECK(std::all_of(out.begin(), out.end(), [](double v) { return v == 0.0; }));
}

TEST_CASE("toy forward: constant function ignores cutpoints") {
  const SmoothingKernelOperator op(unit_grid(100), 400);
  const auto ones = op.apply(PiecewiseConstantFunction({1.0}, {}));
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    auto theta = random_fredholm_theta(rng, 4);
    std::fill(theta.begin(), theta.begin() + 4, 2.5);
    const auto out = toy_forward(ParameterVector(theta), op, 4);
    for (std::size_t k = 0; k < out.size(); ++k) CHECK(out[k] == doctest::Approx(2.5 * ones[k]).epsilon(1e-12));
  }
}

TEST_CASE("toy forward: u = 4 at t = 0.5") {
  const SmoothingKernelOperator op({0.5}, 400);
  const double oracle = integrate([](double s) { return 4.0 / std::pow(1.0 + (s - 0.5) * (s - 0.5), 1.5); }, 0.0, 1.0);
  const auto out = op.apply(PiecewiseConstantFunction({4.0}, {}));
  CHECK(out[0] == doctest::Approx(oracle).epsilon(1e-5));
  CHECK(oracle == doctest::Approx(3.578).epsilon(1e-3));
}

TEST_CASE("toy forward: piecewise input against adaptive quadrature") {
  const SmoothingKernelOperator op(unit_grid(11), 400);
  const PiecewiseConstantFunction u({1.0, 5.0, 2.0}, {0.3137, 0.7021});
  const auto out = op.apply(u);
  for (std::size_t r = 0; r < 11; ++r) {
    const double t = op.evaluation_grid()[r];
    double oracle = 0.0;
    for (std::size_t j = 0; j < 3; ++j)
      oracle += u.coefficients()[j] *
                integrate([t](double s) { return SmoothingKernelOperator::kernel(s, t); }, u.block_begin(j), u.block_end(j));
    CHECK(out[r] == doctest::Approx(oracle).epsilon(1e-5));
  }
}

TEST_CASE("toy forward: rejects unordered cutpoints") {
  const SmoothingKernelOperator op(unit_grid(10), 50);
  CHECK_THROWS_AS(toy_forward(ParameterVector{1.0, 1.0, 0.6, 0.4, 0.1, 1.0, 1.0}, op, 4), DomainError);
  CHECK_THROWS_AS(toy_forward(ParameterVector{1.0, 1.0, 1.5}, op, 2), DomainError);
  CHECK_THROWS_AS(toy_forward(ParameterVector{-1.0, 1.0, 0.5}, op, 2), DomainError);
}

TEST_CASE("property: doubling the source mesh changes outputs by less than 1e-4") {
  const SmoothingKernelOperator coarse(unit_grid(100), 400);
  const SmoothingKernelOperator fine(unit_grid(100), 799);
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    const ParameterVector theta(random_fredholm_theta(rng, 4));
    const auto a = toy_forward(theta, coarse, 4);
    const auto b = toy_forward(theta, fine, 4);
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(std::abs(a[k] - b[k]) < 1e-4);
  }
}

TEST_CASE("property: toy forward is linear in the coefficients") {
  const SmoothingKernelOperator op(unit_grid(100), 400);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> alpha(0.01, 10.0);
  for (int trial = 0; trial < 100; ++trial) {
    auto theta = random_fredholm_theta(rng, 4);
    const double a = alpha(rng);
    auto scaled = theta;
    for (std::size_t j = 0; j < 4; ++j) scaled[j] *= a;
    const auto base = toy_forward(ParameterVector(theta), op, 4);
    const auto out = toy_forward(ParameterVector(scaled), op, 4);
    for (std::size_t k = 0; k < out.size(); ++k) CHECK(std::abs(out[k] - a * base[k]) <= 1e-12 * std::abs(a * base[k]) + 1e-14);
  }
}

TEST_CASE("toy simulation: zero noise reproduces the forward map") {
  const SmoothingKernelOperator op(unit_grid(100), 400);
  const ParameterVector truth{4.0, 4.0, 4.0, 4.0, 0.25, 0.5, 0.75};
  const auto clean = toy_forward(truth, op, 4);
  for (auto kind : {NoiseKind::AdditiveGaussian, NoiseKind::MultiplicativeLognormalBlockwise}) {
    const auto data = simulate_toy_dataset(truth, NoiseSpec{kind, 0.0, 0.2, 4}, 5, op, 4);
    for (std::size_t i = 0; i < data.size(); ++i)
      for (std::size_t k = 0; k < data.dimension(); ++k) CHECK(data.observation(i)[k] == clean[k]);
  }
}

TEST_CASE("toy simulation: configuration with 90 curves centres on K u") {
  const SmoothingKernelOperator op(unit_grid(100), 400);
  const ParameterVector truth{4.0, 4.0, 4.0, 4.0, 0.25, 0.5, 0.75};
  const auto data = simulate_toy_dataset(truth, NoiseSpec{NoiseKind::MultiplicativeLognormalBlockwise, 1.0, 0.2, 2024}, 90, op, 4);
  const auto clean = toy_forward(truth, op, 4);
  CHECK(data.size() == 90);
  std::vector<double> column(90);
  for (std::size_t k = 0; k < data.dimension(); ++k) {
    for (std::size_t i = 0; i < 90; ++i) column[i] = data.observation(i)[k];
    const double mean = util::order_free_mean(column);
    CHECK(std::abs(mean - clean[k]) <= 3.0 * util::standard_error_of_mean(column));
  }
}

TEST_CASE("toy simulation: identical seeds give identical datasets") {
  const SmoothingKernelOperator op(unit_grid(30), 100);
  const ParameterVector truth{4.0, 2.0, 0.5};
  const NoiseSpec noise{NoiseKind::MultiplicativeLognormalBlockwise, 1.0, 0.2, 77};
  const auto a = simulate_toy_dataset(truth, noise, 20, op, 2);
  const auto b = simulate_toy_dataset(truth, noise, 20, op, 2);
  CHECK(a.content_hash() == b.content_hash());
  CHECK(a.observations() == b.observations());
  auto other = noise;
  other.seed = 78;
  CHECK(simulate_toy_dataset(truth, other, 20, op, 2).content_hash() != a.content_hash());
}

TEST_CASE("log-normal factors have mean one") {
  const NoiseSpec noise{NoiseKind::MultiplicativeLognormalBlockwise, 1.0, 0.2, 99};
  CHECK(noise.location() == -0.5);
  Rng rng(noise.seed);
  std::normal_distribution<double> z(0.0, 1.0);
  double acc = 0.0;
  for (int i = 0; i < 100000; ++i) acc += std::exp(noise.location() + noise.sigma * z(rng));
  const double mean = acc / 100000.0;
  CHECK(mean >= 0.99);
  CHECK(mean <= 1.01);
}

TEST_CASE("smooth multiplicative noise keeps curves positive") {
  const SurrogateDispersionModel model(SurrogateDispersionModel::default_frequencies());
  const ParameterVector truth{30.0, 5.5, 2.8};
  const auto data = simulate_curves(model, truth, NoiseSpec{NoiseKind::MultiplicativeLognormalSmooth, 0.05, 0.2, 3}, 5,
                                    model.frequencies());
  for (std::size_t i = 0; i < data.size(); ++i)
    for (double v : data.observation(i)) CHECK(v > 0.0);
}

TEST_CASE("surrogate: box centre gives a positive increasing curve") {
  const auto out = surrogate_dispersion_forward(ParameterVector{50.0, 5.75, 3.0});
  CHECK(out.size() == 40);
  for (std::size_t k = 0; k < out.size(); ++k) {
    CHECK(std::isfinite(out[k]));
    CHECK(out[k] > 0.0);
    if (k > 0) CHECK(out[k] > out[k - 1]);
  }
}

TEST_CASE("surrogate: thickness is weakly identified") {
  for (double modulus : {5.0, 20.0, 50.0, 95.0}) {
    for (double radius : {2.0, 3.0, 4.0}) {
      const auto thin = surrogate_dispersion_forward(ParameterVector{modulus, 5.0, radius});
      const auto thick = surrogate_dispersion_forward(ParameterVector{modulus, 6.5, radius});
      const auto [lo, hi] = std::minmax_element(thin.begin(), thin.end());
      const double range = *hi - *lo;
      for (std::size_t k = 0; k < thin.size(); ++k) CHECK(std::abs(thin[k] - thick[k]) < 0.05 * range);
    }
  }
}

TEST_CASE("surrogate: doubling the modulus raises the curve everywhere") {
  const auto base = surrogate_dispersion_forward(ParameterVector{30.0, 5.5, 2.8});
  const auto stiff = surrogate_dispersion_forward(ParameterVector{60.0, 5.5, 2.8});
  for (std::size_t k = 0; k < base.size(); ++k) CHECK(stiff[k] > base[k]);
  CHECK_THROWS_AS(surrogate_dispersion_forward(ParameterVector{100.0, 5.5, 2.8}), DomainError);
  CHECK_THROWS_AS(surrogate_dispersion_forward(ParameterVector{30.0, 7.0, 2.8}), DomainError);
}

TEST_CASE("surrogate: loss scale at the preset noise level is near 41") {
  const SurrogateDispersionModel model(SurrogateDispersionModel::default_frequencies());
  const auto data = simulate_curves(model, ParameterVector{30.0, 5.5, 2.8},
                                    NoiseSpec{NoiseKind::AdditiveGaussian, 0.11, 0.2, 1}, 5, model.frequencies());
  const double w0 = loss_scale_estimate(data);
  CHECK(w0 > 30.0);
  CHECK(w0 < 55.0);
}

TEST_CASE("losses: definitions on a fixed residual") {
  auto forward = std::make_shared<IdentityForwardModel>(3);
  const std::vector<double> prediction{1.0, -1.0, 2.0}, zero{0.0, 0.0, 0.0};
  CHECK(SquaredL2Loss(forward, 1.0).raw_discrepancy(prediction, zero) == 6.0);
  CHECK(L1Loss(forward, 1.0).raw_discrepancy(prediction, zero) == 4.0);
  CHECK(SquaredL2Loss(forward, 0.5).evaluate_prediction(prediction, zero) == 3.0);
  CHECK(builtin_losses(forward).size() == 4);
  CHECK_THROWS_AS(make_loss("hinge", forward, 1.0), ConfigurationError);
  CHECK_THROWS_AS(SquaredL2Loss(forward, 0.0), ConfigurationError);
  CHECK_THROWS_AS(GaussianNllLoss(forward, 1.0, 0.1), ConfigurationError);
  CHECK_THROWS_AS(LaplaceNllLoss(forward, 1.0, 0.2), ConfigurationError);
}

TEST_CASE("losses: Gaussian NLL is half the squared loss plus a normalising constant") {
  auto forward = std::make_shared<IdentityForwardModel>(1);
  const GaussianNllLoss nll(forward, 1.0);
  const SquaredL2Loss sq(forward, 1.0);
  const double c = nll.evaluate(ParameterVector{0.0}, std::vector<double>{0.0});
  for (double r : {-3.0, -0.5, 0.25, 2.0}) {
    const std::vector<double> y{r};
    CHECK(nll.evaluate(ParameterVector{0.0}, y) == doctest::Approx(0.5 * sq.evaluate(ParameterVector{0.0}, y) + c));
  }
  const double mass = integrate(
      [&](double r) { return std::exp(-nll.evaluate(ParameterVector{0.0}, std::vector<double>{r})); }, -40.0, 40.0);
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("losses: closed-form log partitions match quadrature in one dimension") {
  auto forward = std::make_shared<IdentityForwardModel>(1);
  for (double scale : {0.3, 1.0, 4.0}) {
    for (const auto& [name, loss] : builtin_losses(forward, scale)) {
      CAPTURE(name);
      CAPTURE(scale);
      const double z = integrate(
          [&](double r) { return std::exp(-loss->evaluate(ParameterVector{0.0}, std::vector<double>{r})); }, -200.0,
          200.0);
      CHECK(*loss->log_partition(1) == doctest::Approx(std::log(z)).epsilon(1e-9));
      CHECK(*loss->log_partition(3) == doctest::Approx(3.0 * std::log(z)).epsilon(1e-9));
    }
  }
}

TEST_CASE("priors: closed-form density values") {
  const GammaPrior gamma(2.0, 1.0, 1);
  CHECK(gamma.log_density(std::vector<double>{1.0}) == doctest::Approx(std::log(1.0 * std::exp(-1.0))));
  CHECK(gamma.log_density(std::vector<double>{-1.0}) == util::kNegInf);

  const OrderedUniformPrior ordered(2);
  CHECK(std::exp(ordered.log_density(std::vector<double>{0.2, 0.7})) == doctest::Approx(2.0));
  CHECK(ordered.log_density(std::vector<double>{0.7, 0.2}) == util::kNegInf);
  CHECK(ordered.log_density(std::vector<double>{0.2, 1.2}) == util::kNegInf);

  const ScaledBetaPrior beta(1.0, 3.0, {5.0}, {95.0});
  // Beta(1,3) density 3(1-x)^2 mapped to [5, 95]
  CHECK(std::exp(beta.log_density(std::vector<double>{5.0})) == doctest::Approx(3.0 / 90.0));
  CHECK(std::exp(beta.log_density(std::vector<double>{95.0})) == 0.0);
  CHECK(beta.log_density(std::vector<double>{96.0}) == util::kNegInf);
}

TEST_CASE("priors: invalid hyperparameters") {
  CHECK_THROWS_AS(GammaPrior(0.0, 1.0, 1), ConfigurationError);
  CHECK_THROWS_AS(GaussianPrior(0.0, -1.0, 1), ConfigurationError);
  CHECK_THROWS_AS(ScaledBetaPrior(1.0, -3.0, {0.0}, {1.0}), ConfigurationError);
  CHECK_THROWS_AS(ScaledBetaPrior(1.0, 3.0, {1.0}, {0.0}), ConfigurationError);
  CHECK_THROWS_AS(OrderedUniformPrior(0), ConfigurationError);
}

TEST_CASE("priors: one-dimensional densities integrate to one") {
  const std::vector<std::tuple<std::string, std::shared_ptr<const PriorModel>, double, double>> cases{
      {"gamma", std::make_shared<GammaPrior>(2.0, 1.0, 1), 0.0, 80.0},
      {"gaussian", std::make_shared<GaussianPrior>(0.5, 2.0, 1), -40.0, 40.0},
      {"scaled-beta", std::make_shared<ScaledBetaPrior>(1.0, 3.0, std::vector<double>{5.0}, std::vector<double>{95.0}), 5.0, 95.0},
      {"ordered-uniform", std::make_shared<OrderedUniformPrior>(1), 0.0, 1.0},
  };
  for (const auto& [name, prior, lo, hi] : cases) {
    CAPTURE(name);
    const double mass = integrate([&](double x) { return std::exp(prior->log_density(std::vector<double>{x})); }, lo, hi);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
  }
  const OrderedUniformPrior ordered(2);
  const double mass2 = integrate(
      [&](double a) {
        return integrate([&](double b) { return std::exp(ordered.log_density(std::vector<double>{a, b})); }, 0.0, 1.0);
      },
      0.0, 1.0);
  CHECK(mass2 == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("property: samplers agree with their densities") {
  const std::vector<std::tuple<std::string, std::shared_ptr<const PriorModel>, double, double>> cases{
      {"gamma", std::make_shared<GammaPrior>(2.0, 1.0, 1), 0.0, 60.0},
      {"gaussian", std::make_shared<GaussianPrior>(0.0, 1.0, 1), -12.0, 12.0},
      {"scaled-beta", std::make_shared<ScaledBetaPrior>(1.0, 3.0, std::vector<double>{5.0}, std::vector<double>{95.0}), 5.0, 95.0},
      {"ordered-uniform", std::make_shared<OrderedUniformPrior>(1), 0.0, 1.0},
  };
  for (const auto& [name, prior, lo, hi] : cases) {
    CAPTURE(name);
    Rng rng(17);
    std::vector<double> samples;
    for (int i = 0; i < 10000; ++i) {
      const auto theta = prior->sample(rng);
      CHECK(std::isfinite(prior->log_density(theta)));
      samples.push_back(theta[0]);
    }
    CHECK(ks_statistic(*prior, samples, lo, hi) < 0.02);
  }
}

TEST_CASE("property: joint samples lie in the support") {
  const auto prior = fredholm_prior(4);
  CHECK(prior->dimension() == 7);
  CHECK(prior->names()->at(4) == "c1");
  Rng rng(4);
  for (int i = 0; i < 2000; ++i) {
    const auto theta = prior->sample(rng);
    CHECK(std::isfinite(prior->log_density(theta)));
    CHECK(prior->domain().contains(theta));
  }
  const auto surrogate = surrogate_prior();
  for (int i = 0; i < 2000; ++i) CHECK(std::isfinite(surrogate->log_density(surrogate->sample(rng))));
}

TEST_CASE("priors: mass outside a box") {
  const GaussianPrior g(0.0, 1.0, 2);
  CHECK(g.mass_outside(std::vector<double>{-1e3, -1e3}, std::vector<double>{1e3, 1e3}) == 0.0);
  const double one = std::erfc(1.0 / std::sqrt(2.0));
  CHECK(g.mass_outside(std::vector<double>{-1.0, -1e3}, std::vector<double>{1.0, 1e3}) == doctest::Approx(one));
  const GammaPrior gamma(2.0, 1.0, 1);
  const auto box = gamma.central_box(1e-12);
  CHECK(gamma.mass_outside(std::vector<double>{box[0].first}, std::vector<double>{box[0].second}) ==
        doctest::Approx(1e-12).epsilon(1e-3));
}

TEST_CASE("dataset csv round trip is exact") {
  const SmoothingKernelOperator op(unit_grid(17), 60);
  const auto data = simulate_toy_dataset(ParameterVector{4.0, 1.0, 0.3}, NoiseSpec{NoiseKind::MultiplicativeLognormalBlockwise, 1.0, 0.2, 5},
                                         7, op, 2);
  const auto dir = std::filesystem::temp_directory_path() / "gibbs_io_test";
  std::filesystem::create_directories(dir);
  save_dataset(data, dir / "data.csv");
  const auto back = load_dataset(dir / "data.csv");
  CHECK(back.content_hash() == data.content_hash());
  CHECK(back.metadata().seed == data.metadata().seed);
  CHECK(back.metadata().truth == data.metadata().truth);
  CHECK(back.metadata().noise_description == data.metadata().noise_description);
  CHECK_THROWS_AS(load_dataset(dir / "missing.csv"), IoError);
  std::filesystem::remove_all(dir);
}
