#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "doctest.h"
#include "gibbs/calib/calibration.hpp"
#include "gibbs/core/errors.hpp"
#include "gibbs/models/fredholm.hpp"
#include "gibbs/models/losses.hpp"
#include "gibbs/models/priors.hpp"
#include "gibbs/models/simulate.hpp"
#include "gibbs/models/surrogate.hpp"
#include "gibbs/core/risk.hpp"
#include "gibbs/predictive/predictive.hpp"
#include "gibbs/util/numeric.hpp"

using namespace gibbs;
using namespace gibbs::predictive;

namespace {

template <typename F>
double integrate(F&& f, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-13);
}

std::shared_ptr<Dataset> scalars(std::vector<double> ys) {
  std::vector<std::vector<double>> rows;
  for (double y : ys) rows.push_back({y});
  return std::make_shared<Dataset>(rows, std::vector<double>{0.0});
}

auto identity1() { return std::make_shared<models::IdentityForwardModel>(1); }

smc::Problem conjugate(std::vector<double> ys) {
  return smc::Problem{std::make_shared<models::SquaredL2Loss>(identity1(), 1.0),
                      std::make_shared<models::GaussianPrior>(0.0, 1.0, 1), scalars(std::move(ys))};
}

smc::ParticleSystem concentrated(double theta, std::size_t S, const LossModel& loss, const Dataset& data) {
  std::vector<double> values(S, theta), losses;
  for (std::size_t s = 0; s < S; ++s) {
    const auto row = loss.evaluate_all(ParameterVector{theta}, data);
    losses.insert(losses.end(), row.begin(), row.end());
  }
  return smc::ParticleSystem(values, losses, std::vector<double>(S, 0.0), 1, data.size());
}

// Constant loss: not translation invariant and exp(-L) is not Lebesgue integrable.
class ConstantLoss final : public LossModel {
 public:
  using LossModel::LossModel;
  std::string name() const override { return "constant"; }
  bool translation_invariant() const override { return false; }
  double raw_discrepancy(std::span<const double>, std::span<const double>) const override { return 5.0; }
  std::shared_ptr<const LossModel> with_scale(double s) const override {
    return std::make_shared<ConstantLoss>(forward_ptr(), s);
  }
};

class ShiftedForward final : public ForwardModel {
 public:
  explicit ShiftedForward(double shift) : shift_(shift) {}
  std::size_t output_dimension() const override { return 1; }
  std::size_t parameter_dimension() const override { return 1; }
  void apply(std::span<const double> theta, std::span<double> out) const override { out[0] = theta[0] + shift_; }

 private:
  double shift_;
};

// Brute-force P_CV for the conjugate problem: one grid posterior per held-out datum.
double quadrature_p_cv(const std::vector<double>& ys, double w) {
  const int nodes = 20001;
  const double lo = -10.0, h = 20.0 / (nodes - 1);
  double total = 0.0;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    double z = 0.0, pred = 0.0;
    for (int k = 0; k < nodes; ++k) {
      const double x = lo + h * k;
      double others = 0.0;
      for (std::size_t j = 0; j < ys.size(); ++j)
        if (j != i) others += (x - ys[j]) * (x - ys[j]);
      const double f = std::exp(-0.5 * x * x - w * others) * ((k == 0 || k == nodes - 1) ? 0.5 : 1.0);
      z += f;
      pred += f * std::exp(-(x - ys[i]) * (x - ys[i]));
    }
    total += -std::log(pred / z / std::sqrt(std::numbers::pi));
  }
  return total / static_cast<double>(ys.size());
}

}  // namespace

TEST_CASE("closed-form partitions") {
  const models::SquaredL2Loss sq(identity1(), 1.0);
  const models::L1Loss l1(identity1(), 1.0);
  const double gauss = integrate([](double y) { return std::exp(-y * y); }, -40.0, 40.0);
  const double laplace = integrate([](double y) { return std::exp(-std::abs(y)); }, -80.0, 0.0) +
                         integrate([](double y) { return std::exp(-std::abs(y)); }, 0.0, 80.0);
  CHECK(loss_partition(ParameterVector{0.3}, sq) == doctest::Approx(gauss).epsilon(1e-12));
  CHECK(gauss == doctest::Approx(1.7724539).epsilon(1e-7));
  CHECK(loss_partition(ParameterVector{0.3}, l1) == doctest::Approx(laplace).epsilon(1e-12));
  CHECK(loss_partition(ParameterVector{-4.0}, sq) == loss_partition(ParameterVector{11.0}, sq));
  CHECK(loss_partition(ParameterVector{-4.0}, l1) == loss_partition(ParameterVector{11.0}, l1));
}

TEST_CASE("numeric partition with a Gaussian reference") {
  PartitionOptions options;
  options.reference = Reference::Gaussian;
  options.reference_sd = 0.8;
  options.numeric_fallback = true;
  const double c = 1.7;
  const models::SquaredL2Loss sq(identity1(), c);
  for (double m : {-1.0, 0.0, 2.5}) {
    const double tau2 = 0.64;
    const double expected = std::exp(-c * m * m / (1.0 + 2.0 * c * tau2)) / std::sqrt(1.0 + 2.0 * c * tau2);
    CHECK(loss_partition(ParameterVector{m}, sq, options) == doctest::Approx(expected).epsilon(1e-8));
  }
  auto forward2 = std::make_shared<models::IdentityForwardModel>(2);
  const models::SquaredL2Loss sq2(forward2, c);
  const double tau2 = 0.64;
  const double expected2 = std::exp(-c * (1.0 + 0.25) / (1.0 + 2.0 * c * tau2)) / (1.0 + 2.0 * c * tau2);
  CHECK(std::exp(log_loss_partition(std::vector<double>{1.0, -0.5}, sq2, options)) == doctest::Approx(expected2).epsilon(1e-7));
}

TEST_CASE("non-integrable losses are rejected") {
  const ConstantLoss constant(identity1(), 1.0);
  CHECK_THROWS_AS(loss_partition(ParameterVector{0.0}, constant), UnsupportedLossError);
  PartitionOptions fallback;
  fallback.numeric_fallback = true;
  CHECK_THROWS_AS(loss_partition(ParameterVector{0.0}, constant, fallback), UnsupportedLossError);
  fallback.reference = Reference::Gaussian;
  CHECK(loss_partition(ParameterVector{0.0}, constant, fallback) == doctest::Approx(std::exp(-5.0)).epsilon(1e-9));
}

TEST_CASE("predictive density of a concentrated posterior") {
  const models::SquaredL2Loss sq(identity1(), 1.0);
  const auto data = scalars({0.0});
  const auto ps = concentrated(0.0, 10, sq, *data);
  CHECK(log_predictive_density(ps, std::vector<double>{0.0}, sq).log_density ==
        doctest::Approx(-std::log(std::sqrt(std::numbers::pi))).epsilon(1e-14));
  for (double theta : {-1.0, 0.4}) {
    for (const auto& [name, loss] : models::builtin_losses(identity1(), 0.8)) {
      const auto pst = concentrated(theta, 5, *loss, *data);
      for (double y : {-2.0, 0.1, 3.0}) {
        const double exact = -loss->evaluate(ParameterVector{theta}, std::vector<double>{y}) - *loss->log_partition(1);
        CHECK(std::abs(log_predictive_density(pst, std::vector<double>{y}, *loss).log_density - exact) < 1e-12);
      }
    }
  }
}

TEST_CASE("predictive density integrates to one") {
  const auto pr = conjugate({0.4, 1.0, 1.3});
  smc::FilterConfig config;
  config.particles = 500;
  config.grid = smc::WGrid({0.0, 0.5});
  const auto run = smc::run_calibration_filter(pr, config);
  const auto ps = smc::run_full_posterior_filter(run.systems.back(), pr, 0.5, 5);
  const double mass = integrate(
      [&](double y) { return std::exp(log_predictive_density(ps, std::vector<double>{y}, *pr.loss).log_density); }, -15.0, 15.0);
  CHECK(std::abs(mass - 1.0) < 1e-4);
}

TEST_CASE("predictive density underflow is reported, not thrown") {
  const models::SquaredL2Loss sq(identity1(), 1.0);
  const auto data = scalars({0.0});
  const auto ps = concentrated(0.0, 4, sq, *data);
  // far-away points stay finite in the log domain
  const auto far = log_predictive_density(ps, std::vector<double>{1e6}, sq);
  CHECK(far.log_density == doctest::Approx(-1e12 - std::log(std::sqrt(std::numbers::pi))));
  CHECK(far.diagnostic.empty());
  const auto out = log_predictive_density(ps, std::vector<double>{1e200}, sq);
  CHECK(out.log_density == util::kNegInf);
  CHECK_FALSE(out.diagnostic.empty());
}

TEST_CASE("property: predictive density lies in the weighted envelope") {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> z(0.0, 1.0);
  const auto data = scalars({0.0});
  for (int trial = 0; trial < 200; ++trial) {
    for (const auto& [name, loss] : models::builtin_losses(identity1(), 0.5 + trial % 3)) {
      const std::size_t S = 2 + trial % 20;
      std::vector<double> values(S), losses(S), lw(S);
      for (std::size_t s = 0; s < S; ++s) {
        values[s] = 2.0 * z(rng);
        losses[s] = loss->evaluate(ParameterVector{values[s]}, data->observation(0));
        lw[s] = z(rng);
      }
      const smc::ParticleSystem ps(values, losses, lw, 1, 1);
      const std::vector<double> y{3.0 * z(rng)};
      double lo = INFINITY, hi = -INFINITY;
      for (std::size_t s = 0; s < S; ++s) {
        const double v = -loss->evaluate(ParameterVector{values[s]}, y);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      const double log_z = *loss->log_partition(1);
      const double value = log_predictive_density(ps, y, *loss).log_density;
      CHECK(value >= lo - log_z - 1e-12);
      CHECK(value <= hi - log_z + 1e-12);
    }
  }
}

TEST_CASE("P_CV with one datum") {
  const std::vector<double> losses{0.5, 2.0, 1.0};
  const std::vector<double> log_z{0.3, 0.3, 0.3};
  const auto est = estimate_p_cv(losses, std::vector<double>(3, 0.0), log_z, {}, 1, 0.7);
  const double mean_z = std::exp(0.3);
  const double mean_e = (std::exp(-0.5) + std::exp(-2.0) + std::exp(-1.0)) / 3.0;
  CHECK(est.p_cv == doctest::Approx(std::log(mean_z) - std::log(mean_e)).epsilon(1e-14));
  CHECK(est.se == 0.0);
}

TEST_CASE("P_CV matches brute-force quadrature on the conjugate problem") {
  const std::vector<double> ys{-0.7, 0.1, 0.5, 1.2, 1.9};
  const auto pr = conjugate(ys);
  for (double w : {0.125, 0.5, 1.0}) {
    CAPTURE(w);
    std::vector<double> values;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      smc::FilterConfig config;
      config.particles = 2000;
      config.grid = smc::WGrid({0.0, w});
      config.seed = seed;
      const auto run = smc::run_calibration_filter(pr, config);
      values.push_back(estimate_p_cv(run.systems.back(), w, *pr.loss, *pr.data).p_cv);
    }
    const double oracle = quadrature_p_cv(ys, w);
    CHECK(std::abs(util::order_free_mean(values) - oracle) <= 3.0 * util::standard_error_of_mean(values));
  }
}

TEST_CASE("property: shifting data and forward model together leaves P_CV unchanged") {
  const std::vector<double> ys{-0.3, 0.2, 0.9, 1.4};
  for (double shift : {0.5, -3.0, 10.0}) {
    for (const auto& name : models::builtin_loss_names()) {
      CAPTURE(name);
      auto base = smc::Problem{models::make_loss(name, identity1(), 1.0), std::make_shared<models::GaussianPrior>(0.0, 1.0, 1),
                               scalars(ys)};
      std::vector<double> shifted_ys;
      for (double y : ys) shifted_ys.push_back(y + shift);
      auto moved = smc::Problem{models::make_loss(name, std::make_shared<ShiftedForward>(shift), 1.0), base.prior,
                                scalars(shifted_ys)};
      smc::FilterConfig config;
      config.particles = 300;
      config.grid = smc::WGrid({0.0, 0.25, 0.5});
      const auto a = smc::run_calibration_filter(base, config);
      const auto b = smc::run_calibration_filter(moved, config);
      const double pa = estimate_p_cv(a.systems.back(), 0.5, *base.loss, *base.data).p_cv;
      const double pb = estimate_p_cv(b.systems.back(), 0.5, *moved.loss, *moved.data).p_cv;
      CHECK(std::abs(pa - pb) <= 1e-10);
    }
  }
}

TEST_CASE("compare_models: ties, ordering and dataset checks") {
  const auto pr = conjugate({0.2, 0.6, 1.1, 0.9});
  smc::FilterConfig config;
  config.particles = 400;
  config.grid = smc::WGrid({0.0, 0.5});
  const auto run = smc::run_calibration_filter(pr, config);
  const auto hash = pr.data->content_hash();
  std::vector<Candidate> twins{{"a", pr.loss, 0.5, run.systems.back(), hash}, {"b", pr.loss, 0.5, run.systems.back(), hash}};
  const auto tied = compare_models(twins, *pr.data);
  CHECK(tied.ranking[0].p_cv == tied.ranking[1].p_cv);
  CHECK(tied.ties.size() == 1);

  // predictions pinned far from the data give huge losses everywhere
  auto far = smc::Problem{std::make_shared<models::SquaredL2Loss>(std::make_shared<ShiftedForward>(50.0), 1.0), pr.prior, pr.data};
  const auto far_run = smc::run_calibration_filter(far, config);
  std::vector<Candidate> pair{{"far", far.loss, 0.5, far_run.systems.back(), hash}, {"fit", pr.loss, 0.5, run.systems.back(), hash}};
  const auto ranked = compare_models(pair, *pr.data);
  CHECK(ranked.ranking.front().name == "fit");
  CHECK(ranked.ranking.front().p_cv <= ranked.ranking.back().p_cv);
  CHECK(ranked.to_table().find("fit") != std::string::npos);

  pair[0].dataset_hash = "elsewhere";
  CHECK_THROWS_AS(compare_models(pair, *pr.data), ConfigurationError);
}

TEST_CASE("compare_models on toy data with a quadrature spot check") {
  // one-block toy model: theta = b, Gamma(2,1) prior, n = 5
  const models::SmoothingKernelOperator op(models::unit_grid(20), 100);
  auto forward = std::make_shared<models::FredholmForwardModel>(op, 1);
  const auto data = std::make_shared<Dataset>(models::simulate_toy_dataset(
      ParameterVector{4.0}, models::NoiseSpec{models::NoiseKind::MultiplicativeLognormalBlockwise, 0.3, 0.2, 3}, 5, op, 1));
  const double w0 = loss_scale_estimate(*data);
  auto prior = models::fredholm_prior(1);
  const double w = 0.25;
  std::vector<Candidate> candidates;
  for (const std::string name : {"l1", "squared-l2"}) {
    const smc::Problem pr{models::make_loss(name, forward, w0), prior, data};
    std::vector<double> values;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      smc::FilterConfig config;
      // the log-ratio estimator carries an O(1/S) bias; 2000 particles leave ~0.01 here
      config.particles = 8000;
      config.grid = smc::WGrid({0.0, w / 8, w / 4, w / 2, w});
      config.seed = seed;
      const auto run = smc::run_calibration_filter(pr, config);
      values.push_back(estimate_p_cv(run.systems.back(), w, *pr.loss, *data).p_cv);
      if (seed == 1) candidates.push_back({name, pr.loss, w, run.systems.back(), data->content_hash()});
    }
    // brute force: grid over b for each held-out curve
    const int nodes = 8001;
    const double hi = 40.0, h = hi / (nodes - 1);
    std::vector<std::vector<double>> loss_grid(nodes);
    for (int k = 1; k < nodes; ++k) loss_grid[k] = pr.loss->evaluate_all(ParameterVector{h * k}, *data);
    const double log_z = *pr.loss->log_partition(data->dimension());
    double oracle = 0.0;
    for (std::size_t i = 0; i < data->size(); ++i) {
      std::vector<double> log_post(nodes, util::kNegInf), log_pred(nodes, util::kNegInf);
      for (int k = 1; k < nodes; ++k) {
        double others = 0.0;
        for (std::size_t j = 0; j < data->size(); ++j)
          if (j != i) others += loss_grid[k][j];
        log_post[k] = prior->log_density(std::vector<double>{h * k}) - w * others + (k == nodes - 1 ? std::log(0.5) : 0.0);
        log_pred[k] = log_post[k] - loss_grid[k][i];
      }
      oracle += util::log_sum_exp(log_post) + log_z - util::log_sum_exp(log_pred);
    }
    oracle /= static_cast<double>(data->size());
    CAPTURE(name);
    CHECK(std::abs(util::order_free_mean(values) - oracle) <= 3.0 * util::standard_error_of_mean(values) + 1e-9);
  }
  const auto report = compare_models(candidates, *data);
  CHECK(report.ranking.size() == 2);
  for (const auto& e : report.ranking) CHECK(std::isfinite(e.p_cv));
}

TEST_CASE("surrogate data with Gaussian noise favour the squared loss") {
  auto model = std::make_shared<models::SurrogateDispersionModel>(models::SurrogateDispersionModel::default_frequencies());
  const auto data = std::make_shared<Dataset>(models::simulate_curves(
      *model, ParameterVector{30.0, 5.5, 2.8}, models::NoiseSpec{models::NoiseKind::AdditiveGaussian, 0.11, 0.2, 7}, 5,
      model->frequencies()));
  const double w0 = loss_scale_estimate(*data);
  std::vector<Candidate> candidates;
  for (const std::string name : {"squared-l2", "l1"}) {
    const smc::Problem pr{models::make_loss(name, model, w0), models::surrogate_prior(), data};
    smc::FilterConfig config;
    config.particles = 1000;
    config.mh_steps = 5;
    config.seed = 3;
    auto result = calib::calibrate(pr, config, calib::SelectionRule::OneStandardError);
    const auto& ps = result.run.systems[result.report.selected];
    candidates.push_back({name, pr.loss, result.report.selected_w, ps, data->content_hash()});
  }
  const auto report = compare_models(candidates, *data);
  MESSAGE(report.to_table());
  CHECK(report.ranking.front().name == "squared-l2");
}
