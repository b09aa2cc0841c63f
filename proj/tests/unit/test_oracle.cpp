#include <cmath>
#include <numbers>

#include <boost/math/distributions/normal.hpp>

#include "doctest.h"
#include "gibbs/core/errors.hpp"
#include "gibbs/models/fredholm.hpp"
#include "gibbs/models/losses.hpp"
#include "gibbs/models/priors.hpp"
#include "gibbs/models/simulate.hpp"
#include "gibbs/oracle/quadrature.hpp"
#include "gibbs/oracle/verification.hpp"
#include "gibbs/smc/filter.hpp"
#include "gibbs/util/numeric.hpp"

using namespace gibbs;
using namespace gibbs::oracle;

namespace {

Dataset scalars(std::vector<double> ys) {
  std::vector<std::vector<double>> rows;
  for (double y : ys) rows.push_back({y});
  return Dataset(rows, std::vector<double>{0.0});
}

auto identity(std::size_t d) { return std::make_shared<models::IdentityForwardModel>(d); }

struct Conjugate {
  models::SquaredL2Loss loss{identity(1), 1.0};
  models::GaussianPrior prior{0.0, 1.0, 1};
  Dataset data = scalars({1.0});
};

GridPosterior gaussian_on_grid(double mean, const std::vector<double>& x) {
  std::vector<double> lu(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) lu[k] = -0.5 * (x[k] - mean) * (x[k] - mean);
  return GridPosterior({x}, lu);
}

// Gaussian prior that claims more mass outside any box than the oracle allows.
class LeakyPrior final : public PriorModel {
 public:
  LeakyPrior() : PriorModel({"x"}) {}
  std::size_t dimension() const override { return 1; }
  double log_density(std::span<const double> t) const override { return inner_.log_density(t); }
  void sample_into(Rng& rng, std::span<double> out) const override { inner_.sample_into(rng, out); }
  const ParameterDomain& domain() const override { return inner_.domain(); }
  std::vector<std::pair<double, double>> central_box(double tail) const override { return inner_.central_box(tail); }
  double mass_outside(std::span<const double>, std::span<const double>) const override { return 1e-3; }

 private:
  models::GaussianPrior inner_{0.0, 1.0, 1};
};

}  // namespace

TEST_CASE("W = 0 reproduces the prior") {
  Conjugate c;
  const auto post = quadrature_posterior(c.loss, c.prior, c.data, 0.0);
  double worst = 0.0;
  for (std::size_t k = 0; k < post.size(); ++k)
    worst = std::max(worst, std::abs(post.density(k) - std::exp(c.prior.log_density(post.point(k)))));
  CHECK(worst < 1e-10);
}

TEST_CASE("conjugate posterior moments, normalization and refinement") {
  Conjugate c;
  const auto post = quadrature_posterior(c.loss, c.prior, c.data, 0.5);
  CHECK(std::abs(post.mean()[0] - 0.5) < 1e-6);
  // precision 1 (prior) + 2 W = 2
  CHECK(std::abs(post.variance()[0] - 0.5) < 1e-6);
  double mass = 0.0;
  for (std::size_t k = 0; k < post.size(); ++k) mass += post.weight(k) * post.density(k);
  CHECK(std::abs(mass - 1.0) < 1e-8);
  GridSpec fine;
  fine.points = 8192;
  const auto refined = quadrature_posterior(c.loss, c.prior, c.data, 0.5, fine);
  CHECK(std::abs(refined.log_partition() - post.log_partition()) < 1e-6);
  // Z = integral of exp(-(theta - 1)^2 / 2) against N(0, 1) = exp(-1/4) / sqrt(2)
  CHECK(post.log_partition() == doctest::Approx(-0.25 - 0.5 * std::log(2.0)).epsilon(1e-9));
}

TEST_CASE("two-dimensional conjugate posterior") {
  const models::SquaredL2Loss loss(identity(2), 1.0);
  const models::GaussianPrior prior(0.0, 1.0, 2);
  const Dataset data({{1.0, -1.0}}, {0.0, 1.0});
  GridSpec spec;
  spec.points = 512;
  const auto post = quadrature_posterior(loss, prior, data, 0.5, spec);
  CHECK(post.dimension() == 2);
  CHECK(std::abs(post.mean()[0] - 0.5) < 1e-6);
  CHECK(std::abs(post.mean()[1] + 0.5) < 1e-6);
  CHECK(std::abs(post.variance()[1] - 0.5) < 1e-6);
  CHECK(post.mass_outside_ball(std::vector<double>{0.5, -0.5}, 10.0) < 1e-40);
}

TEST_CASE("Gibbs objective at the posterior equals -log Z / (n W)") {
  const models::L1Loss loss(identity(1), 1.3);
  const models::GaussianPrior prior(0.2, 1.5, 1);
  const auto data = scalars({-0.4, 0.3, 1.1, 2.0});
  for (double w : {0.1, 0.5, 1.0}) {
    const auto post = quadrature_posterior(loss, prior, data, w);
    CHECK(std::abs(gibbs_objective(post, loss, prior, data, w) + post.log_partition() / (4.0 * w)) < 1e-6);
  }
}

TEST_CASE("zoomed grids resolve concentrated posteriors") {
  Conjugate c;
  std::vector<double> ys(5000, 0.3);
  const auto data = scalars(ys);
  const auto post = quadrature_posterior(c.loss, c.prior, data, 0.5);
  const double var = 1.0 / (1.0 + 5000.0);
  CHECK(post.mean()[0] == doctest::Approx(0.3 * 5000.0 / 5001.0).epsilon(1e-9));
  CHECK(post.variance()[0] == doctest::Approx(var).epsilon(1e-6));
  CHECK(post.truncated_mass() < 1e-9);
}

TEST_CASE("coverage and dimension errors") {
  Conjugate c;
  CHECK_THROWS_AS(quadrature_posterior(c.loss, LeakyPrior(), c.data, 0.5), CoverageError);
  const auto three = models::fredholm_prior(2);
  CHECK_THROWS_AS(quadrature_posterior(c.loss, *three, c.data, 0.5), ConfigurationError);
}

TEST_CASE("divergences") {
  const auto x = linspace(-14.0, 15.0, 8001);
  const auto p = gaussian_on_grid(0.0, x);
  const auto q = gaussian_on_grid(1.0, x);
  const auto same = divergences(p, p);
  CHECK(same.kl_pq < 1e-10);
  CHECK(same.kl_qp < 1e-10);
  CHECK(same.hellinger < 1e-7);  // sqrt of a rounding-level affinity gap
  CHECK(same.tv < 1e-10);
  const auto d = divergences(p, q);
  CHECK(std::abs(d.kl_pq - 0.5) < 1e-6);
  CHECK(std::abs(d.kl_qp - 0.5) < 1e-6);
  CHECK(d.hellinger == doctest::Approx(std::sqrt(1.0 - std::exp(-0.125))).epsilon(1e-8));
  const boost::math::normal unit;
  CHECK(d.tv == doctest::Approx(2.0 * boost::math::cdf(unit, 0.5) - 1.0).epsilon(1e-6));

  std::vector<double> half(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) half[k] = x[k] < 0.0 ? util::kNegInf : -0.5 * x[k] * x[k];
  const GridPosterior truncated({x}, half);
  CHECK(std::isinf(divergences(p, truncated).kl_pq));
  CHECK(std::isfinite(divergences(truncated, p).kl_pq));
  CHECK_THROWS_AS(divergences(p, gaussian_on_grid(0.0, linspace(-10.0, 10.0, 101))), ConfigurationError);
}

TEST_CASE("stability and W-continuity on the conjugate problem") {
  Conjugate c;
  const auto post = quadrature_posterior(c.loss, c.prior, c.data, 0.5);
  const auto zero = divergences(post, quadrature_posterior(c.loss, c.prior, c.data.shifted(std::vector<double>{0.0}),
                                                           0.5, post.axes()));
  CHECK(zero.kl_pq == 0.0);
  CHECK(zero.tv == 0.0);
  const auto stability = verify_stability(c.loss, c.prior, c.data, 0.5);
  for (const auto& check : stability.checks) {
    CAPTURE(check.detail);
    CHECK_MESSAGE(check.passed, check.name);
  }
  CHECK(stability.rows.size() == 4);
  CHECK(stability.scalars.at("rate_exponent") == doctest::Approx(2.0).epsilon(1e-3));
  const auto with_zero = verify_stability(c.loss, c.prior, c.data, 0.5, {0.2, 0.1, 0.05, 0.025, 0.0});
  CHECK(with_zero.passed());
  CHECK(with_zero.rows.back().x == 0.0);
  CHECK(with_zero.rows.back().divergences->kl_pq == 0.0);
  CHECK(stability.to_csv().rfind("delta,KL_over_sum_sq_delta,KL,KL_reverse,hellinger,TV\n", 0) == 0);
  const auto continuity = verify_w_continuity(c.loss, c.prior, c.data, 0.5);
  CHECK(continuity.passed());
}

TEST_CASE("finite approximation on the one-block toy problem") {
  const auto grid = models::unit_grid(20);
  const models::SmoothingKernelOperator fine_op(grid, 800);
  const auto data = models::simulate_toy_dataset(
      ParameterVector{4.0}, models::NoiseSpec{models::NoiseKind::AdditiveGaussian, 0.2, 0.2, 5}, 10, fine_op, 1);
  const double scale = 1.0 / (2.0 * 0.04);
  auto factory = [&](std::size_t m) -> std::shared_ptr<const LossModel> {
    return std::make_shared<models::SquaredL2Loss>(
        std::make_shared<models::FredholmForwardModel>(models::SmoothingKernelOperator(grid, m), 1), scale);
  };
  const auto prior = models::fredholm_prior(1);
  GridSpec spec;
  spec.points = 2048;
  const auto report = verify_finite_approximation(factory, *prior, data, 0.25, {25, 50, 100, 200}, 800, spec);
  for (const auto& check : report.checks) {
    CAPTURE(check.detail);
    CHECK_MESSAGE(check.passed, check.name);
  }
  for (std::size_t k = 0; k + 1 < report.rows.size(); ++k)
    CHECK(report.rows[k + 1].divergences->kl_pq < report.rows[k].divergences->kl_pq);
}

TEST_CASE("approximation bound shape") {
  double previous = 0.0;
  for (double psi : {0.0, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0}) {
    const double b = approximation_hellinger_bound(0.7, 0.1, 10, 0.5, psi);
    CHECK(b <= 1.0);
    CHECK(b >= previous);
    previous = b;
  }
  CHECK(approximation_hellinger_bound(0.7, 0.1, 10, 0.5, 0.0) == 0.0);
}

TEST_CASE("consistency on the well-specified location problem") {
  const auto report = verify_consistency(LocationProblem{});
  for (const auto& check : report.checks) {
    CAPTURE(check.detail);
    CHECK_MESSAGE(check.passed, check.name);
  }
  CHECK(report.rows.size() == 4);
}

TEST_CASE("skewed noise: concentration at the risk minimizer, not the median") {
  const SkewedProblem problem;
  CHECK(problem.mean() == doctest::Approx(0.8));
  CHECK(problem.median() == doctest::Approx(std::log(2.0 / 1.2)));
  const auto report = verify_misspecified_concentration(problem);
  for (const auto& check : report.checks) {
    CAPTURE(check.detail);
    CHECK_MESSAGE(check.passed, check.name);
  }
  CHECK(std::abs(report.scalars.at("theta_star") - problem.mean()) < 0.02);
}

TEST_CASE("predictive convergence") {
  const double ys[] = {0.1, 0.5, 0.9};
  auto same = [](double y) { return -y * y; };
  CHECK(kl_gap(ys, same, same).gap == 0.0);

  const LocationProblem problem;
  const auto report = verify_predictive_convergence(problem);
  for (const auto& check : report.checks) {
    CAPTURE(check.detail);
    CHECK_MESSAGE(check.passed, check.name);
  }
  CHECK(std::abs(report.scalars.at("kl_truth_to_star")) < 1e-12);

  LocationProblem mismatched;
  mismatched.loss_scale = 4.0;
  const auto off = verify_predictive_convergence(mismatched, {10}, 2000);
  CHECK(off.scalars.at("kl_truth_to_star") > 3.0 * off.scalars.at("kl_truth_to_star_se"));
}

TEST_CASE("property: Bretagnolle-Huber chain on randomized pairs") {
  const auto report = verify_inequalities(2024, 100);
  CHECK(report.rows.size() == 100);
  CHECK(report.passed());
  CHECK(report.scalars.at("violations") == 0.0);
}

TEST_CASE("property: SMC moments agree with quadrature on 1-D problems") {
  const auto data = std::make_shared<Dataset>(scalars({-0.3, 0.4, 1.0, 1.6}));
  const auto prior = std::make_shared<models::GaussianPrior>(0.0, 1.0, 1);
  for (const std::string name : {"squared-l2", "l1"}) {
    const smc::Problem problem{models::make_loss(name, identity(1), 1.0), prior, data};
    const std::vector<double> ws{0.0, 0.0625, 0.25, 1.0};
    std::vector<std::vector<double>> means(ws.size()), vars(ws.size());
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      smc::FilterConfig config;
      config.particles = 1000;
      config.grid = smc::WGrid(ws);
      config.seed = seed;
      const auto run = smc::run_calibration_filter(problem, config);
      for (std::size_t t = 1; t < ws.size(); ++t) {
        const auto full = smc::run_full_posterior_filter(run.systems[t], problem, ws[t], 10);
        means[t].push_back(full.mean()[0]);
        vars[t].push_back(full.covariance()[0]);
      }
    }
    for (std::size_t t = 1; t < ws.size(); ++t) {
      CAPTURE(name);
      CAPTURE(ws[t]);
      const auto post = quadrature_posterior(*problem.loss, *prior, *data, ws[t]);
      CHECK(std::abs(util::order_free_mean(means[t]) - post.mean()[0]) <= 3.0 * util::standard_error_of_mean(means[t]));
      CHECK(std::abs(util::order_free_mean(vars[t]) - post.variance()[0]) <= 3.0 * util::standard_error_of_mean(vars[t]));
    }
  }
}
