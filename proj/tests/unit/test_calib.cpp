#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "gibbs/calib/calibration.hpp"
#include "gibbs/core/errors.hpp"
#include "gibbs/models/losses.hpp"
#include "gibbs/models/priors.hpp"
#include "gibbs/util/numeric.hpp"

using namespace gibbs;
using namespace gibbs::calib;

namespace {

smc::Problem conjugate(std::vector<double> ys) {
  std::vector<std::vector<double>> rows;
  for (double y : ys) rows.push_back({y});
  auto forward = std::make_shared<models::IdentityForwardModel>(1);
  return smc::Problem{std::make_shared<models::SquaredL2Loss>(forward, 1.0),
                      std::make_shared<models::GaussianPrior>(0.0, 1.0, 1),
                      std::make_shared<Dataset>(rows, std::vector<double>{0.0})};
}

// Exhaustive LOOCV risk by trapezoid quadrature: one grid posterior per held-out datum.
double quadrature_r_cv(const std::vector<double>& ys, double w) {
  const int nodes = 20001;
  const double lo = -10.0, h = 20.0 / (nodes - 1);
  double total = 0.0;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    double z = 0.0, acc = 0.0;
    for (int k = 0; k < nodes; ++k) {
      const double x = lo + h * k;
      double others = 0.0;
      for (std::size_t j = 0; j < ys.size(); ++j)
        if (j != i) others += (x - ys[j]) * (x - ys[j]);
      const double f = std::exp(-0.5 * x * x - w * others) * ((k == 0 || k == nodes - 1) ? 0.5 : 1.0);
      z += f;
      acc += f * (x - ys[i]) * (x - ys[i]);
    }
    total += acc / z;
  }
  return total / static_cast<double>(ys.size());
}

std::vector<CalibrationEntry> entries_from(std::vector<double> ws, std::vector<double> r, std::vector<double> se) {
  std::vector<CalibrationEntry> out;
  for (std::size_t t = 0; t < ws.size(); ++t) out.push_back(CalibrationEntry{ws[t], t, r[t], se[t], 1.0, false, 0.0});
  return out;
}

}  // namespace

TEST_CASE("LOO weights: one datum gives uniform weights") {
  const std::vector<double> losses{0.3, 2.0, 7.5, 0.0};
  const auto r = loo_importance_weights(losses, std::vector<double>(4, 0.0), 1, 0.8, 0);
  for (double v : r) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("LOO weights: identical particles give uniform weights") {
  const std::vector<double> losses{1.0, 4.0, 1.0, 4.0, 1.0, 4.0};
  for (std::size_t i = 0; i < 2; ++i) {
    const auto r = loo_importance_weights(losses, std::vector<double>(3, 0.0), 2, 0.5, i);
    for (double v : r) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  }
}

TEST_CASE("LOO weights: two-datum hand formula") {
  // particle A has losses (0, 1), particle B has (0.5, 0.5); W = 1
  const std::vector<double> losses{0.0, 1.0, 0.5, 0.5};
  const double ratio_a = 1.0 / (1.0 + std::exp(1.0));
  const double ratio_b = 0.5;
  const auto r = loo_importance_weights(losses, std::vector<double>(2, 0.0), 2, 1.0, 0);
  CHECK(r[0] == doctest::Approx(ratio_a / (ratio_a + ratio_b)).epsilon(1e-14));
  CHECK(r[1] == doctest::Approx(ratio_b / (ratio_a + ratio_b)).epsilon(1e-14));
}

TEST_CASE("R_CV with a single particle is the empirical risk") {
  const std::vector<double> losses{0.5, 1.5, 4.0};
  const auto est = estimate_r_cv(losses, std::vector<double>{0.0}, 3, 0.7);
  CHECK(est.r_cv == doctest::Approx(2.0).epsilon(1e-15));
  const double mean = 2.0;
  double var = 0.0;
  for (double v : losses) var += (v - mean) * (v - mean);
  var /= 2.0;
  CHECK(est.se == doctest::Approx(std::sqrt(var / 3.0)).epsilon(1e-14));
}

TEST_CASE("R_CV as W goes to zero is the prior-averaged risk") {
  const std::vector<double> ys{-0.5, 0.2, 1.3, 2.1};
  const auto pr = conjugate(ys);
  const std::size_t S = 4000;
  const auto ps = smc::ParticleSystem::from_prior(*pr.prior, *pr.loss, *pr.data, S, 6);
  const auto est = estimate_r_cv(ps, 1e-9);
  std::vector<double> smc_rows(S);
  for (std::size_t s = 0; s < S; ++s) smc_rows[s] = util::order_free_mean(ps.losses(s));

  // independent Monte Carlo over fresh prior draws
  std::mt19937_64 rng(999);
  std::normal_distribution<double> prior(0.0, 1.0);
  std::vector<double> mc(100000);
  for (double& v : mc) {
    const double theta = prior(rng);
    double acc = 0.0;
    for (double y : ys) acc += (theta - y) * (theta - y);
    v = acc / ys.size();
  }
  const double se = std::hypot(util::standard_error_of_mean(smc_rows), util::standard_error_of_mean(mc));
  CHECK(std::abs(est.r_cv - util::order_free_mean(mc)) <= 3.0 * se);
}

TEST_CASE("R_CV matches exhaustive quadrature LOOCV over the grid") {
  const std::vector<double> ys{-0.8, -0.1, 0.4, 0.9, 1.6, 2.2};
  const auto pr = conjugate(ys);
  std::vector<std::vector<double>> per_w;
  std::vector<double> ws;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    smc::FilterConfig config;
    config.particles = 2000;
    config.seed = seed;
    const auto result = calibrate(pr, config, SelectionRule::Min);
    if (per_w.empty()) per_w.resize(result.report.entries.size());
    ws.clear();
    for (std::size_t t = 0; t < result.report.entries.size(); ++t) {
      per_w[t].push_back(result.report.entries[t].r_cv);
      ws.push_back(result.report.entries[t].w);
    }
  }
  for (std::size_t t = 0; t < ws.size(); ++t) {
    CAPTURE(ws[t]);
    const double oracle = quadrature_r_cv(ys, ws[t]);
    const double mean = util::order_free_mean(per_w[t]);
    CHECK(std::abs(mean - oracle) <= 3.0 * util::standard_error_of_mean(per_w[t]));
  }
}

TEST_CASE("select_w examples") {
  auto zero_se = entries_from({0.25, 0.5, 1.0}, {5.0, 3.0, 1.0}, {0.0, 0.0, 0.0});
  CHECK(zero_se[select_index(zero_se, SelectionRule::Min)].w == 1.0);
  CHECK(zero_se[select_index(zero_se, SelectionRule::OneStandardError)].w == 1.0);

  auto wide = entries_from({0.25, 0.5, 1.0}, {1.5, 1.0, 1.2}, {0.1, 0.6, 0.2});
  CHECK(wide[select_index(wide, SelectionRule::Min)].w == 0.5);
  CHECK(wide[select_index(wide, SelectionRule::OneStandardError)].w == 0.25);

  // W = 0 entries never win
  auto with_zero = entries_from({0.0, 0.5, 1.0}, {0.1, 3.0, 2.0}, {0.0, 0.0, 0.0});
  CHECK(with_zero[select_index(with_zero, SelectionRule::Min)].w == 1.0);
  CHECK_THROWS_AS(select_index(std::vector<CalibrationEntry>{}, SelectionRule::Min), ConfigurationError);
  CHECK_THROWS_AS(select_index(entries_from({0.0}, {1.0}, {0.0}), SelectionRule::Min), ConfigurationError);

  auto ties = entries_from({0.25, 0.5, 1.0}, {2.0, 1.0, 1.0}, {0.0, 0.0, 0.0});
  CHECK(ties[select_index(ties, SelectionRule::Min)].w == 0.5);
}

TEST_CASE("property: one-SE choice never exceeds the min choice and respects the bound") {
  std::mt19937_64 rng(44);
  std::uniform_real_distribution<double> r(0.0, 5.0), se(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t T = 1 + trial % 12;
    std::vector<double> ws, rs, ses;
    for (std::size_t t = 0; t < T; ++t) {
      ws.push_back(std::ldexp(1.0, static_cast<int>(t) - static_cast<int>(T) + 1));
      rs.push_back(r(rng));
      ses.push_back(se(rng));
    }
    const auto entries = entries_from(ws, rs, ses);
    const auto lo = select_index(entries, SelectionRule::OneStandardError);
    const auto hi = select_index(entries, SelectionRule::Min);
    CHECK(entries[lo].w <= entries[hi].w);
    CHECK(entries[lo].r_cv <= entries[hi].r_cv + entries[hi].se);
  }
}

TEST_CASE("property: R_CV ignores observation order") {
  std::mt19937_64 rng(45);
  std::exponential_distribution<double> l(0.5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t S = 2 + trial % 30, n = 1 + trial % 9;
    std::vector<double> losses(S * n), lw(S);
    for (double& v : losses) v = l(rng);
    for (double& v : lw) v = -l(rng);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<double> permuted(S * n);
    for (std::size_t s = 0; s < S; ++s)
      for (std::size_t i = 0; i < n; ++i) permuted[s * n + i] = losses[s * n + order[i]];
    const double w = std::uniform_real_distribution<double>(0.0, 2.0)(rng);
    const auto a = estimate_r_cv(losses, lw, n, w);
    const auto b = estimate_r_cv(permuted, lw, n, w);
    CHECK(a.r_cv == b.r_cv);
    CHECK(a.se == b.se);
  }
}

TEST_CASE("property: R_CV lies between the averaged column minima and maxima") {
  std::mt19937_64 rng(46);
  std::exponential_distribution<double> l(0.3);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t S = 1 + trial % 25, n = 1 + trial % 8;
    std::vector<double> losses(S * n), lw(S);
    for (double& v : losses) v = l(rng);
    for (double& v : lw) v = -l(rng);
    const double w = std::uniform_real_distribution<double>(0.0, 3.0)(rng);
    double lo = 0.0, hi = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double mn = INFINITY, mx = -INFINITY;
      for (std::size_t s = 0; s < S; ++s) {
        mn = std::min(mn, losses[s * n + i]);
        mx = std::max(mx, losses[s * n + i]);
      }
      lo += mn / n;
      hi += mx / n;
    }
    const auto est = estimate_r_cv(losses, lw, n, w);
    CHECK(std::isfinite(est.r_cv));
    CHECK(est.se >= 0.0);
    CHECK(est.r_cv >= lo * (1.0 - 1e-12));
    CHECK(est.r_cv <= hi * (1.0 + 1e-12));
  }
}

TEST_CASE("row-average bound fails on a two-particle counterexample") {
  // R_CV exceeds every particle's average loss; the column bound above is the valid one
  const std::vector<double> losses{0.0, 10.0, 10.0, 0.0};
  const auto est = estimate_r_cv(losses, std::vector<double>(2, 0.0), 2, 1.0);
  CHECK(est.r_cv > 5.0);
}

TEST_CASE("calibration is deterministic and reports every weight") {
  const auto pr = conjugate({0.1, 0.5, 1.2, -0.3, 0.8});
  smc::FilterConfig config;
  config.particles = 400;
  config.seed = 12;
  const auto a = calibrate(pr, config, SelectionRule::OneStandardError);
  const auto b = calibrate(pr, config, SelectionRule::OneStandardError);
  CHECK(a.report.to_json() == b.report.to_json());
  CHECK(a.report.to_csv() == b.report.to_csv());
  CHECK(a.report.entries.size() == config.grid.size());
  CHECK(a.report.selected_w > 0.0);
  CHECK(a.report.to_csv().rfind("W,R_CV,SE,ESS,resampled\n", 0) == 0);
}
