#include "gibbs/oracle/verification.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "gibbs/core/errors.hpp"
#include "gibbs/models/losses.hpp"
#include "gibbs/models/priors.hpp"
#include "gibbs/util/numeric.hpp"
#include "gibbs/util/parallel.hpp"
#include "gibbs/util/random.hpp"
#include "json.hpp"

namespace gibbs::oracle {

namespace {

using nlohmann::json;

json number(double x) {
  if (std::isfinite(x)) return x;
  return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
}

std::string cell(std::optional<double> x) { return x ? fmt::format("{:.17g}", *x) : std::string(); }

Dataset scalar_dataset(const std::vector<double>& ys) {
  std::vector<std::vector<double>> rows;
  rows.reserve(ys.size());
  for (double y : ys) rows.push_back({y});
  return Dataset(std::move(rows), std::vector<double>{0.0});
}

double sum_squared_shift(const Dataset& data, double delta) {
  return static_cast<double>(data.size() * data.dimension()) * delta * delta;
}

}  // namespace

bool VerificationReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

void VerificationReport::check(std::string name, bool ok, std::string detail) {
  checks.push_back({std::move(name), ok, std::move(detail)});
}

std::string VerificationReport::to_csv() const {
  std::string out = fmt::format("{},{},KL,KL_reverse,hellinger,TV\n", x_label, value_label.empty() ? "value" : value_label);
  for (const auto& r : rows) {
    const auto& d = r.divergences;
    out += fmt::format("{:.17g},{},{},{},{},{}\n", r.x, cell(r.value), cell(d ? std::optional(d->kl_pq) : std::nullopt),
                       cell(d ? std::optional(d->kl_qp) : std::nullopt),
                       cell(d ? std::optional(d->hellinger) : std::nullopt),
                       cell(d ? std::optional(d->tv) : std::nullopt));
  }
  return out;
}

std::string VerificationReport::to_json() const {
  json j;
  j["suite"] = suite;
  j["passed"] = passed();
  j["x_label"] = x_label;
  j["value_label"] = value_label;
  j["rows"] = json::array();
  for (const auto& r : rows) {
    json row{{"x", number(r.x)}};
    if (r.value) row["value"] = number(*r.value);
    if (r.divergences) {
      row["kl"] = number(r.divergences->kl_pq);
      row["kl_reverse"] = number(r.divergences->kl_qp);
      row["hellinger"] = number(r.divergences->hellinger);
      row["tv"] = number(r.divergences->tv);
    }
    j["rows"].push_back(row);
  }
  j["checks"] = json::array();
  for (const auto& c : checks) j["checks"].push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  j["scalars"] = json::object();
  for (const auto& [k, v] : scalars) j["scalars"][k] = number(v);
  return j.dump(2);
}

std::shared_ptr<const LossModel> LocationProblem::loss() const {
  return std::make_shared<models::SquaredL2Loss>(std::make_shared<models::IdentityForwardModel>(1), loss_scale);
}

std::shared_ptr<const PriorModel> LocationProblem::prior() const {
  return std::make_shared<models::GaussianPrior>(0.0, prior_sd, 1);
}

Dataset LocationProblem::simulate(std::size_t n, std::uint64_t stream) const {
  auto rng = util::stream_rng(seed, stream, 0);
  std::normal_distribution<double> noise(0.0, noise_sd);
  std::vector<double> ys(n);
  for (auto& y : ys) y = theta_star + noise(rng);
  return scalar_dataset(ys);
}

VerificationReport verify_stability(const LossModel& loss, const PriorModel& prior, const Dataset& data, double w,
                                    std::vector<double> deltas, const GridSpec& spec) {
  VerificationReport report{"stability", "delta", "KL_over_sum_sq_delta", {}, {}, {}};
  const auto base = quadrature_posterior(loss, prior, data, w, spec);
  const auto axes = widened(base.axes(), 2.0, prior, spec.tail);
  const auto reference = quadrature_posterior(loss, prior, data, w, axes);
  std::sort(deltas.begin(), deltas.end(), std::greater<>());
  double lo_ratio = INFINITY, hi_ratio = 0.0;
  std::vector<double> log_delta, log_kl;
  for (double delta : deltas) {
    const auto shifted = data.shifted(std::vector<double>(data.dimension(), delta));
    const auto d = divergences(reference, quadrature_posterior(loss, prior, shifted, w, axes));
    std::optional<double> ratio;
    if (delta > 0.0) {
      ratio = d.kl_pq / sum_squared_shift(data, delta);
      lo_ratio = std::min(lo_ratio, *ratio);
      hi_ratio = std::max(hi_ratio, *ratio);
      log_delta.push_back(std::log(delta));
      log_kl.push_back(std::log(d.kl_pq));
    }
    report.rows.push_back({delta, ratio, d});
  }
  report.scalars["fitted_C"] = hi_ratio;
  // least-squares slope of log KL against log delta
  if (log_delta.size() >= 2) {
    const double mx = util::order_free_mean(log_delta), my = util::order_free_mean(log_kl);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t k = 0; k < log_delta.size(); ++k) {
      sxy += (log_delta[k] - mx) * (log_kl[k] - my);
      sxx += (log_delta[k] - mx) * (log_delta[k] - mx);
    }
    report.scalars["rate_exponent"] = sxy / sxx;
  }
  const auto& rows = report.rows;
  bool decreasing = true, bounded = true, zero_row_ok = true;
  for (std::size_t k = 0; k + 1 < rows.size(); ++k) {
    decreasing = decreasing && rows[k + 1].divergences->kl_pq < rows[k].divergences->kl_pq &&
                 rows[k + 1].divergences->hellinger < rows[k].divergences->hellinger;
    if (rows[k + 1].x > 0.0 && rows[k].x == 2.0 * rows[k + 1].x) {
      const double factor = rows[k].divergences->kl_pq / rows[k + 1].divergences->kl_pq;
      report.check(fmt::format("halving delta {:g} shrinks KL by a factor in [2.5, 6]", rows[k].x),
                   factor >= 2.5 && factor <= 6.0, fmt::format("factor {:.6g}", factor));
    }
  }
  for (const auto& r : rows) {
    bounded = bounded && r.divergences->hellinger <= 1.0;
    if (r.x == 0.0)
      zero_row_ok = zero_row_ok && r.divergences->kl_pq == 0.0 && r.divergences->kl_qp == 0.0 &&
                    r.divergences->tv == 0.0 && r.divergences->hellinger < 1e-7;
  }
  report.check("KL and Hellinger decrease with delta", decreasing);
  report.check("KL <= C sum ||delta||^2 with a stable C", std::isfinite(hi_ratio) && hi_ratio <= 2.0 * lo_ratio,
               fmt::format("KL / sum ||delta||^2 in [{:.6g}, {:.6g}]", lo_ratio, hi_ratio));
  report.check("Hellinger <= 1", bounded);
  report.check("delta = 0 gives zero divergence", zero_row_ok);
  if (report.scalars.count("rate_exponent")) {
    const double rate = report.scalars["rate_exponent"];
    report.check("empirical KL rate exponent in [1.5, 2.5]", rate >= 1.5 && rate <= 2.5, fmt::format("{:.6g}", rate));
  }
  report.check("grid covers the posteriors", reference.edge_mass() < 1e-8,
               fmt::format("edge mass {:.3g}", reference.edge_mass()));
  return report;
}

VerificationReport verify_w_continuity(const LossModel& loss, const PriorModel& prior, const Dataset& data, double w,
                                       std::vector<double> offsets, const GridSpec& spec) {
  VerificationReport report{"w-continuity", "relative_offset", "W_prime", {}, {}, {}};
  const auto base = quadrature_posterior(loss, prior, data, w, spec);
  const auto axes = widened(base.axes(), 2.0, prior, spec.tail);
  const auto reference = quadrature_posterior(loss, prior, data, w, axes);
  std::sort(offsets.begin(), offsets.end(), std::greater<>());
  for (double offset : offsets) {
    const double w2 = w * (1.0 + offset);
    report.rows.push_back({offset, w2, divergences(reference, quadrature_posterior(loss, prior, data, w2, axes))});
  }
  bool decreasing = true;
  for (std::size_t k = 0; k + 1 < report.rows.size(); ++k)
    decreasing = decreasing && report.rows[k + 1].divergences->hellinger < report.rows[k].divergences->hellinger;
  report.check("Hellinger decreases as W' -> W", decreasing);
  if (!report.rows.empty()) {
    const double first = report.rows.front().divergences->hellinger, last = report.rows.back().divergences->hellinger;
    report.check("Hellinger tends to zero", last <= 0.5 * first, fmt::format("{:.6g} -> {:.6g}", first, last));
  }
  return report;
}

double approximation_hellinger_bound(double a, double b, std::size_t n, double w, double psi) {
  const double growth = 1.0 + std::exp(b * static_cast<double>(n) * w);
  return std::sqrt(-std::expm1(-a * w * growth * growth * psi));
}

VerificationReport verify_finite_approximation(const MeshLossFactory& make_loss, const PriorModel& prior,
                                               const Dataset& data, double w, std::vector<std::size_t> meshes,
                                               std::size_t reference, const GridSpec& spec) {
  VerificationReport report{"approximation", "h", "hellinger_bound", {}, {}, {}};
  const auto fine_loss = make_loss(reference);
  const auto zoomed = quadrature_posterior(*fine_loss, prior, data, w, spec);
  const auto axes = widened(zoomed.axes(), 3.0, prior, spec.tail);
  const auto fine = quadrature_posterior(*fine_loss, prior, data, w, axes);
  std::sort(meshes.begin(), meshes.end());
  double edge = fine.edge_mass();
  std::vector<double> hs, psis;
  for (std::size_t m : meshes) {
    const auto post = quadrature_posterior(*make_loss(m), prior, data, w, axes);
    edge = std::max(edge, post.edge_mass());
    const double h = 1.0 / static_cast<double>(m - 1);
    report.rows.push_back({h, std::nullopt, divergences(fine, post)});
    hs.push_back(h);
    psis.push_back(h * h);
  }
  // rows run from coarse to fine
  const auto& rows = report.rows;
  bool kl_down = true, hellinger_down = true;
  for (std::size_t k = 0; k + 1 < rows.size(); ++k) {
    kl_down = kl_down && rows[k + 1].divergences->kl_pq <= rows[k].divergences->kl_pq + 1e-8;
    hellinger_down = hellinger_down && rows[k + 1].divergences->hellinger <= rows[k].divergences->hellinger + 1e-8;
  }
  report.check("KL decreases as the mesh is refined", kl_down);
  report.check("Hellinger decreases as the mesh is refined", hellinger_down);
  if (!rows.empty())
    report.check("divergence shrinks overall", rows.back().divergences->kl_pq < rows.front().divergences->kl_pq,
                 fmt::format("KL {:.6g} -> {:.6g}", rows.front().divergences->kl_pq, rows.back().divergences->kl_pq));
  report.check("grid covers the posteriors", edge < 1e-8, fmt::format("edge mass {:.3g}", edge));

  // smallest a (with b = 0) for which the bound holds on every row
  double a = 0.0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const double dh = rows[k].divergences->hellinger;
    a = std::max(a, -std::log1p(-dh * dh) / (4.0 * w * psis[k]));
  }
  report.scalars["fitted_a"] = a;
  bool bound_ok = true;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const double bound = approximation_hellinger_bound(a, 0.0, data.size(), w, psis[k]);
    report.rows[k].value = bound;
    bound_ok = bound_ok && bound <= 1.0 && bound >= rows[k].divergences->hellinger - 1e-12;
    if (k > 0) bound_ok = bound_ok && bound <= *report.rows[k - 1].value;
  }
  report.check("fitted Hellinger bound is <= 1, covers the curve and is monotone in psi", bound_ok);
  return report;
}

VerificationReport verify_consistency(const LocationProblem& problem, std::vector<std::size_t> ns, double eps,
                                      const GridSpec& spec) {
  VerificationReport report{"consistency", "n", "mass_outside", {}, {}, {}};
  const auto loss = problem.loss();
  const auto prior = problem.prior();
  const std::vector<double> center{problem.theta_star};
  std::sort(ns.begin(), ns.end());
  {
    const auto post = quadrature_posterior(*loss, *prior, problem.simulate(1, 0), 0.0, spec);
    const double mass = post.mass_outside_ball(center, eps);
    const std::vector<double> lo{problem.theta_star - eps}, hi{problem.theta_star + eps};
    const double exact = prior->mass_outside(lo, hi);
    report.rows.push_back({0.0, mass, std::nullopt});
    report.check("n = 0 mass equals the prior mass outside the ball", std::abs(mass - exact) < 1e-6,
                 fmt::format("{:.10g} vs {:.10g}", mass, exact));
  }
  for (std::size_t n : ns) {
    const auto post = quadrature_posterior(*loss, *prior, problem.simulate(n, n), problem.w, spec);
    report.rows.push_back({static_cast<double>(n), post.mass_outside_ball(center, eps), std::nullopt});
  }
  bool decreasing = true;
  for (std::size_t k = 1; k + 1 < report.rows.size(); ++k)
    decreasing = decreasing && *report.rows[k + 1].value < *report.rows[k].value;
  report.check("mass outside the ball strictly decreases in n", decreasing);
  const double last = *report.rows.back().value;
  report.check("mass outside the ball < 0.01 at the largest n", last < 0.01, fmt::format("{:.6g}", last));
  return report;
}

double SkewedProblem::median() const {
  const double total = left_scale + right_scale;
  // P(noise < 0) = left / total
  if (left_scale <= right_scale) return location + right_scale * std::log(2.0 * right_scale / total);
  return location - left_scale * std::log(2.0 * left_scale / total);
}

double SkewedProblem::mean() const {
  return location + right_scale - left_scale;
}

double SkewedProblem::draw(Rng& rng) const {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::exponential_distribution<double> e(1.0);
  const bool left = u(rng) < left_scale / (left_scale + right_scale);
  return location + (left ? -left_scale : right_scale) * e(rng);
}

VerificationReport verify_misspecified_concentration(const SkewedProblem& problem, double eps, const GridSpec& spec) {
  VerificationReport report{"misspecified", "theta", "monte_carlo_risk", {}, {}, {}};
  auto rng = util::stream_rng(problem.seed, 1, 0);
  std::vector<double> risk_draws(problem.risk_draws);
  for (auto& y : risk_draws) y = problem.draw(rng);

  auto risk = [&](double theta) {
    std::vector<double> terms(risk_draws.size());
    for (std::size_t i = 0; i < risk_draws.size(); ++i)
      terms[i] = problem.loss_scale * (theta - risk_draws[i]) * (theta - risk_draws[i]);
    return util::order_free_mean(terms);
  };
  auto grid_min = [&](double lo, double hi, double step, std::vector<double>* curve) {
    const auto thetas = linspace(lo, hi, static_cast<std::size_t>(std::ceil((hi - lo) / step)) + 1);
    std::vector<double> risks(thetas.size());
    util::parallel_for(thetas.size(), [&](std::size_t k) { risks[k] = risk(thetas[k]); });
    if (curve) *curve = risks;
    return thetas[static_cast<std::size_t>(std::min_element(risks.begin(), risks.end()) - risks.begin())];
  };
  // coarse pass over a wide window, then a 1e-4 pass around its minimum
  const double lo = problem.location - 2.0 * problem.left_scale - 1.0;
  const double hi = problem.location + 2.0 * problem.right_scale + 1.0;
  std::vector<double> coarse_curve;
  const double coarse = grid_min(lo, hi, 1e-2, &coarse_curve);
  const double theta_star = grid_min(coarse - 2e-2, coarse + 2e-2, 1e-4, nullptr);
  report.scalars["theta_star"] = theta_star;
  report.scalars["noise_median"] = problem.median();
  report.scalars["noise_mean"] = problem.mean();

  auto data_rng = util::stream_rng(problem.seed, 2, 0);
  std::vector<double> ys(problem.n);
  for (auto& y : ys) y = problem.draw(data_rng);
  const auto loss =
      std::make_shared<models::SquaredL2Loss>(std::make_shared<models::IdentityForwardModel>(1), problem.loss_scale);
  const models::GaussianPrior prior(0.0, 2.0 + std::abs(problem.mean()), 1);
  const auto post = quadrature_posterior(*loss, prior, scalar_dataset(ys), problem.w, spec);
  const double near_star = 1.0 - post.mass_outside_ball(std::vector<double>{theta_star}, eps);
  const double near_median = 1.0 - post.mass_outside_ball(std::vector<double>{problem.median()}, eps);
  report.scalars["posterior_mean"] = post.mean()[0];
  report.scalars["mass_near_theta_star"] = near_star;
  report.scalars["mass_near_median"] = near_median;
  report.check("median and risk minimizer are more than 2 eps apart", std::abs(theta_star - problem.median()) > 2 * eps,
               fmt::format("theta* {:.4f}, median {:.4f}", theta_star, problem.median()));
  report.check("posterior mass within eps of theta* > 0.99", near_star > 0.99, fmt::format("{:.6g}", near_star));
  report.check("posterior mass within eps of the median < 0.01", near_median < 0.01, fmt::format("{:.6g}", near_median));
  const auto coarse_thetas = linspace(lo, hi, coarse_curve.size());
  for (std::size_t k = 0; k < coarse_curve.size(); k += 5)
    report.rows.push_back({coarse_thetas[k], coarse_curve[k], std::nullopt});
  return report;
}

GapEstimate kl_gap(std::span<const double> draws, const std::function<double(double)>& log_p_hat,
                   const std::function<double(double)>& log_p_star) {
  GapEstimate out;
  out.per_draw.resize(draws.size());
  for (std::size_t i = 0; i < draws.size(); ++i) out.per_draw[i] = log_p_star(draws[i]) - log_p_hat(draws[i]);
  out.gap = util::order_free_mean(out.per_draw);
  out.se = draws.size() > 1 ? util::standard_error_of_mean(out.per_draw) : 0.0;
  return out;
}

double grid_log_predictive(const GridPosterior& posterior, const LossModel& loss, double y) {
  const auto log_z = loss.log_partition(1);
  if (!log_z) throw UnsupportedLossError(fmt::format("loss '{}' has no closed-form partition", loss.name()));
  std::vector<double> terms(posterior.size());
  const std::vector<double> obs{y};
  std::vector<double> prediction(1);
  for (std::size_t k = 0; k < posterior.size(); ++k) {
    const auto theta = posterior.point(k);
    loss.forward().apply(theta, prediction);
    terms[k] = posterior.log_density(k) + std::log(posterior.weight(k)) - loss.evaluate_prediction(prediction, obs);
  }
  return util::log_sum_exp(terms) - *log_z;
}

VerificationReport verify_predictive_convergence(const LocationProblem& problem, std::vector<std::size_t> ns,
                                                 std::size_t draws, const GridSpec& spec) {
  VerificationReport report{"predictive", "n", "kl_gap", {}, {}, {}};
  const auto loss = problem.loss();
  const auto prior = problem.prior();
  const double log_z = *loss->log_partition(1);
  auto rng = util::stream_rng(problem.seed, 0xfeed, 0);
  std::normal_distribution<double> noise(0.0, problem.noise_sd);
  std::vector<double> ys(draws);
  for (auto& y : ys) y = problem.theta_star + noise(rng);
  const std::vector<double> star{problem.theta_star};
  auto log_p_star = [&](double y) { return -loss->evaluate(ParameterVector(star), std::vector<double>{y}) - log_z; };

  // KL(P || p_star): zero exactly when the loss-based model matches the noise
  {
    std::vector<double> terms(draws);
    const double var = problem.noise_sd * problem.noise_sd;
    for (std::size_t i = 0; i < draws; ++i) {
      const double r = ys[i] - problem.theta_star;
      terms[i] = -0.5 * r * r / var - 0.5 * std::log(2.0 * std::numbers::pi * var) - log_p_star(ys[i]);
    }
    report.scalars["kl_truth_to_star"] = util::order_free_mean(terms);
    report.scalars["kl_truth_to_star_se"] = util::standard_error_of_mean(terms);
  }

  std::sort(ns.begin(), ns.end());
  std::vector<GapEstimate> gaps;
  for (std::size_t n : ns) {
    const auto post = quadrature_posterior(*loss, *prior, problem.simulate(n, n), problem.w, spec);
    std::vector<double> hat(draws);
    util::parallel_for(draws, [&](std::size_t i) { hat[i] = grid_log_predictive(post, *loss, ys[i]); });
    std::size_t idx = 0;
    auto est = kl_gap(ys, [&](double) { return hat[idx++]; }, log_p_star);
    report.rows.push_back({static_cast<double>(n), est.gap, std::nullopt});
    report.scalars[fmt::format("gap_se_n{}", n)] = est.se;
    gaps.push_back(std::move(est));
  }
  bool decreasing = true;
  for (std::size_t k = 0; k + 1 < gaps.size(); ++k) {
    std::vector<double> diff(draws);
    for (std::size_t i = 0; i < draws; ++i) diff[i] = gaps[k].per_draw[i] - gaps[k + 1].per_draw[i];
    const double se = util::standard_error_of_mean(diff);
    decreasing = decreasing && gaps[k + 1].gap < gaps[k].gap + 3.0 * se;
  }
  report.check("KL gap decreases in n within Monte Carlo noise", decreasing);
  if (!gaps.empty())
    report.check("|KL gap| < 0.02 at the largest n", std::abs(gaps.back().gap) < 0.02,
                 fmt::format("{:.6g} +- {:.2g}", gaps.back().gap, gaps.back().se));
  return report;
}

VerificationReport verify_inequalities(std::uint64_t seed, std::size_t pairs, const GridSpec& spec) {
  VerificationReport report{"inequalities", "pair", "slack", {}, {}, {}};
  const models::GaussianPrior prior(0.0, 1.0, 1);
  const auto box = prior.central_box(spec.tail / 4.0);
  const GridAxes axes{linspace(box[0].first, box[0].second, spec.points)};
  auto forward = std::make_shared<models::IdentityForwardModel>(1);
  const auto names = models::builtin_loss_names();
  std::size_t violations = 0;
  for (std::size_t pair = 0; pair < pairs; ++pair) {
    auto rng = util::stream_rng(seed, pair, 0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto random_posterior = [&] {
      const std::size_t n = 1 + static_cast<std::size_t>(u(rng) * 10.0);
      const double mu = -2.0 + 4.0 * u(rng);
      std::normal_distribution<double> noise(mu, 1.0);
      std::vector<double> ys(n);
      for (auto& y : ys) y = noise(rng);
      const auto& name = names[static_cast<std::size_t>(u(rng) * static_cast<double>(names.size())) % names.size()];
      const auto loss = models::make_loss(name, forward, 0.5 + 1.5 * u(rng));
      return quadrature_posterior(*loss, prior, scalar_dataset(ys), 0.05 + 0.95 * u(rng), axes);
    };
    const auto p = random_posterior();
    const auto q = random_posterior();
    const auto d = divergences(p, q);
    const double upper = std::sqrt(-std::expm1(-std::min(d.kl_pq, d.kl_qp)));
    const double slack = std::min(d.tv - d.hellinger * d.hellinger, upper - d.tv);
    if (slack < -1e-9) ++violations;
    report.rows.push_back({static_cast<double>(pair), slack, d});
  }
  report.scalars["violations"] = static_cast<double>(violations);
  report.check("d_H^2 <= TV <= sqrt(1 - exp(-min KL)) on every pair", violations == 0,
               fmt::format("{} violations in {} pairs", violations, pairs));
  return report;
}

}  // namespace gibbs::oracle
