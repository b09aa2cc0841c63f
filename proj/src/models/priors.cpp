#include "gibbs/models/priors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/normal.hpp>
#include <fmt/format.h>

#include "gibbs/core/errors.hpp"
#include "gibbs/models/surrogate.hpp"
#include "gibbs/util/numeric.hpp"

namespace gibbs::models {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<std::string> default_names(std::vector<std::string> names, std::size_t dimension,
                                       const std::string& stem) {
  if (names.empty()) {
    for (std::size_t k = 0; k < dimension; ++k) names.push_back(fmt::format("{}[{}]", stem, k));
  }
  if (names.size() != dimension)
    throw ConfigurationError(fmt::format("{} names given for dimension {}", names.size(), dimension));
  return names;
}

void check_dimension(std::span<const double> theta, std::size_t dimension) {
  if (theta.size() != dimension)
    throw DomainError(fmt::format("prior expects dimension {}, got {}", dimension, theta.size()));
}

void check_box(std::span<const double> lower, std::span<const double> upper, std::size_t dimension) {
  if (lower.size() != dimension || upper.size() != dimension)
    throw ConfigurationError("mass_outside: box dimension mismatch");
}

// Mass of a univariate distribution inside [lo, hi] via its CDF.
template <typename Cdf>
double inside(double lo, double hi, Cdf&& cdf) {
  if (!(hi > lo)) return 0.0;
  return std::max(0.0, cdf(hi) - cdf(lo));
}

double one_minus_product(const std::vector<double>& inside_mass) {
  double log_keep = 0.0;
  for (double p : inside_mass) log_keep += std::log(p);
  return -std::expm1(log_keep);
}

}  // namespace

GammaPrior::GammaPrior(double shape, double rate, std::size_t dimension, std::vector<std::string> names)
    : PriorModel(default_names(std::move(names), dimension, "gamma")),
      shape_(shape),
      rate_(rate),
      dimension_(dimension),
      domain_(std::vector<double>(dimension, 0.0), std::vector<double>(dimension, kInf)) {
  if (!(shape > 0.0) || !(rate > 0.0) || !std::isfinite(shape) || !std::isfinite(rate))
    throw ConfigurationError(fmt::format("Gamma prior needs positive shape and rate, got ({}, {})", shape, rate));
  if (dimension == 0) throw ConfigurationError("Gamma prior needs dimension >= 1");
}

double GammaPrior::log_density(std::span<const double> theta) const {
  check_dimension(theta, dimension_);
  const double log_norm = shape_ * std::log(rate_) - std::lgamma(shape_);
  double acc = 0.0;
  for (double x : theta) {
    if (!(x > 0.0) || !std::isfinite(x)) return util::kNegInf;
    acc += (shape_ - 1.0) * std::log(x) - rate_ * x + log_norm;
  }
  return acc;
}

void GammaPrior::sample_into(Rng& rng, std::span<double> out) const {
  check_dimension(out, dimension_);
  std::gamma_distribution<double> dist(shape_, 1.0 / rate_);
  for (double& x : out) {
    do x = dist(rng);
    while (!(x > 0.0));
  }
}

double GammaPrior::cdf(double x) const {
  if (x <= 0.0) return 0.0;
  if (!std::isfinite(x)) return 1.0;
  return boost::math::cdf(boost::math::gamma_distribution<double>(shape_, 1.0 / rate_), x);
}

std::vector<std::pair<double, double>> GammaPrior::central_box(double tail) const {
  const boost::math::gamma_distribution<double> dist(shape_, 1.0 / rate_);
  return std::vector<std::pair<double, double>>(dimension_, {0.0, boost::math::quantile(complement(dist, tail))});
}

double GammaPrior::mass_outside(std::span<const double> lower, std::span<const double> upper) const {
  check_box(lower, upper, dimension_);
  std::vector<double> in;
  for (std::size_t k = 0; k < dimension_; ++k) in.push_back(inside(lower[k], upper[k], [&](double x) { return cdf(x); }));
  return one_minus_product(in);
}

GaussianPrior::GaussianPrior(double mean, double sd, std::size_t dimension, std::vector<std::string> names)
    : PriorModel(default_names(std::move(names), dimension, "theta")),
      mean_(mean),
      sd_(sd),
      dimension_(dimension),
      domain_(ParameterDomain::unbounded(dimension)) {
  if (!(sd > 0.0) || !std::isfinite(sd) || !std::isfinite(mean))
    throw ConfigurationError(fmt::format("Gaussian prior needs finite mean and positive sd, got ({}, {})", mean, sd));
}

double GaussianPrior::log_density(std::span<const double> theta) const {
  check_dimension(theta, dimension_);
  double acc = 0.0;
  for (double x : theta) {
    if (!std::isfinite(x)) return util::kNegInf;
    const double z = (x - mean_) / sd_;
    acc += -0.5 * z * z - std::log(sd_) - 0.5 * std::log(2.0 * std::numbers::pi);
  }
  return acc;
}

void GaussianPrior::sample_into(Rng& rng, std::span<double> out) const {
  check_dimension(out, dimension_);
  std::normal_distribution<double> dist(mean_, sd_);
  for (double& x : out) x = dist(rng);
}

double GaussianPrior::cdf(double x) const {
  return 0.5 * std::erfc(-(x - mean_) / (sd_ * std::sqrt(2.0)));
}

std::vector<std::pair<double, double>> GaussianPrior::central_box(double tail) const {
  const boost::math::normal_distribution<double> dist(mean_, sd_);
  return std::vector<std::pair<double, double>>(
      dimension_, {boost::math::quantile(dist, tail), boost::math::quantile(complement(dist, tail))});
}

double GaussianPrior::mass_outside(std::span<const double> lower, std::span<const double> upper) const {
  check_box(lower, upper, dimension_);
  std::vector<double> in;
  for (std::size_t k = 0; k < dimension_; ++k) {
    // lower tail + upper tail, each via erfc to keep precision far out
    const double below = 0.5 * std::erfc(-(lower[k] - mean_) / (sd_ * std::sqrt(2.0)));
    const double above = 0.5 * std::erfc((upper[k] - mean_) / (sd_ * std::sqrt(2.0)));
    in.push_back(upper[k] > lower[k] ? std::max(0.0, 1.0 - below - above) : 0.0);
  }
  return one_minus_product(in);
}

ScaledBetaPrior::ScaledBetaPrior(double alpha, double beta, std::vector<double> lower, std::vector<double> upper,
                                 std::vector<std::string> names)
    : PriorModel(default_names(std::move(names), lower.size(), "theta")),
      alpha_(alpha),
      beta_(beta),
      lower_(lower),
      upper_(upper),
      domain_(std::move(lower), std::move(upper)) {
  if (!(alpha > 0.0) || !(beta > 0.0) || !std::isfinite(alpha) || !std::isfinite(beta))
    throw ConfigurationError(fmt::format("Beta prior needs positive shapes, got ({}, {})", alpha, beta));
  for (std::size_t k = 0; k < lower_.size(); ++k) {
    if (!std::isfinite(lower_[k]) || !std::isfinite(upper_[k]))
      throw ConfigurationError("scaled Beta prior needs a finite box");
  }
}

double ScaledBetaPrior::log_density(std::span<const double> theta) const {
  check_dimension(theta, lower_.size());
  const double log_beta_fn = std::lgamma(alpha_) + std::lgamma(beta_) - std::lgamma(alpha_ + beta_);
  double acc = 0.0;
  for (std::size_t k = 0; k < theta.size(); ++k) {
    if (!(theta[k] >= lower_[k]) || !(theta[k] <= upper_[k])) return util::kNegInf;
    const double width = upper_[k] - lower_[k];
    const double x = (theta[k] - lower_[k]) / width;
    // shape exponents of exactly 1 contribute nothing, also at the edges
    const double left = alpha_ == 1.0 ? 0.0 : (alpha_ - 1.0) * std::log(x);
    const double right = beta_ == 1.0 ? 0.0 : (beta_ - 1.0) * std::log1p(-x);
    acc += left + right - log_beta_fn - std::log(width);
  }
  return std::isnan(acc) ? util::kNegInf : acc;
}

void ScaledBetaPrior::sample_into(Rng& rng, std::span<double> out) const {
  check_dimension(out, lower_.size());
  std::gamma_distribution<double> ga(alpha_, 1.0);
  std::gamma_distribution<double> gb(beta_, 1.0);
  for (std::size_t k = 0; k < out.size(); ++k) {
    double x;
    do {
      const double a = ga(rng);
      const double b = gb(rng);
      x = a / (a + b);
    } while (!(x > 0.0 && x < 1.0));
    out[k] = std::clamp(lower_[k] + (upper_[k] - lower_[k]) * x, lower_[k], upper_[k]);
  }
}

double ScaledBetaPrior::cdf(std::size_t component, double x) const {
  const double u = (x - lower_[component]) / (upper_[component] - lower_[component]);
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  return boost::math::ibeta(alpha_, beta_, u);
}

std::vector<std::pair<double, double>> ScaledBetaPrior::central_box(double /*tail*/) const {
  std::vector<std::pair<double, double>> box;
  for (std::size_t k = 0; k < lower_.size(); ++k) box.emplace_back(lower_[k], upper_[k]);
  return box;
}

double ScaledBetaPrior::mass_outside(std::span<const double> lower, std::span<const double> upper) const {
  check_box(lower, upper, lower_.size());
  std::vector<double> in;
  for (std::size_t k = 0; k < lower_.size(); ++k)
    in.push_back(inside(lower[k], upper[k], [&](double x) { return cdf(k, x); }));
  return one_minus_product(in);
}

OrderedUniformPrior::OrderedUniformPrior(std::size_t count, std::vector<std::string> names)
    : PriorModel(default_names(std::move(names), count, "cut")),
      count_(count),
      log_normaliser_(std::lgamma(static_cast<double>(count) + 1.0)),
      domain_([count] {
        std::vector<OrderingConstraint> ordering;
        for (std::size_t k = 1; k < count; ++k) ordering.push_back({k - 1, k});
        return ParameterDomain(std::vector<double>(count, 0.0), std::vector<double>(count, 1.0), ordering);
      }()) {
  if (count == 0) throw ConfigurationError("ordered uniform prior needs at least one component");
}

double OrderedUniformPrior::log_density(std::span<const double> theta) const {
  check_dimension(theta, count_);
  double previous = 0.0;
  for (double c : theta) {
    if (!(c > previous) || !(c < 1.0)) return util::kNegInf;
    previous = c;
  }
  return log_normaliser_;
}

void OrderedUniformPrior::sample_into(Rng& rng, std::span<double> out) const {
  check_dimension(out, count_);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  do {
    for (double& c : out) c = unif(rng);
    std::sort(out.begin(), out.end());
  } while (!std::isfinite(log_density(out)));
}

std::vector<std::pair<double, double>> OrderedUniformPrior::central_box(double /*tail*/) const {
  return std::vector<std::pair<double, double>>(count_, {0.0, 1.0});
}

double OrderedUniformPrior::mass_outside(std::span<const double> lower, std::span<const double> upper) const {
  check_box(lower, upper, count_);
  double total = 0.0;
  const double k = static_cast<double>(count_);
  for (std::size_t j = 0; j < count_; ++j) {
    const double a = static_cast<double>(j) + 1.0;
    auto cdf = [&](double x) { return x <= 0.0 ? 0.0 : x >= 1.0 ? 1.0 : boost::math::ibeta(a, k - a + 1.0, x); };
    total += 1.0 - inside(lower[j], upper[j], cdf);
  }
  return std::min(1.0, total);
}

ProductPrior::ProductPrior(std::vector<std::shared_ptr<const PriorModel>> blocks)
    : PriorModel([&blocks] {
        std::vector<std::string> names;
        for (const auto& b : blocks) {
          if (!b) throw ConfigurationError("product prior: null block");
          names.insert(names.end(), b->names()->begin(), b->names()->end());
        }
        return names;
      }()),
      blocks_(std::move(blocks)),
      dimension_(0),
      domain_(ParameterDomain::unbounded(1)) {
  if (blocks_.empty()) throw ConfigurationError("product prior needs at least one block");
  domain_ = blocks_.front()->domain();
  dimension_ = blocks_.front()->dimension();
  for (std::size_t b = 1; b < blocks_.size(); ++b) {
    domain_ = domain_.concatenate(blocks_[b]->domain());
    dimension_ += blocks_[b]->dimension();
  }
}

double ProductPrior::log_density(std::span<const double> theta) const {
  check_dimension(theta, dimension_);
  double acc = 0.0;
  std::size_t offset = 0;
  for (const auto& b : blocks_) {
    const double v = b->log_density(theta.subspan(offset, b->dimension()));
    if (v == util::kNegInf) return v;
    acc += v;
    offset += b->dimension();
  }
  return acc;
}

void ProductPrior::sample_into(Rng& rng, std::span<double> out) const {
  check_dimension(out, dimension_);
  std::size_t offset = 0;
  for (const auto& b : blocks_) {
    b->sample_into(rng, out.subspan(offset, b->dimension()));
    offset += b->dimension();
  }
}

std::vector<std::pair<double, double>> ProductPrior::central_box(double tail) const {
  std::vector<std::pair<double, double>> box;
  for (const auto& b : blocks_) {
    const auto part = b->central_box(tail);
    box.insert(box.end(), part.begin(), part.end());
  }
  return box;
}

double ProductPrior::mass_outside(std::span<const double> lower, std::span<const double> upper) const {
  check_box(lower, upper, dimension_);
  std::vector<double> in;
  std::size_t offset = 0;
  for (const auto& b : blocks_) {
    const std::size_t p = b->dimension();
    in.push_back(1.0 - b->mass_outside(lower.subspan(offset, p), upper.subspan(offset, p)));
    offset += p;
  }
  return one_minus_product(in);
}

std::shared_ptr<const PriorModel> fredholm_prior(std::size_t blocks) {
  std::vector<std::string> coef_names;
  for (std::size_t j = 0; j < blocks; ++j) coef_names.push_back(fmt::format("b{}", j + 1));
  auto coefficients = std::make_shared<GammaPrior>(2.0, 1.0, blocks, coef_names);
  if (blocks == 1) return coefficients;
  std::vector<std::string> cut_names;
  for (std::size_t j = 1; j < blocks; ++j) cut_names.push_back(fmt::format("c{}", j));
  auto cutpoints = std::make_shared<OrderedUniformPrior>(blocks - 1, cut_names);
  return std::make_shared<ProductPrior>(std::vector<std::shared_ptr<const PriorModel>>{coefficients, cutpoints});
}

std::shared_ptr<const PriorModel> surrogate_prior() {
  const auto box = SurrogateDispersionModel::box();
  return std::make_shared<ScaledBetaPrior>(1.0, 3.0, box.lower(), box.upper(),
                                           std::vector<std::string>{"modulus_kPa", "thickness_mm", "radius_mm"});
}

std::vector<std::pair<std::string, std::shared_ptr<const PriorModel>>> builtin_priors() {
  return {
      {"gamma", std::make_shared<GammaPrior>(2.0, 1.0, 1)},
      {"ordered-uniform", std::make_shared<OrderedUniformPrior>(2)},
      {"scaled-beta", std::make_shared<ScaledBetaPrior>(1.0, 3.0, std::vector<double>{5.0}, std::vector<double>{95.0})},
      {"gaussian", std::make_shared<GaussianPrior>(0.0, 1.0, 1)},
  };
}

}  // namespace gibbs::models
