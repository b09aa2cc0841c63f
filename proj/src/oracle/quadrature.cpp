#include "gibbs/oracle/quadrature.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "gibbs/core/errors.hpp"
#include "gibbs/util/numeric.hpp"
#include "gibbs/util/parallel.hpp"

namespace gibbs::oracle {

namespace {

std::vector<double> trapezoid_weights(const std::vector<double>& x) {
  std::vector<double> w(x.size(), 0.0);
  for (std::size_t k = 0; k + 1 < x.size(); ++k) {
    const double half = 0.5 * (x[k + 1] - x[k]);
    w[k] += half;
    w[k + 1] += half;
  }
  return w;
}

std::size_t grid_size(const GridAxes& axes) {
  std::size_t n = 1;
  for (const auto& a : axes) n *= a.size();
  return n;
}

void check_axes(const GridAxes& axes) {
  if (axes.empty() || axes.size() > 2)
    throw ConfigurationError(fmt::format("quadrature grids support 1 or 2 dimensions, got {}", axes.size()));
  for (const auto& a : axes) {
    if (a.size() < 2) throw ConfigurationError("each grid axis needs at least two points");
    for (std::size_t k = 0; k + 1 < a.size(); ++k)
      if (!(a[k + 1] > a[k])) throw ConfigurationError("grid axes must be strictly increasing");
  }
}

// Marginal masses along axis `dim`.
std::vector<double> marginal(const GridPosterior& post, std::size_t dim) {
  const auto& axes = post.axes();
  std::vector<double> out(axes[dim].size(), 0.0);
  const std::size_t inner = post.dimension() == 2 ? axes[1].size() : 1;
  for (std::size_t k = 0; k < post.size(); ++k) {
    const std::size_t idx = dim == 0 ? k / inner : k % inner;
    out[idx] += post.weight(k) * post.density(k);
  }
  return out;
}

}  // namespace

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  if (n < 2 || !(hi > lo)) throw ConfigurationError(fmt::format("linspace needs n >= 2 and lo < hi ({}, {})", lo, hi));
  std::vector<double> x(n);
  for (std::size_t k = 0; k < n; ++k) x[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
  x.back() = hi;
  return x;
}

GridPosterior::GridPosterior(GridAxes axes, std::vector<double> log_unnormalized)
    : axes_(std::move(axes)), log_unnormalized_(std::move(log_unnormalized)) {
  check_axes(axes_);
  if (log_unnormalized_.size() != grid_size(axes_)) throw ConfigurationError("grid values do not match the axes");
  for (const auto& a : axes_) axis_weights_.push_back(trapezoid_weights(a));
  std::vector<double> terms(size());
  for (std::size_t k = 0; k < size(); ++k) terms[k] = log_unnormalized_[k] + std::log(weight(k));
  log_z_ = util::log_sum_exp(terms);
  if (!std::isfinite(log_z_))
    throw NumericalError(fmt::format("grid posterior has log partition {}; no grid node carries mass", log_z_), {});
}

std::vector<double> GridPosterior::mesh_widths() const {
  std::vector<double> h;
  for (const auto& a : axes_) h.push_back((a.back() - a.front()) / static_cast<double>(a.size() - 1));
  return h;
}

std::vector<double> GridPosterior::point(std::size_t k) const {
  if (dimension() == 1) return {axes_[0][k]};
  const std::size_t inner = axes_[1].size();
  return {axes_[0][k / inner], axes_[1][k % inner]};
}

double GridPosterior::weight(std::size_t k) const {
  if (dimension() == 1) return axis_weights_[0][k];
  const std::size_t inner = axes_[1].size();
  return axis_weights_[0][k / inner] * axis_weights_[1][k % inner];
}

double GridPosterior::density(std::size_t k) const { return std::exp(log_density(k)); }

double GridPosterior::expectation(const std::function<double(std::span<const double>)>& f) const {
  std::vector<double> terms(size(), 0.0);
  for (std::size_t k = 0; k < size(); ++k) {
    const double mass = weight(k) * density(k);
    if (mass > 0.0) terms[k] = mass * f(point(k));
  }
  return util::order_free_sum(terms);
}

std::vector<double> GridPosterior::mean() const {
  std::vector<double> m(dimension());
  for (std::size_t j = 0; j < dimension(); ++j)
    m[j] = expectation([j](std::span<const double> x) { return x[j]; });
  return m;
}

std::vector<double> GridPosterior::variance() const {
  const auto m = mean();
  std::vector<double> v(dimension());
  for (std::size_t j = 0; j < dimension(); ++j)
    v[j] = expectation([&, j](std::span<const double> x) { return (x[j] - m[j]) * (x[j] - m[j]); });
  return v;
}

double GridPosterior::mass_outside_ball(std::span<const double> center, double radius) const {
  if (center.size() != dimension()) throw ConfigurationError("ball center has the wrong dimension");
  if (dimension() == 1) {
    // exact integral of the piecewise-linear interpolant, consistent with the trapezoid rule
    const auto& x = axes_[0];
    const double a = center[0] - radius, b = center[0] + radius;
    std::vector<double> pieces;
    auto piece = [&](std::size_t k, double l, double r) {
      if (!(r > l)) return;
      const double slope = (density(k + 1) - density(k)) / (x[k + 1] - x[k]);
      const double fl = density(k) + slope * (l - x[k]), fr = density(k) + slope * (r - x[k]);
      pieces.push_back(0.5 * (r - l) * (fl + fr));
    };
    for (std::size_t k = 0; k + 1 < x.size(); ++k) {
      piece(k, x[k], std::min(x[k + 1], a));
      piece(k, std::max(x[k], b), x[k + 1]);
    }
    return util::order_free_sum(pieces);
  }
  return expectation([&](std::span<const double> x) {
    double r2 = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) r2 += (x[j] - center[j]) * (x[j] - center[j]);
    return r2 > radius * radius ? 1.0 : 0.0;
  });
}

double GridPosterior::edge_mass() const {
  double total = 0.0;
  for (std::size_t j = 0; j < dimension(); ++j) {
    const auto m = marginal(*this, j);
    total += m.front() + m.back();
  }
  return total;
}

GridPosterior quadrature_posterior(const LossModel& loss, const PriorModel& prior, const Dataset& data, double w,
                                   const GridAxes& axes) {
  check_axes(axes);
  if (axes.size() != prior.dimension())
    throw ConfigurationError(fmt::format("grid has {} axes but the prior has dimension {}", axes.size(),
                                         prior.dimension()));
  if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigurationError(fmt::format("W = {} must be finite and >= 0", w));
  const std::size_t total = grid_size(axes);
  const std::size_t inner = axes.size() == 2 ? axes[1].size() : 1;
  std::vector<double> values(total);
  util::parallel_for(total, [&](std::size_t k) {
    std::vector<double> theta = axes.size() == 1 ? std::vector<double>{axes[0][k]}
                                                 : std::vector<double>{axes[0][k / inner], axes[1][k % inner]};
    const double log_prior = prior.log_density(theta);
    if (log_prior == util::kNegInf) {
      values[k] = util::kNegInf;
      return;
    }
    double sum = 0.0;
    if (w > 0.0) {
      std::vector<double> losses(data.size());
      loss.evaluate_all(theta, data, losses);
      sum = util::order_free_sum(losses);
    }
    values[k] = log_prior - w * sum;
  });
  return GridPosterior(axes, std::move(values));
}

GridPosterior quadrature_posterior(const LossModel& loss, const PriorModel& prior, const Dataset& data, double w,
                                   const GridSpec& spec) {
  const std::size_t p = prior.dimension();
  if (p == 0 || p > 2) throw ConfigurationError(fmt::format("quadrature oracle needs p <= 2, got {}", p));
  // half the budget per side leaves room for rounding in the tail probabilities
  const double side_tail = spec.tail / (4.0 * static_cast<double>(p));
  const auto box = prior.central_box(side_tail);
  std::vector<double> lower, upper;
  for (const auto& [lo, hi] : box) {
    lower.push_back(lo);
    upper.push_back(hi);
  }
  const double outside = prior.mass_outside(lower, upper);
  if (!(outside <= spec.tail))
    throw CoverageError(fmt::format("prior mass {:.3g} outside the grid exceeds {:.3g}", outside, spec.tail));

  GridAxes axes;
  for (const auto& [lo, hi] : box) axes.push_back(linspace(lo, hi, spec.points));
  auto post = quadrature_posterior(loss, prior, data, w, axes);
  double truncated = 0.0;
  for (std::size_t zoom = 0; zoom < spec.max_zooms; ++zoom) {
    GridAxes next = post.axes();
    bool shrunk = false;
    double cut = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      const auto m = marginal(post, j);
      const auto& x = post.axes()[j];
      std::size_t lo = 0, hi = m.size() - 1;
      double left = 0.0, right = 0.0;
      while (lo + 1 < m.size() && left + m[lo] <= side_tail) left += m[lo++];
      while (hi > lo && right + m[hi] <= side_tail) right += m[hi--];
      // keep two cells of margin on each side
      lo = lo >= 2 ? lo - 2 : 0;
      hi = std::min(m.size() - 1, hi + 2);
      if (hi - lo < 4) hi = std::min(m.size() - 1, lo + 4);
      if (static_cast<double>(hi - lo) < 0.5 * static_cast<double>(m.size() - 1)) {
        shrunk = true;
        for (std::size_t k = 0; k < lo; ++k) cut += m[k];
        for (std::size_t k = hi + 1; k < m.size(); ++k) cut += m[k];
        next[j] = linspace(x[lo], x[hi], spec.points);
      }
    }
    if (!shrunk) break;
    truncated += cut;
    post = quadrature_posterior(loss, prior, data, w, next);
  }
  post.set_truncated_mass(truncated);
  return post;
}

GridAxes widened(const GridAxes& axes, double factor, const PriorModel& prior, double tail) {
  const auto box = prior.central_box(tail / (4.0 * static_cast<double>(axes.size())));
  GridAxes out;
  for (std::size_t j = 0; j < axes.size(); ++j) {
    const double c = 0.5 * (axes[j].front() + axes[j].back());
    const double half = 0.5 * factor * (axes[j].back() - axes[j].front());
    out.push_back(linspace(std::max(c - half, box[j].first), std::min(c + half, box[j].second), axes[j].size()));
  }
  return out;
}

Divergences divergences(const GridPosterior& p, const GridPosterior& q) {
  if (!p.same_grid(q)) throw ConfigurationError("divergences need posteriors on the same grid");
  std::vector<double> kl_pq(p.size(), 0.0), kl_qp(p.size(), 0.0), affinity(p.size(), 0.0), l1(p.size(), 0.0);
  bool pq_infinite = false, qp_infinite = false;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double w = p.weight(k);
    const double lp = p.log_density(k), lq = q.log_density(k);
    const double dp = std::exp(lp), dq = std::exp(lq);
    if (dp > 0.0) {
      if (lq == util::kNegInf) pq_infinite = true;
      else kl_pq[k] = w * dp * (lp - lq);
    }
    if (dq > 0.0) {
      if (lp == util::kNegInf) qp_infinite = true;
      else kl_qp[k] = w * dq * (lq - lp);
    }
    affinity[k] = w * std::exp(0.5 * (lp + lq));
    l1[k] = w * std::abs(dp - dq);
  }
  Divergences d;
  const double inf = std::numeric_limits<double>::infinity();
  d.kl_pq = pq_infinite ? inf : std::max(0.0, util::order_free_sum(kl_pq));
  d.kl_qp = qp_infinite ? inf : std::max(0.0, util::order_free_sum(kl_qp));
  d.hellinger = std::sqrt(std::clamp(1.0 - util::order_free_sum(affinity), 0.0, 1.0));
  d.tv = std::clamp(0.5 * util::order_free_sum(l1), 0.0, 1.0);
  return d;
}

double gibbs_objective(const GridPosterior& posterior, const LossModel& loss, const PriorModel& prior,
                       const Dataset& data, double w) {
  if (!(w > 0.0)) throw ConfigurationError("the Gibbs objective needs W > 0");
  const double n = static_cast<double>(data.size());
  std::vector<double> terms(posterior.size(), 0.0);
  util::parallel_for(posterior.size(), [&](std::size_t k) {
    const double mass = posterior.weight(k) * posterior.density(k);
    if (!(mass > 0.0)) return;
    const auto theta = posterior.point(k);
    std::vector<double> losses(data.size());
    loss.evaluate_all(theta, data, losses);
    const double risk = util::order_free_sum(losses) / n;
    terms[k] = mass * (risk + (posterior.log_density(k) - prior.log_density(theta)) / (n * w));
  });
  return util::order_free_sum(terms);
}

}  // namespace gibbs::oracle
