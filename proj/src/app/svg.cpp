#include "gibbs/app/svg.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace gibbs::app {

namespace {

struct Range {
  double lo = 0.0;
  double hi = 1.0;
  void include(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  double span() const { return hi > lo ? hi - lo : 1.0; }
};

Range range_of(std::span<const double> v, std::size_t stride = 1, std::size_t offset = 0) {
  Range r{INFINITY, -INFINITY};
  for (std::size_t k = offset; k < v.size(); k += stride) r.include(v[k]);
  if (!(r.hi >= r.lo)) return {0.0, 1.0};
  if (r.hi == r.lo) return {r.lo - 0.5, r.hi + 0.5};
  return r;
}

std::string header(double width, double height) {
  return fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
      "font-family=\"sans-serif\" font-size=\"11\">\n<rect width=\"{0}\" height=\"{1}\" fill=\"white\"/>\n",
      width, height);
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

}  // namespace

std::string svg_lines(const std::string& title, const std::vector<Series>& series, const std::string& x_label,
                      const std::string& y_label) {
  const double W = 640, H = 420, left = 60, right = 150, top = 30, bottom = 45;
  Range rx{INFINITY, -INFINITY}, ry{INFINITY, -INFINITY};
  for (const auto& s : series) {
    for (double v : s.x) rx.include(v);
    for (double v : s.y) ry.include(v);
  }
  if (!(rx.hi >= rx.lo)) rx = {0, 1};
  if (!(ry.hi >= ry.lo)) ry = {0, 1};
  const double pw = W - left - right, ph = H - top - bottom;
  auto px = [&](double x) { return left + (x - rx.lo) / rx.span() * pw; };
  auto py = [&](double y) { return top + ph - (y - ry.lo) / ry.span() * ph; };
  std::string out = header(W, H);
  out += fmt::format("<text x=\"{}\" y=\"18\" font-size=\"13\">{}</text>\n", left, escape(title));
  out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>\n", left, top, pw, ph);
  for (int k = 0; k <= 4; ++k) {
    const double fx = rx.lo + rx.span() * k / 4.0, fy = ry.lo + ry.span() * k / 4.0;
    out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{:.3g}</text>\n", px(fx), top + ph + 14, fx);
    out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{:.3g}</text>\n", left - 4, py(fy) + 4, fy);
  }
  out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{}</text>\n", left + pw / 2, H - 8, escape(x_label));
  out += fmt::format("<text x=\"14\" y=\"{:.1f}\" transform=\"rotate(-90 14 {:.1f})\" text-anchor=\"middle\">{}</text>\n",
                     top + ph / 2, top + ph / 2, escape(y_label));
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    std::string points;
    for (std::size_t k = 0; k < std::min(s.x.size(), s.y.size()); ++k)
      if (std::isfinite(s.x[k]) && std::isfinite(s.y[k])) points += fmt::format("{:.2f},{:.2f} ", px(s.x[k]), py(s.y[k]));
    out += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"{} points=\"{}\"/>\n", s.color,
                       s.dashed ? " stroke-dasharray=\"5,3\"" : "", points);
    const double ly = top + 12 + 16.0 * static_cast<double>(i);
    out += fmt::format("<line x1=\"{0}\" x2=\"{1}\" y1=\"{2}\" y2=\"{2}\" stroke=\"{3}\"{4}/>\n", W - right + 10,
                       W - right + 30, ly, s.color, s.dashed ? " stroke-dasharray=\"5,3\"" : "");
    out += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", W - right + 35, ly + 4, escape(s.label));
  }
  return out + "</svg>\n";
}

std::string svg_marginals(const std::vector<std::string>& names, std::span<const double> values, std::size_t p,
                          std::span<const double> weights, std::span<const double> reference) {
  const double pw = 220, ph = 150, gap = 30;
  const std::size_t cols = std::min<std::size_t>(p, 4), rows = (p + cols - 1) / cols;
  const double W = cols * (pw + gap) + gap, H = rows * (ph + gap + 10) + gap;
  const std::size_t bins = 30;
  std::string out = header(W, H);
  for (std::size_t j = 0; j < p; ++j) {
    const double ox = gap + static_cast<double>(j % cols) * (pw + gap);
    const double oy = gap + static_cast<double>(j / cols) * (ph + gap + 10);
    const Range r = range_of(values, p, j);
    std::vector<double> h(bins, 0.0), ref(bins, 0.0);
    auto bin = [&](double v) {
      const auto b = static_cast<long>((v - r.lo) / r.span() * static_cast<double>(bins));
      return b < 0 || b >= static_cast<long>(bins) ? (v == r.hi ? static_cast<long>(bins) - 1 : -1) : b;
    };
    double total = 0.0;
    for (std::size_t s = 0; s * p + j < values.size(); ++s) {
      const long b = bin(values[s * p + j]);
      if (b >= 0) h[static_cast<std::size_t>(b)] += weights[s];
      total += weights[s];
    }
    const std::size_t ref_count = reference.size() / p;
    for (std::size_t s = 0; s < ref_count; ++s) {
      const long b = bin(reference[s * p + j]);
      if (b >= 0) ref[static_cast<std::size_t>(b)] += 1.0 / static_cast<double>(ref_count);
    }
    for (auto& v : h) v /= total > 0 ? total : 1.0;
    const double top = std::max(*std::max_element(h.begin(), h.end()), *std::max_element(ref.begin(), ref.end()));
    const double bw = pw / static_cast<double>(bins);
    for (std::size_t b = 0; b < bins; ++b) {
      const double bh = top > 0 ? h[b] / top * ph : 0.0;
      out += fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"#9ecae1\"/>\n",
                         ox + bw * static_cast<double>(b), oy + ph - bh, bw, bh);
    }
    std::string line;
    for (std::size_t b = 0; b < bins; ++b) {
      const double y = oy + ph - (top > 0 ? ref[b] / top * ph : 0.0);
      line += fmt::format("{:.2f},{:.2f} {:.2f},{:.2f} ", ox + bw * static_cast<double>(b), y,
                          ox + bw * static_cast<double>(b + 1), y);
    }
    out += fmt::format("<polyline fill=\"none\" stroke=\"#d62728\" points=\"{}\"/>\n", line);
    out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>\n", ox, oy, pw, ph);
    out += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", ox, oy - 5, escape(j < names.size() ? names[j] : "x"));
    out += fmt::format("<text x=\"{}\" y=\"{}\">{:.3g}</text><text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.3g}</text>\n",
                       ox, oy + ph + 13, r.lo, ox + pw, oy + ph + 13, r.hi);
  }
  return out + "</svg>\n";
}

std::string svg_pairs(const std::vector<std::string>& names, std::span<const double> values, std::size_t p,
                      std::size_t max_points) {
  const double cell = 110, gap = 8, margin = 40;
  const double W = margin + static_cast<double>(p) * (cell + gap);
  std::string out = header(W, W);
  const std::size_t count = values.size() / p;
  const std::size_t stride = std::max<std::size_t>(1, count / max_points);
  std::vector<Range> ranges;
  for (std::size_t j = 0; j < p; ++j) ranges.push_back(range_of(values, p, j));
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t b = 0; b < p; ++b) {
      const double ox = margin + static_cast<double>(b) * (cell + gap), oy = margin + static_cast<double>(a) * (cell + gap);
      out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>\n", ox, oy, cell, cell);
      if (a == b) {
        out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", ox + cell / 2, oy + cell / 2,
                           escape(a < names.size() ? names[a] : "x"));
        continue;
      }
      for (std::size_t s = 0; s < count; s += stride) {
        const double x = ox + (values[s * p + b] - ranges[b].lo) / ranges[b].span() * cell;
        const double y = oy + cell - (values[s * p + a] - ranges[a].lo) / ranges[a].span() * cell;
        out += fmt::format("<circle cx=\"{:.1f}\" cy=\"{:.1f}\" r=\"1\" fill=\"#1f77b4\" fill-opacity=\"0.4\"/>\n", x, y);
      }
    }
  }
  return out + "</svg>\n";
}

}  // namespace gibbs::app
