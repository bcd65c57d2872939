#pragma once

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "evofam/errors.hpp"

namespace evofam {

/// Nodes and weights on [-1, 1].
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

namespace detail {

template <unsigned N>
QuadratureRule expand_gauss() {
  using G = boost::math::quadrature::gauss<double, N>;
  QuadratureRule r;
  const auto& x = G::abscissa();
  const auto& w = G::weights();
  for (std::size_t i = x.size(); i-- > 0;) {
    if (x[i] == 0.0) continue;
    r.nodes.push_back(-x[i]);
    r.weights.push_back(w[i]);
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    r.nodes.push_back(x[i]);
    r.weights.push_back(w[i]);
  }
  return r;
}

}  // namespace detail

/// Gauss-Legendre rule with n in {4, 5, 7, 8, 10, 15, 16, 20, 25, 30}.
inline QuadratureRule gauss_legendre(int n) {
  switch (n) {
    case 4: return detail::expand_gauss<4>();
    case 5: return detail::expand_gauss<5>();
    case 7: return detail::expand_gauss<7>();
    case 8: return detail::expand_gauss<8>();
    case 10: return detail::expand_gauss<10>();
    case 15: return detail::expand_gauss<15>();
    case 16: return detail::expand_gauss<16>();
    case 20: return detail::expand_gauss<20>();
    case 25: return detail::expand_gauss<25>();
    case 30: return detail::expand_gauss<30>();
    default: throw ConfigError("gauss_legendre: unsupported node count " + std::to_string(n));
  }
}

/// Composite rule on [a, b] with equal panels; returns (node, weight) pairs.
struct CompositeNode {
  double x;
  double w;
};

inline std::vector<CompositeNode> composite_gauss(double a, double b, int panels, int nodes_per_panel) {
  if (panels < 1) throw ConfigError("composite quadrature: panels must be >= 1");
  const auto rule = gauss_legendre(nodes_per_panel);
  std::vector<CompositeNode> out;
  out.reserve(static_cast<std::size_t>(panels) * rule.nodes.size());
  const double width = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * width;
    const double mid = lo + 0.5 * width;
    for (std::size_t q = 0; q < rule.nodes.size(); ++q)
      out.push_back({mid + 0.5 * width * rule.nodes[q], 0.5 * width * rule.weights[q]});
  }
  return out;
}

/// Least-squares line through (log x, log y).
struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // RMS of the log residuals
  std::size_t points = 0;
};

inline LogLogFit fit_loglog(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ConfigError("fit_loglog: need >= 2 matched points");
  const std::size_t n = x.size();
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw NumericError("fit_loglog: non-positive sample", i);
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  LogLogFit f;
  f.points = n;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ly[i] - (f.intercept + f.slope * lx[i]);
    rss += r * r;
  }
  f.residual = std::sqrt(rss / n);
  return f;
}

/// log(e_coarse / e_fine) / log(refinement)
inline double observed_order(double e_coarse, double e_fine, double refinement = 2.0) {
  return std::log(e_coarse / e_fine) / std::log(refinement);
}

/// 10^(lo + j*step) for j = 0..; step = 1/per_decade. Doubling per_decade
/// yields a superset of the samples.
inline std::vector<double> log_spaced(double lo, double hi, int per_decade) {
  if (!(lo > 0.0) || !(hi >= lo) || per_decade < 1) throw ConfigError("log_spaced: bad range");
  std::vector<double> out;
  const double a = std::log10(lo), b = std::log10(hi);
  const int count = static_cast<int>(std::floor((b - a) * per_decade + 1e-9));
  for (int j = 0; j <= count; ++j) out.push_back(std::pow(10.0, a + static_cast<double>(j) / per_decade));
  return out;
}

/// FNV-1a 64-bit, used for config fingerprints in reports.
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace evofam
