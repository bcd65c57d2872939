#pragma once

#include <cmath>
#include <memory>
#include <numbers>
#include <span>
#include <vector>

#include "evofam/spectral.hpp"
#include "evofam/symbol.hpp"

namespace fixtures {

using evofam::CoefficientFunction;
using evofam::SymbolSpec;
using evofam::SymbolTerm;

inline constexpr double pi = std::numbers::pi;

/// a(t, xi) = (2 + sin t) xi^2 + 1 on [0, 2 pi]
inline SymbolSpec td1() {
  return SymbolSpec(1, 2, 2 * pi,
                    {SymbolTerm{{2}, CoefficientFunction(-2.0, {}, {{1.0, 0.0, -1.0}})},
                     SymbolTerm{{0}, CoefficientFunction(1.0)}});
}

/// a(xi) = 1 + |xi|^2
inline SymbolSpec h1(int dim = 1, double horizon = 1.0) {
  std::vector<SymbolTerm> terms;
  for (int j = 0; j < dim; ++j) {
    std::vector<int> alpha(dim, 0);
    alpha[j] = 2;
    terms.push_back({alpha, CoefficientFunction(-1.0)});
  }
  terms.push_back({std::vector<int>(dim, 0), CoefficientFunction(1.0)});
  return SymbolSpec(dim, 2, horizon, std::move(terms));
}

/// a(xi) = i xi
inline SymbolSpec nonelliptic() { return SymbolSpec(1, 1, 1.0, {SymbolTerm{{1}, CoefficientFunction(1.0)}}); }

/// a(t, xi) = (2 + H(t - pi)) xi^2 + 1
inline SymbolSpec jump() {
  return SymbolSpec(1, 2, 2 * pi,
                    {SymbolTerm{{2}, CoefficientFunction(-2.0, {}, {}, {{pi, -1.0}})},
                     SymbolTerm{{0}, CoefficientFunction(1.0)}});
}

inline std::shared_ptr<const evofam::Grid> grid(int n = 1024, double box = 2 * pi, int dim = 1) {
  return std::make_shared<const evofam::Grid>(dim, n, box);
}

}  // namespace fixtures

namespace fixtures {

/// exp(i k x) on a one-dimensional grid, scaled to unit L^2 norm.
inline evofam::GridFunction mode(const std::shared_ptr<const evofam::Grid>& g, int k) {
  const double scale = 1.0 / std::sqrt(g->volume());
  return evofam::GridFunction::from_physical(g, [&](std::span<const double> x) {
    return scale * std::exp(evofam::complex(0.0, k * 2 * pi / g->box() * x[0]));
  });
}

inline double max_abs_diff(const evofam::GridFunction& a, const evofam::GridFunction& b) {
  const auto pa = a.as_physical(), pb = b.as_physical();
  double m = 0.0;
  for (std::size_t j = 0; j < pa.size(); ++j) m = std::max(m, std::abs(pa.values()[j] - pb.values()[j]));
  return m;
}

}  // namespace fixtures
