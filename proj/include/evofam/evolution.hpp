#pragma once

// Evolution families U(t, s) of the multiplier family A(t) = -a(t, .):
//   exact:   U(t, s) = exp(-int_s^t a(tau, .) d tau)   (closed-form antiderivative)
//   product: U_n(t, s) = prod_{j=n..1} exp(-dt a(tau_j, .))  (left endpoint or midpoint)
// The extrapolated family U_{-1}(t, s) acts by the same multiplier; only the
// norm in which it is measured changes.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "evofam/errors.hpp"
#include "evofam/numerics.hpp"
#include "evofam/spectral.hpp"
#include "evofam/symbol.hpp"

namespace evofam {

struct ExactQuadrature {
  int nodes_per_panel = 16;
  double panel_width = 0.25;
};

enum class ProductRule { left_endpoint, midpoint };

struct ProductFormula {
  int steps = 64;
  ProductRule rule = ProductRule::left_endpoint;
};

using PropagatorMethod = std::variant<ExactQuadrature, ProductFormula>;

class PropagatorEngine {
 public:
  explicit PropagatorEngine(SymbolSpec spec, PropagatorMethod method = ExactQuadrature{})
      : spec_(std::move(spec)), method_(method) {
    if (const auto* q = std::get_if<ExactQuadrature>(&method_)) {
      if (!(q->panel_width > 0.0)) throw ConfigError("propagator: panel width must be > 0");
      gauss_legendre(q->nodes_per_panel);  // validates the node count
      self_check_error_ = self_check();
      if (!(self_check_error_ <= 1e-12))
        throw NumericError("propagator: closed-form exponent disagrees with quadrature by " +
                           std::to_string(self_check_error_));
    } else {
      const auto& p = std::get<ProductFormula>(method_);
      if (p.steps < 1) throw ConfigError("propagator: product formula needs >= 1 step");
    }
  }

  const SymbolSpec& spec() const noexcept { return spec_; }
  const PropagatorMethod& method() const noexcept { return method_; }
  bool is_exact() const noexcept { return std::holds_alternative<ExactQuadrature>(method_); }
  /// Max relative mismatch between closed-form and quadrature coefficient integrals.
  double self_check_error() const noexcept { return self_check_error_; }

  void check_triangle(double s, double t) const {
    spec_.check_time(s);
    spec_.check_time(t);
    if (t < s) throw DomainError("propagator: need s <= t");
  }

  /// Per-term integrals of the coefficients over [s, t] by composite Gauss-Legendre,
  /// panels split at coefficient jumps.
  std::vector<complex> quadrature_coefficients(double s, double t) const {
    const auto& q = std::holds_alternative<ExactQuadrature>(method_) ? std::get<ExactQuadrature>(method_)
                                                                     : ExactQuadrature{};
    std::vector<double> cuts{s};
    for (double d : spec_.discontinuities())
      if (d > s && d < t) cuts.push_back(d);
    cuts.push_back(t);
    std::vector<complex> out(spec_.terms().size());
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
      const double a = cuts[c], b = cuts[c + 1];
      const int panels = std::max(1, static_cast<int>(std::ceil((b - a) / q.panel_width)));
      for (const auto& node : composite_gauss(a, b, panels, q.nodes_per_panel))
        for (std::size_t k = 0; k < out.size(); ++k) out[k] += node.w * spec_.terms()[k].coeff(node.x);
    }
    return out;
  }

  /// Multiplier symbol of U(t, s) on every bin of the grid.
  std::vector<complex> multiplier(const Grid& grid, double s, double t) const {
    check_triangle(s, t);
    const SymbolOnGrid table(spec_, grid);
    if (is_exact()) {
      auto e = table.integrated(s, t);
      for (auto& v : e) v = std::exp(-v);
      return e;
    }
    const auto& p = std::get<ProductFormula>(method_);
    std::vector<complex> m(grid.size(), 1.0);
    if (t == s) return m;
    const double dt = (t - s) / p.steps;
    for (int j = 0; j < p.steps; ++j) {
      const double tau = p.rule == ProductRule::left_endpoint ? s + j * dt : s + (j + 0.5) * dt;
      const auto a = table.values(std::min(tau, t));
      for (std::size_t b = 0; b < m.size(); ++b) m[b] *= std::exp(-dt * a[b]);
    }
    return m;
  }

  GridFunction propagate(double s, double t, const GridFunction& f) const {
    if (t == s) {
      check_triangle(s, t);
      return f;
    }
    return apply_multiplier(multiplier(f.grid(), s, t), f);
  }

 private:
  double self_check() const {
    const double T = spec_.horizon();
    double worst = 0.0;
    for (const auto& [s, t] : {std::pair{0.0, T}, std::pair{T / 3, 2 * T / 3}, std::pair{0.1 * T, 0.95 * T}}) {
      const auto closed = spec_.integrated_coefficients(s, t);
      const auto quad = quadrature_coefficients(s, t);
      for (std::size_t k = 0; k < closed.size(); ++k)
        worst = std::max(worst, std::abs(closed[k] - quad[k]) / std::max(1.0, std::abs(closed[k])));
    }
    return worst;
  }

  SymbolSpec spec_;
  PropagatorMethod method_;
  double self_check_error_ = 0.0;
};

inline GridFunction propagate(const PropagatorEngine& engine, double s, double t, const GridFunction& f) {
  return engine.propagate(s, t, f);
}

/// ||U(t, s) U(s, r) f - U(t, r) f|| / ||f||, 0 for f = 0.
inline double cocycle_defect(const PropagatorEngine& engine, double r, double s, double t, const GridFunction& f) {
  if (!(r <= s && s <= t)) throw DomainError("cocycle_defect: need r <= s <= t");
  const double nf = l2_norm(f);
  if (nf == 0.0) return 0.0;
  const auto ff = f.as_frequency();
  const auto lhs = engine.propagate(s, t, engine.propagate(r, s, ff));
  return l2_norm(lhs - engine.propagate(r, t, ff)) / nf;
}

enum class Derivative { dt, ds };

/// h = max(1e-4, 1e-3 (t - s))
inline double default_derivative_step(double s, double t) { return std::max(1e-4, 1e-3 * (t - s)); }

/// Central-difference defect of d/dt U(t, s) f = A(t) U(t, s) f (dt) or
/// d/ds U(t, s) f = -U(t, s) A(s) f (ds), with A(t) the multiplier -a(t, .).
inline double derivative_defect(const PropagatorEngine& engine, double s, double t, const GridFunction& f, double h,
                                Derivative which) {
  if (!(h > 0.0)) throw DomainError("derivative_defect: h must be > 0");
  const double T = engine.spec().horizon();
  const auto ff = f.as_frequency();
  const SymbolOnGrid table(engine.spec(), f.grid());
  if (which == Derivative::dt) {
    if (t - h < s || t + h > T) throw DomainError("derivative_defect: stencil leaves the time triangle");
    auto q = engine.propagate(s, t + h, ff) - engine.propagate(s, t - h, ff);
    q *= 1.0 / (2.0 * h);
    auto a = table.values(t);
    for (auto& v : a) v = -v;
    q -= apply_multiplier(a, engine.propagate(s, t, ff));
    return l2_norm(q);
  }
  if (s - h < 0.0 || s + h > t) throw DomainError("derivative_defect: stencil leaves the time triangle");
  auto q = engine.propagate(s + h, t, ff) - engine.propagate(s - h, t, ff);
  q *= 1.0 / (2.0 * h);
  auto a = table.values(s);
  for (auto& v : a) v = -v;
  q += engine.propagate(s, t, apply_multiplier(a, ff));
  return l2_norm(q);
}

struct GrowthReport {
  double M = 1.0;
  double omega = 0.0;
  /// max over samples of ||U(t, s)|| / (M e^{omega (t - s)})
  double worst_ratio = 0.0;
  std::vector<double> norms;
  bool pass = false;
  double witness_s = 0.0;
  double witness_t = 0.0;
};

/// ||U(t, s)|| = max_xi |multiplier| checked against M e^{omega (t - s)}.
inline GrowthReport growth_bound(const PropagatorEngine& engine, const Grid& grid,
                                 std::span<const std::pair<double, double>> samples, double M, double omega) {
  GrowthReport r;
  r.M = M;
  r.omega = omega;
  for (const auto& [s, t] : samples) {
    const double n = multiplier_operator_norm(engine.multiplier(grid, s, t));
    r.norms.push_back(n);
    const double ratio = n / (M * std::exp(omega * (t - s)));
    if (ratio > r.worst_ratio) {
      r.worst_ratio = ratio;
      r.witness_s = s;
      r.witness_t = t;
    }
  }
  r.pass = r.worst_ratio <= 1.0 + 1e-12;
  return r;
}

enum class Gauge { x, x_minus1 };

struct ExtrapolatedResult {
  GridFunction value;
  double norm = 0.0;                 // in the requested gauge
  double restriction_defect = 0.0;   // max bin-wise |U_{-1}(t,s) f - U(t,s) f|
};

/// U_{-1}(t, s) f. The X_{-1} gauge is X_{-1}(A(gauge_time)), default A(0).
inline ExtrapolatedResult extrapolated_propagate(const PropagatorEngine& engine, double s, double t,
                                                 const GridFunction& f, Gauge gauge, double gauge_time = 0.0) {
  const auto x_level = engine.propagate(s, t, f.as_frequency());
  auto extrapolated = engine.propagate(s, t, f.as_frequency());
  double defect = 0.0;
  for (std::size_t b = 0; b < x_level.size(); ++b)
    defect = std::max(defect, std::abs(x_level.values()[b] - extrapolated.values()[b]));
  const double n = gauge == Gauge::x ? l2_norm(extrapolated)
                                     : norm(extrapolated, ExtrapolatedNorm{engine.spec(), gauge_time});
  return {std::move(extrapolated), n, defect};
}

/// ||U(t, s)|| in the X gauge and ||U_{-1}(t, s)|| in the X_{-1}(A(0)) gauge.
/// The diagonal gauge cancels, so both are max_xi |multiplier|.
inline std::pair<double, double> extrapolated_operator_norms(const PropagatorEngine& engine, const Grid& grid,
                                                              double s, double t) {
  const auto m = engine.multiplier(grid, s, t);
  const auto gauge = inverse_symbol_table(engine.spec(), 0.0, grid);
  // conjugate the multiplier by the gauge: A(0)^{-1} U A(0), bin-wise identical
  std::vector<complex> conj(m.size());
  for (std::size_t b = 0; b < m.size(); ++b) conj[b] = gauge[b] * m[b] / gauge[b];
  return {multiplier_operator_norm(m, OperatorSpace::l2), multiplier_operator_norm(conj, OperatorSpace::extrapolated)};
}

}  // namespace evofam
