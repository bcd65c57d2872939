#pragma once

// Frozen-time (autonomous) layer: for fixed s the operator A(s) is the
// Fourier multiplier -a(s, xi); it generates T(tau) = exp(-tau a(s, .)) and
// has resolvent R(lambda, A(s)) = 1 / (lambda + a(s, .)).

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "evofam/errors.hpp"
#include "evofam/numerics.hpp"
#include "evofam/spectral.hpp"
#include "evofam/symbol.hpp"

namespace evofam {

class FrozenOperator {
 public:
  FrozenOperator(SymbolSpec spec, double s) : spec_(std::move(spec)), s_(s) {
    spec_.check_time(s);
    coeffs_ = spec_.coefficients_at(s);
  }

  const SymbolSpec& spec() const noexcept { return spec_; }
  double time() const noexcept { return s_; }

  /// a(s, xi)
  complex symbol(std::span<const double> xi) const { return spec_.combine(coeffs_, xi); }

  std::vector<complex> symbol_table(const Grid& grid) const {
    std::vector<complex> v(grid.size());
    for (std::size_t b = 0; b < v.size(); ++b) v[b] = symbol(grid.frequency(b));
    return v;
  }

 private:
  SymbolSpec spec_;
  double s_;
  std::vector<complex> coeffs_;
};

inline GridFunction frozen_semigroup(const FrozenOperator& op, double tau, const GridFunction& f) {
  if (!(tau >= 0.0)) throw DomainError("frozen_semigroup: tau must be >= 0");
  if (tau == 0.0) return f;
  auto m = op.symbol_table(f.grid());
  for (auto& v : m) v = std::exp(-tau * v);
  return apply_multiplier(m, f);
}

/// A(s) f
inline GridFunction apply_generator(const FrozenOperator& op, const GridFunction& f) {
  auto m = op.symbol_table(f.grid());
  for (auto& v : m) v = -v;
  return apply_multiplier(m, f);
}

inline GridFunction frozen_resolvent(const FrozenOperator& op, complex lambda, const GridFunction& f) {
  auto m = op.symbol_table(f.grid());
  for (std::size_t b = 0; b < m.size(); ++b) {
    const complex d = lambda + m[b];
    if (std::abs(d) < 1e-14) throw NumericError("frozen_resolvent: lambda + a(s, xi) vanishes", b);
    m[b] = 1.0 / d;
  }
  return apply_multiplier(m, f);
}

/// Bound on the truncated tail of the Laplace integral:
/// e^{-(Re lambda + omega) H} ||f|| / (Re lambda + omega), omega = min Re a.
inline double laplace_tail_bound(const FrozenOperator& op, complex lambda, const GridFunction& f, double horizon) {
  double omega = std::numeric_limits<double>::infinity();
  for (const auto& v : op.symbol_table(f.grid())) omega = std::min(omega, v.real());
  const double rate = lambda.real() + omega;
  return std::exp(-rate * horizon) * l2_norm(f) / rate;
}

/// Bin-wise Gauss-Legendre value of int_0^H e^{-(lambda + a(s, xi)) tau} d tau.
inline std::vector<complex> laplace_quadrature_multiplier(const FrozenOperator& op, complex lambda, const Grid& grid,
                                                          double horizon, int panels, int nodes_per_panel = 16) {
  if (!(horizon > 0.0)) throw DomainError("laplace_transform_check: horizon must be > 0");
  const auto sym = op.symbol_table(grid);
  double omega = std::numeric_limits<double>::infinity();
  for (const auto& v : sym) omega = std::min(omega, v.real());
  if (!(lambda.real() > -omega)) throw DomainError("laplace_transform_check: need Re lambda > -omega");
  std::vector<complex> m(sym.size());
  for (const auto& node : composite_gauss(0.0, horizon, panels, nodes_per_panel))
    for (std::size_t b = 0; b < m.size(); ++b) m[b] += node.w * std::exp(-(lambda + sym[b]) * node.x);
  return m;
}

/// || Q f - R(lambda, A(s)) f ||_{L^2} for a precomputed quadrature multiplier Q.
inline double laplace_transform_residual(const FrozenOperator& op, complex lambda, std::span<const complex> quadrature,
                                         const GridFunction& f) {
  const auto ff = f.as_frequency();
  auto acc = apply_multiplier(quadrature, ff);
  acc -= frozen_resolvent(op, lambda, ff);
  return l2_norm(acc);
}

/// || int_0^H e^{-lambda tau} T(tau) f d tau - R(lambda, A(s)) f ||_{L^2},
/// the integral by composite Gauss-Legendre over equal panels.
inline double laplace_transform_check(const FrozenOperator& op, complex lambda, const GridFunction& f,
                                      double horizon, int panels, int nodes_per_panel = 16) {
  const auto q = laplace_quadrature_multiplier(op, lambda, f.grid(), horizon, panels, nodes_per_panel);
  return laplace_transform_residual(op, lambda, q, f);
}

/// || (T(h) f - f) / h - A(s) f ||_{L^2}
inline double generator_difference_quotient(const FrozenOperator& op, const GridFunction& f, double h) {
  if (!(h > 0.0)) throw DomainError("generator_difference_quotient: h must be > 0");
  const auto ff = f.as_frequency();
  auto q = frozen_semigroup(op, h, ff) - ff;
  q *= 1.0 / h;
  q -= apply_generator(op, ff);
  return l2_norm(q);
}

enum class FavardSpace { f1, f0 };

struct FavardEstimate {
  double value = 0.0;
  double argmax_t = 0.0;
  std::vector<double> samples;
  FavardSpace space = FavardSpace::f1;
};

/// 2^-40, 2^-39, ..., 1 by default.
inline std::vector<double> geometric_samples(double finest = std::ldexp(1.0, -40), double coarsest = 1.0,
                                             double ratio = 2.0) {
  if (!(finest > 0.0) || !(coarsest >= finest) || !(ratio > 1.0)) throw ConfigError("geometric_samples: bad range");
  std::vector<double> out;
  for (double t = finest; t <= coarsest * (1.0 + 1e-12); t *= ratio) out.push_back(t);
  return out;
}

/// sup over the samples of (1/t) ||T(t) f - f|| in L^2 (F1) or in the
/// extrapolation norm (F0). The F0 gauge defaults to the frozen operator
/// itself; pass gauge_time to measure in X_{-1}(A(gauge_time)) instead.
/// T(t) f - f is formed as the multiplier expm1(-t a).
inline FavardEstimate favard_norm(const FrozenOperator& op, const GridFunction& f, FavardSpace space,
                                  std::span<const double> t_samples, std::optional<double> gauge_time = {}) {
  if (t_samples.empty()) throw ConfigError("favard_norm: empty sample set");
  FavardEstimate est;
  est.space = space;
  est.samples.assign(t_samples.begin(), t_samples.end());
  const auto sym = op.symbol_table(f.grid());
  std::vector<complex> gauge(sym.size(), 1.0);
  if (space == FavardSpace::f0)
    gauge = inverse_symbol_table(op.spec(), gauge_time.value_or(op.time()), f.grid());
  const auto ff = f.as_frequency();
  std::vector<complex> m(sym.size());
  for (double t : t_samples) {
    if (!(t > 0.0)) throw DomainError("favard_norm: samples must be > 0");
    for (std::size_t b = 0; b < m.size(); ++b) {
      const complex z = -t * sym[b];
      // expm1 for complex arguments
      const complex e = std::abs(z) < 1e-5 ? z * (1.0 + z * (0.5 + z / 6.0))
                                           : std::exp(z) - 1.0;
      m[b] = gauge[b] * e / t;
    }
    const double q = l2_norm(apply_multiplier(m, ff));
    if (q > est.value) {
      est.value = q;
      est.argmax_t = t;
    }
  }
  return est;
}

}  // namespace evofam
