#pragma once

// Time-dependent constant-coefficient polynomial symbols
//   a(t, xi) = sum_{|alpha| <= m} a_alpha(t) (i xi)^alpha
// and the certification of uniform strong ellipticity.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "evofam/errors.hpp"
#include "evofam/grid.hpp"

namespace evofam {

using complex = std::complex<double>;
using MultiIndex = std::vector<int>;

struct PolyTerm {
  int degree;
  complex coeff;
};

struct TrigTerm {
  double omega;
  complex cos_coeff;
  complex sin_coeff;
};

/// c * H(t - at), with H(0) = 1. Not Lipschitz; lets configs express the
/// discontinuous-coefficient counterexamples.
struct StepTerm {
  double at;
  complex jump;
};

/// c0 + sum c_k t^k + sum (p_j cos(w_j t) + q_j sin(w_j t)) + sum c_i H(t - t_i)
class CoefficientFunction {
 public:
  CoefficientFunction() = default;
  CoefficientFunction(complex constant, std::vector<PolyTerm> poly = {},
                      std::vector<TrigTerm> trig = {}, std::vector<StepTerm> steps = {})
      : constant_(constant), poly_(std::move(poly)), trig_(std::move(trig)), steps_(std::move(steps)) {
    for (const auto& p : poly_)
      if (p.degree < 1) throw ConfigError("coefficient: polynomial degree must be >= 1");
    for (const auto& tr : trig_)
      if (!(tr.omega > 0.0)) throw ConfigError("coefficient: trigonometric frequency must be > 0");
  }

  complex operator()(double t) const {
    complex v = constant_;
    for (const auto& p : poly_) v += p.coeff * std::pow(t, p.degree);
    for (const auto& tr : trig_) v += tr.cos_coeff * std::cos(tr.omega * t) + tr.sin_coeff * std::sin(tr.omega * t);
    for (const auto& st : steps_)
      if (t >= st.at) v += st.jump;
    return v;
  }

  /// Classical derivative (steps contribute nothing away from their jump).
  complex derivative(double t) const {
    complex v = 0.0;
    for (const auto& p : poly_) v += p.coeff * static_cast<double>(p.degree) * std::pow(t, p.degree - 1);
    for (const auto& tr : trig_)
      v += tr.omega * (-tr.cos_coeff * std::sin(tr.omega * t) + tr.sin_coeff * std::cos(tr.omega * t));
    return v;
  }

  /// Integral from 0 to t.
  complex antiderivative(double t) const {
    complex v = constant_ * t;
    for (const auto& p : poly_) v += p.coeff * std::pow(t, p.degree + 1) / static_cast<double>(p.degree + 1);
    for (const auto& tr : trig_)
      v += (tr.cos_coeff * std::sin(tr.omega * t) + tr.sin_coeff * (1.0 - std::cos(tr.omega * t))) / tr.omega;
    for (const auto& st : steps_) v += st.jump * std::max(0.0, t - st.at);
    return v;
  }

  /// Upper bound for the Lipschitz constant on [0, horizon]; +inf when a
  /// step with nonzero jump lies in [0, horizon].
  double lipschitz_bound(double horizon) const {
    for (const auto& st : steps_)
      if (std::abs(st.jump) > 0.0 && st.at > 0.0 && st.at <= horizon)
        return std::numeric_limits<double>::infinity();
    double b = 0.0;
    for (const auto& p : poly_) b += std::abs(p.coeff) * p.degree * std::pow(horizon, p.degree - 1);
    for (const auto& tr : trig_) b += tr.omega * (std::abs(tr.cos_coeff) + std::abs(tr.sin_coeff));
    return b;
  }

  bool is_constant() const {
    auto zero = [](complex c) { return c == complex{}; };
    return std::all_of(poly_.begin(), poly_.end(), [&](const PolyTerm& p) { return zero(p.coeff); }) &&
           std::all_of(trig_.begin(), trig_.end(),
                       [&](const TrigTerm& t) { return zero(t.cos_coeff) && zero(t.sin_coeff); }) &&
           std::all_of(steps_.begin(), steps_.end(), [&](const StepTerm& s) { return zero(s.jump); });
  }

  bool has_real_values() const {
    auto real = [](complex c) { return c.imag() == 0.0; };
    return real(constant_) &&
           std::all_of(poly_.begin(), poly_.end(), [&](const PolyTerm& p) { return real(p.coeff); }) &&
           std::all_of(trig_.begin(), trig_.end(),
                       [&](const TrigTerm& t) { return real(t.cos_coeff) && real(t.sin_coeff); }) &&
           std::all_of(steps_.begin(), steps_.end(), [&](const StepTerm& s) { return real(s.jump); });
  }

  complex constant() const noexcept { return constant_; }
  const std::vector<PolyTerm>& poly() const noexcept { return poly_; }
  const std::vector<TrigTerm>& trig() const noexcept { return trig_; }
  const std::vector<StepTerm>& steps() const noexcept { return steps_; }

 private:
  complex constant_{};
  std::vector<PolyTerm> poly_;
  std::vector<TrigTerm> trig_;
  std::vector<StepTerm> steps_;
};

struct SymbolTerm {
  MultiIndex alpha;
  CoefficientFunction coeff;
};

inline int degree(const MultiIndex& alpha) {
  int s = 0;
  for (int a : alpha) s += a;
  return s;
}

/// (i xi)^alpha = prod_j (i xi_j)^{alpha_j}
inline complex monomial(const MultiIndex& alpha, std::span<const double> xi) {
  static constexpr complex ipow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  double mag = 1.0;
  int total = 0;
  for (std::size_t j = 0; j < alpha.size(); ++j) {
    mag *= std::pow(xi[j], alpha[j]);
    total += alpha[j];
  }
  return ipow[total % 4] * mag;
}

class SymbolSpec {
 public:
  SymbolSpec(int dim, int order, double horizon, std::vector<SymbolTerm> terms)
      : dim_(dim), order_(order), horizon_(horizon), terms_(std::move(terms)) {
    if (dim < 1) throw ConfigError("symbol: dim must be >= 1");
    if (order < 1) throw ConfigError("symbol: order must be >= 1");
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigError("symbol: horizon must be positive");
    if (terms_.empty()) throw ConfigError("symbol: no coefficients");
    bool principal = false;
    for (const auto& term : terms_) {
      if (static_cast<int>(term.alpha.size()) != dim) throw ConfigError("symbol: multi-index length != dim");
      for (int a : term.alpha)
        if (a < 0) throw ConfigError("symbol: negative multi-index entry");
      const int deg = degree(term.alpha);
      if (deg > order) throw ConfigError("symbol: multi-index exceeds order");
      principal = principal || deg == order;
    }
    if (!principal) throw ConfigError("symbol: no principal (|alpha| = order) coefficient");
  }

  int dim() const noexcept { return dim_; }
  int order() const noexcept { return order_; }
  double horizon() const noexcept { return horizon_; }
  const std::vector<SymbolTerm>& terms() const noexcept { return terms_; }

  void check_time(double t) const {
    if (!(t >= 0.0 && t <= horizon_)) throw DomainError("symbol: time outside [0, T]");
  }

  std::vector<complex> coefficients_at(double t) const {
    check_time(t);
    std::vector<complex> c;
    c.reserve(terms_.size());
    for (const auto& term : terms_) c.push_back(term.coeff(t));
    return c;
  }

  /// Per-term integrals of the coefficients over [s, t].
  std::vector<complex> integrated_coefficients(double s, double t) const {
    check_time(s);
    check_time(t);
    std::vector<complex> c;
    c.reserve(terms_.size());
    for (const auto& term : terms_) c.push_back(term.coeff.antiderivative(t) - term.coeff.antiderivative(s));
    return c;
  }

  /// sum_k coeffs[k] (i xi)^alpha_k, optionally restricted to |alpha| = m.
  complex combine(std::span<const complex> coeffs, std::span<const double> xi, bool principal_only = false) const {
    complex v = 0.0;
    for (std::size_t k = 0; k < terms_.size(); ++k) {
      if (principal_only && degree(terms_[k].alpha) != order_) continue;
      v += coeffs[k] * monomial(terms_[k].alpha, xi);
    }
    return v;
  }

  complex eval(double t, std::span<const double> xi) const {
    check_xi(xi);
    const auto c = coefficients_at(t);
    return combine(c, xi);
  }

  complex eval_principal(double t, std::span<const double> xi) const {
    check_xi(xi);
    const auto c = coefficients_at(t);
    return combine(c, xi, true);
  }

  bool is_autonomous() const {
    return std::all_of(terms_.begin(), terms_.end(), [](const SymbolTerm& t) { return t.coeff.is_constant(); });
  }

  bool has_real_coefficients() const {
    return std::all_of(terms_.begin(), terms_.end(), [](const SymbolTerm& t) { return t.coeff.has_real_values(); });
  }

  /// Times at which some coefficient jumps.
  std::vector<double> discontinuities() const {
    std::vector<double> out;
    for (const auto& term : terms_)
      for (const auto& st : term.coeff.steps())
        if (st.at > 0.0 && st.at <= horizon_ && std::abs(st.jump) > 0.0) out.push_back(st.at);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

 private:
  void check_xi(std::span<const double> xi) const {
    if (static_cast<int>(xi.size()) != dim_) throw DomainError("symbol: frequency dimension mismatch");
  }

  int dim_;
  int order_;
  double horizon_;
  std::vector<SymbolTerm> terms_;
};

/// Per-alpha Lipschitz bounds of the coefficient functions on [0, T].
inline std::map<MultiIndex, double> coefficient_lipschitz(const SymbolSpec& spec) {
  std::map<MultiIndex, double> out;
  for (const auto& term : spec.terms()) out[term.alpha] += term.coeff.lipschitz_bound(spec.horizon());
  return out;
}

/// A symbol tabulated against the bins of one grid: monomials are computed
/// once, so evaluating a(t, .) over the whole grid costs one complex
/// multiply-add per term and bin.
class SymbolOnGrid {
 public:
  SymbolOnGrid(const SymbolSpec& spec, const Grid& grid) : spec_(spec), size_(grid.size()) {
    if (grid.dim() != spec.dim()) throw ConfigError("symbol/grid dimension mismatch");
    monomials_.resize(spec.terms().size() * size_);
    for (std::size_t k = 0; k < spec.terms().size(); ++k)
      for (std::size_t b = 0; b < size_; ++b)
        monomials_[k * size_ + b] = monomial(spec.terms()[k].alpha, grid.frequency(b));
  }

  const SymbolSpec& spec() const noexcept { return spec_; }
  std::size_t size() const noexcept { return size_; }

  std::vector<complex> combine(std::span<const complex> coeffs, bool principal_only = false) const {
    std::vector<complex> v(size_, complex{});
    for (std::size_t k = 0; k < coeffs.size(); ++k) {
      if (principal_only && degree(spec_.terms()[k].alpha) != spec_.order()) continue;
      const complex c = coeffs[k];
      if (c == complex{}) continue;
      const complex* m = monomials_.data() + k * size_;
      for (std::size_t b = 0; b < size_; ++b) v[b] += c * m[b];
    }
    return v;
  }

  /// a(t, xi_b) for every bin b.
  std::vector<complex> values(double t) const { return combine(spec_.coefficients_at(t)); }
  std::vector<complex> principal(double t) const { return combine(spec_.coefficients_at(t), true); }
  /// int_s^t a(tau, xi_b) d tau from the closed-form antiderivatives.
  std::vector<complex> integrated(double s, double t) const {
    return combine(spec_.integrated_coefficients(s, t));
  }

 private:
  SymbolSpec spec_;
  std::size_t size_;
  std::vector<complex> monomials_;
};

/// Points on the unit sphere of R^d: {-1, +1} for d = 1, equally spaced
/// angles for d = 2, seeded normalized Gaussians above.
inline std::vector<std::vector<double>> unit_sphere_samples(int dim, int count) {
  std::vector<std::vector<double>> out;
  if (dim == 1) return {{-1.0}, {1.0}};
  if (dim == 2) {
    for (int j = 0; j < count; ++j) {
      const double phi = 2.0 * std::numbers::pi * j / count;
      out.push_back({std::cos(phi), std::sin(phi)});
    }
    return out;
  }
  std::mt19937_64 rng(0x5eedULL);
  std::normal_distribution<double> g;
  for (int j = 0; j < count; ++j) {
    std::vector<double> v(dim);
    double r = 0.0;
    for (auto& x : v) {
      x = g(rng);
      r += x * x;
    }
    r = std::sqrt(r);
    for (auto& x : v) x /= r;
    out.push_back(std::move(v));
  }
  return out;
}

struct EllipticityPlan {
  int time_samples = 512;
  int sphere_samples = 64;
};

struct EllipticityReport {
  double c = 0.0;       // min Re a_m(t, xi) over |xi| = 1
  double omega = 0.0;   // min Re a(t, xi) over the grid plus xi = 0
  /// c minus the worst drift of Re a_m between neighbouring time samples.
  double c_guaranteed = 0.0;
  bool pass = false;
  double witness_t = 0.0;
  std::vector<double> witness_xi;
  double omega_witness_t = 0.0;
  std::vector<double> omega_witness_xi;
  std::size_t samples = 0;
};

inline std::vector<double> uniform_times(double horizon, int count) {
  if (count < 1) throw ConfigError("time sample plan is empty");
  if (count == 1) return {0.0};
  std::vector<double> ts(count);
  for (int j = 0; j < count; ++j) ts[j] = horizon * j / (count - 1);
  ts.back() = horizon;
  return ts;
}

inline EllipticityReport certify_ellipticity(const SymbolSpec& spec, const Grid& grid,
                                             const EllipticityPlan& plan = {}) {
  if (plan.time_samples < 1 || plan.sphere_samples < 1) throw ConfigError("ellipticity: empty sample set");
  const auto times = uniform_times(spec.horizon(), plan.time_samples);
  const auto sphere = unit_sphere_samples(spec.dim(), plan.sphere_samples);
  const SymbolOnGrid table(spec, grid);
  const std::vector<double> origin(spec.dim(), 0.0);

  EllipticityReport r;
  r.c = std::numeric_limits<double>::infinity();
  r.omega = std::numeric_limits<double>::infinity();
  for (double t : times) {
    const auto coeffs = spec.coefficients_at(t);
    for (const auto& xi : sphere) {
      const double v = spec.combine(coeffs, xi, true).real();
      if (v < r.c) {
        r.c = v;
        r.witness_t = t;
        r.witness_xi = xi;
      }
    }
    const auto vals = table.combine(coeffs);
    for (std::size_t b = 0; b < vals.size(); ++b) {
      if (vals[b].real() < r.omega) {
        r.omega = vals[b].real();
        r.omega_witness_t = t;
        r.omega_witness_xi.assign(grid.frequency(b).begin(), grid.frequency(b).end());
      }
    }
    const double v0 = spec.combine(coeffs, origin).real();
    if (v0 < r.omega) {
      r.omega = v0;
      r.omega_witness_t = t;
      r.omega_witness_xi = origin;
    }
    r.samples += sphere.size() + vals.size() + 1;
  }
  double drift = 0.0;
  const double dt = times.size() > 1 ? times[1] - times[0] : spec.horizon();
  for (const auto& [alpha, lip] : coefficient_lipschitz(spec))
    if (degree(alpha) == spec.order()) drift += lip;
  r.c_guaranteed = r.c - 0.5 * dt * drift;
  r.pass = r.c > 0.0 && r.omega > 0.0;
  return r;
}

}  // namespace evofam
