#pragma once

// Perturbation families B(t), their regularity measurements, and the
// variation-of-constants solver
//   V(t, s) x = U(t, s) x + int_s^t U_{-1}(t, sigma) B(sigma) V(sigma, s) x d sigma.

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "evofam/assumptions.hpp"
#include "evofam/errors.hpp"
#include "evofam/evolution.hpp"
#include "evofam/numerics.hpp"
#include "evofam/spectral.hpp"
#include "evofam/symbol.hpp"

namespace evofam {

struct ZeroFamily {};
struct IdentityFamily {};

/// B(0) f = f, B(t) f = (2t)^{-d} 1_{(-t,t)^d} * f, i.e. the multiplier
/// prod_j sin(t xi_j) / (t xi_j).
struct Mollifier {};

/// p(|xi|^2) / q(|xi|^2); coefficients in ascending powers.
struct RationalProfile {
  std::vector<double> numerator = {1.0};
  std::vector<double> denominator = {1.0};

  double operator()(double r2) const {
    auto horner = [r2](const std::vector<double>& c) {
      double v = 0.0;
      for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * r2 + *it;
      return v;
    };
    return horner(numerator) / horner(denominator);
  }
};

/// m_B(t, xi) = scale(t) * profile(|xi|^2)
struct MultiplierFamily {
  CoefficientFunction scale;
  RationalProfile profile;
};

/// B(t) f = b(t, .) * ((1 + |xi|^2)^{-order/2} f)^, with
/// b(t, x) = amplitude(t) exp(-|x|^2 / width^2).
struct SmoothingComposite {
  int order = 2;
  CoefficientFunction amplitude{1.0};
  double width = 1.0;
};

using PerturbationFamily = std::variant<ZeroFamily, IdentityFamily, Mollifier, MultiplierFamily, SmoothingComposite>;

inline bool is_diagonal(const PerturbationFamily& B) { return !std::holds_alternative<SmoothingComposite>(B); }

namespace detail {

inline double sinc(double x) {
  if (std::abs(x) < 1e-4) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

}  // namespace detail

/// Multiplier table of a diagonal family at time t.
inline std::vector<complex> perturbation_multiplier(const PerturbationFamily& B, const Grid& grid, double t) {
  std::vector<complex> m(grid.size());
  std::visit(
      [&](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, ZeroFamily>) {
          std::fill(m.begin(), m.end(), 0.0);
        } else if constexpr (std::is_same_v<K, IdentityFamily>) {
          std::fill(m.begin(), m.end(), 1.0);
        } else if constexpr (std::is_same_v<K, Mollifier>) {
          for (std::size_t b = 0; b < m.size(); ++b) {
            double v = 1.0;
            if (t > 0.0)
              for (double x : grid.frequency(b)) v *= detail::sinc(t * x);
            m[b] = v;
          }
        } else if constexpr (std::is_same_v<K, MultiplierFamily>) {
          const complex c = k.scale(t);
          for (std::size_t b = 0; b < m.size(); ++b) m[b] = c * k.profile(grid.frequency_norm2(b));
        } else {
          throw UnsupportedError("perturbation_multiplier: family is not a Fourier multiplier");
        }
      },
      B);
  return m;
}

inline std::vector<double> bump_profile(const Grid& grid, double width) {
  std::vector<double> v(grid.size());
  for (std::size_t j = 0; j < v.size(); ++j) {
    double r2 = 0.0;
    for (double x : grid.point(j)) r2 += x * x;
    v[j] = std::exp(-r2 / (width * width));
  }
  return v;
}

inline GridFunction apply_perturbation(const PerturbationFamily& B, double t, const GridFunction& f) {
  if (!(t >= 0.0)) throw DomainError("apply_perturbation: t must be >= 0");
  if (const auto* sc = std::get_if<SmoothingComposite>(&B)) {
    std::vector<complex> smooth(f.size());
    for (std::size_t b = 0; b < smooth.size(); ++b)
      smooth[b] = std::pow(1.0 + f.grid().frequency_norm2(b), -0.5 * sc->order);
    auto g = apply_multiplier(smooth, f).as_physical();
    const complex amp = sc->amplitude(t);
    const auto bump = bump_profile(f.grid(), sc->width);
    auto vals = g.values();
    for (std::size_t j = 0; j < vals.size(); ++j) vals[j] *= amp * bump[j];
    return g.as_frequency();
  }
  if (std::holds_alternative<IdentityFamily>(B)) return f.as_frequency();
  return apply_multiplier(perturbation_multiplier(B, f.grid(), t), f);
}

/// Upper bound on ||B(t)|| on the discretized L^2 (exact for diagonal kinds).
inline double perturbation_bound(const PerturbationFamily& B, const Grid& grid, double t) {
  // smoothing multiplier and bump are both <= 1
  if (const auto* sc = std::get_if<SmoothingComposite>(&B)) return std::abs(sc->amplitude(t));
  return multiplier_operator_norm(perturbation_multiplier(B, grid, t));
}

inline double perturbation_sup_bound(const PerturbationFamily& B, const Grid& grid, double horizon, int samples = 65) {
  double s = 0.0;
  for (double t : uniform_times(horizon, samples)) s = std::max(s, perturbation_bound(B, grid, t));
  return s;
}

// ---------------------------------------------------------------------------
// Volterra solver

struct VolterraSolver {
  int steps = 1024;
  double tolerance = 1e-12;  // relative Picard increment per node
  int max_sweeps = 20;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<GridFunction> values;
  int max_sweeps_used = 0;
  double worst_picard_residual = 0.0;
};

namespace detail {

inline std::vector<complex> exact_step(const SymbolOnGrid& table, double s, double t) {
  auto e = table.integrated(s, t);
  for (auto& v : e) v = std::exp(-v);
  return e;
}

inline void check_engine(const PropagatorEngine& U) {
  if (!U.is_exact()) throw ConfigError("Volterra solver needs the exact propagator");
}

}  // namespace detail

/// Trapezoid marching on sigma_k = s + k (t - s) / M. With
/// W_j = B(sigma_j) V_j the history term obeys
///   H_{k+1} = U(sigma_{k+1}, sigma_k) (H_k + c_k W_k),  c_0 = 1/2, c_j = 1,
/// and the implicit node V_k = Y_k + dt H_k + (dt/2) B(sigma_k) V_k is
/// resolved by Picard sweeps.
inline Trajectory solve_perturbed(const PropagatorEngine& U, const PerturbationFamily& B, double s, double t,
                                  const GridFunction& x, const VolterraSolver& solver = {}) {
  detail::check_engine(U);
  U.check_triangle(s, t);
  if (solver.steps < 1) throw ConfigError("Volterra solver: steps must be >= 1");
  if (!(solver.tolerance > 0.0)) throw ConfigError("Volterra solver: tolerance must be > 0");
  if (solver.max_sweeps < 1) throw ConfigError("Volterra solver: max sweeps must be >= 1");
  const SymbolOnGrid table(U.spec(), x.grid());
  const int M = solver.steps;
  const double dt = (t - s) / M;
  const auto x0 = x.as_frequency();
  const double xnorm = l2_norm(x0);

  Trajectory traj;
  traj.times.reserve(M + 1);
  traj.values.reserve(M + 1);
  traj.times.push_back(s);
  traj.values.push_back(x0);
  if (M == 0 || t == s) return traj;

  auto history = GridFunction::zeros(x0.grid_ptr(), Representation::frequency);
  auto w_prev = apply_perturbation(B, s, x0);
  double c_prev = 0.5;
  for (int k = 1; k <= M; ++k) {
    const double sk = k == M ? t : s + k * dt;
    const double sp = traj.times.back();
    const auto step = detail::exact_step(table, sp, sk);
    history.axpy(c_prev, w_prev);
    history = apply_multiplier(step, history);
    auto base = apply_multiplier(detail::exact_step(table, s, sk), x0);
    base.axpy(dt, history);
    // initial guess: explicit half step with the previous node's B V
    auto v = base;
    v.axpy(0.5 * dt, apply_multiplier(step, w_prev));
    GridFunction w = apply_perturbation(B, sk, v);
    double residual = std::numeric_limits<double>::infinity();
    double prev_residual = residual;
    int sweeps = 0;
    while (true) {
      auto next = base;
      next.axpy(0.5 * dt, w);
      const double scale = std::max(l2_norm(next), xnorm);
      residual = scale > 0.0 ? l2_norm(next - v) / scale : 0.0;
      v = std::move(next);
      ++sweeps;
      w = apply_perturbation(B, sk, v);
      if (residual <= solver.tolerance) break;
      if (sweeps >= solver.max_sweeps || (sweeps > 2 && residual >= prev_residual))
        throw ConvergenceError("Volterra solver: Picard iteration did not contract at step " + std::to_string(k),
                               residual);
      prev_residual = residual;
    }
    traj.max_sweeps_used = std::max(traj.max_sweeps_used, sweeps);
    traj.worst_picard_residual = std::max(traj.worst_picard_residual, residual);
    traj.times.push_back(sk);
    traj.values.push_back(std::move(v));
    w_prev = std::move(w);
    c_prev = 1.0;
  }
  return traj;
}

/// Closed form for commuting multiplier families:
/// exp(-int_s^t a + int_s^t m_B) applied to x.
inline GridFunction perturbed_oracle(const PropagatorEngine& U, const PerturbationFamily& B, double s, double t,
                                     const GridFunction& x) {
  U.check_triangle(s, t);
  const SymbolOnGrid table(U.spec(), x.grid());
  auto e = table.integrated(s, t);
  if (const auto* mf = std::get_if<MultiplierFamily>(&B)) {
    const complex S = mf->scale.antiderivative(t) - mf->scale.antiderivative(s);
    for (std::size_t b = 0; b < e.size(); ++b) e[b] -= S * mf->profile(x.grid().frequency_norm2(b));
  } else if (std::holds_alternative<IdentityFamily>(B)) {
    for (auto& v : e) v -= (t - s);
  } else if (!std::holds_alternative<ZeroFamily>(B)) {
    throw UnsupportedError("perturbed_oracle: no closed form for this perturbation family");
  }
  for (auto& v : e) v = std::exp(-v);
  return apply_multiplier(e, x);
}

namespace detail {

/// Cubic Lagrange interpolation of the trajectory at tau (uniform nodes).
inline GridFunction interpolate(const Trajectory& tr, double tau) {
  const std::size_t n = tr.times.size();
  if (n == 1) return tr.values.front();
  const double t0 = tr.times.front();
  const double dt = (tr.times.back() - t0) / static_cast<double>(n - 1);
  const std::size_t j = std::min(n - 2, static_cast<std::size_t>(std::max(0.0, std::floor((tau - t0) / dt))));
  std::size_t lo, cnt;
  if (n < 4) {
    lo = j;
    cnt = 2;
  } else {
    lo = j == 0 ? 0 : std::min(j - 1, n - 4);
    cnt = 4;
  }
  auto out = GridFunction::zeros(tr.values.front().grid_ptr(), Representation::frequency);
  for (std::size_t a = lo; a < lo + cnt; ++a) {
    double w = 1.0;
    for (std::size_t b = lo; b < lo + cnt; ++b)
      if (b != a) w *= (tau - tr.times[b]) / (tr.times[a] - tr.times[b]);
    out.axpy(w, tr.values[a].as_frequency());
  }
  return out;
}

}  // namespace detail

/// max_k ||V_k - U(sigma_k, s) x - int_s^{sigma_k} U(sigma_k, .) B V|| / ||x||
/// with the integral by Gauss-Legendre (4 nodes by default) per trajectory
/// step and V between nodes by cubic interpolation.
inline double duhamel_residual(const Trajectory& tr, const PropagatorEngine& U, const PerturbationFamily& B,
                               double s, const GridFunction& x, int nodes_per_step = 4) {
  detail::check_engine(U);
  if (tr.values.empty()) throw ConfigError("duhamel_residual: empty trajectory");
  const double xnorm = l2_norm(x);
  if (xnorm == 0.0) return 0.0;
  const SymbolOnGrid table(U.spec(), x.grid());
  const auto x0 = x.as_frequency();
  const auto rule = gauss_legendre(nodes_per_step);
  auto integral = GridFunction::zeros(x0.grid_ptr(), Representation::frequency);
  double worst = 0.0;
  for (std::size_t k = 1; k < tr.times.size(); ++k) {
    const double a = tr.times[k - 1], b = tr.times[k];
    integral = apply_multiplier(detail::exact_step(table, a, b), integral);
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      const double tau = 0.5 * (a + b) + 0.5 * (b - a) * rule.nodes[q];
      const auto bv = apply_perturbation(B, tau, detail::interpolate(tr, tau));
      integral.axpy(0.5 * (b - a) * rule.weights[q], apply_multiplier(detail::exact_step(table, tau, b), bv));
    }
    auto rhs = apply_multiplier(detail::exact_step(table, s, b), x0) + integral;
    worst = std::max(worst, l2_norm(tr.values[k].as_frequency() - rhs) / xnorm);
  }
  return worst;
}

struct PerturbedFamilyReport {
  double cocycle_defect = 0.0;       // ||V(t,r)V(r,s)x - V(t,s)x|| / ||x||
  std::optional<double> oracle_error;  // ||V(t,s)x - oracle|| / ||oracle||, commuting kinds only
  double M_V = 1.0;
  double omega_V = 0.0;
  double envelope_ratio = 0.0;   // max_k ||V_k|| / (||x|| M_V e^{omega_V (sigma_k - s)})
  double theory_ratio = 0.0;     // max_k ||V_k|| / (||x|| e^{(omega + sup ||B||)(sigma_k - s)})
  double omega = 0.0;            // growth bound of U used in theory_ratio
  double sup_B = 0.0;
  bool finite = false;
  std::vector<double> norms;  // ||V_k|| / ||x||
  std::vector<double> times;
  double r = 0.0;
};

/// s < r < t. The three solves s -> t, s -> r and r -> t each use
/// solver.steps uniform steps, so the legs run on ladders different from
/// the direct one and the cocycle defect measures the discretization.
inline PerturbedFamilyReport perturbed_family_checks(const PropagatorEngine& U, const PerturbationFamily& B, double s,
                                                     double r, double t, const GridFunction& x,
                                                     const VolterraSolver& solver = {}) {
  if (!(s < r && r < t)) throw DomainError("perturbed_family_checks: need s < r < t");
  PerturbedFamilyReport rep;
  rep.r = r;
  const auto full = solve_perturbed(U, B, s, t, x, solver);
  const auto first = solve_perturbed(U, B, s, r, x, solver);
  const auto leg = solve_perturbed(U, B, r, t, first.values.back(), solver);
  const double xnorm = l2_norm(x);
  rep.cocycle_defect = xnorm > 0.0 ? l2_norm(leg.values.back() - full.values.back()) / xnorm : 0.0;
  if (std::holds_alternative<MultiplierFamily>(B) || std::holds_alternative<ZeroFamily>(B) ||
      std::holds_alternative<IdentityFamily>(B)) {
    const auto exact = perturbed_oracle(U, B, s, t, x);
    const double en = l2_norm(exact);
    rep.oracle_error = en > 0.0 ? l2_norm(full.values.back() - exact) / en : l2_norm(full.values.back());
  }
  rep.finite = true;
  for (std::size_t k = 0; k < full.values.size(); ++k) {
    const double n = xnorm > 0.0 ? l2_norm(full.values[k]) / xnorm : 0.0;
    rep.finite = rep.finite && std::isfinite(n);
    rep.norms.push_back(n);
    rep.times.push_back(full.times[k]);
  }
  // least-squares rate through log norms, then the smallest M_V >= 1 for that rate
  if (xnorm > 0.0 && rep.finite) {
    double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
    const double n = static_cast<double>(rep.norms.size());
    for (std::size_t k = 0; k < rep.norms.size(); ++k) {
      const double tt = rep.times[k] - s, y = std::log(std::max(rep.norms[k], 1e-300));
      st += tt;
      sy += y;
      stt += tt * tt;
      sty += tt * y;
    }
    rep.omega_V = (n * sty - st * sy) / (n * stt - st * st);
    rep.M_V = 1.0;
    for (std::size_t k = 0; k < rep.norms.size(); ++k)
      rep.M_V = std::max(rep.M_V, rep.norms[k] * std::exp(-rep.omega_V * (rep.times[k] - s)));
    for (std::size_t k = 0; k < rep.norms.size(); ++k)
      rep.envelope_ratio =
          std::max(rep.envelope_ratio, rep.norms[k] / (rep.M_V * std::exp(rep.omega_V * (rep.times[k] - s))));
  }
  // growth of U from the real part of the symbol on the grid
  const SymbolOnGrid table(U.spec(), x.grid());
  double min_re = std::numeric_limits<double>::infinity();
  for (double tt : uniform_times(U.spec().horizon(), 129))
    for (const auto& v : table.values(tt)) min_re = std::min(min_re, v.real());
  rep.omega = -min_re;
  rep.sup_B = perturbation_sup_bound(B, x.grid(), U.spec().horizon());
  for (std::size_t k = 0; k < rep.norms.size(); ++k)
    rep.theory_ratio =
        std::max(rep.theory_ratio, rep.norms[k] / std::exp((rep.omega + rep.sup_B) * (rep.times[k] - s)));
  return rep;
}

// ---------------------------------------------------------------------------
// Hypotheses of the X-level perturbation result

struct Prop31Vector {
  std::vector<double> graph_norms;  // sup_t ||B(t) f_K||_{graph} for the band limits
  double growth = 0.0;              // ratio between the two finest band limits
  bool bounded = false;
  LipschitzConstant lipschitz;      // of t -> B(t) f in L^2 (witness t, s only)
  bool pass = false;
};

struct Prop31Report {
  std::vector<int> band_limits;
  std::vector<Prop31Vector> vectors;
  bool pass = false;
};

/// Graph norm ||A(0) g|| + ||g|| of B(t) f_K over band limits K = N/8, N/4,
/// N/2 - 1; bounded iff the last doubling grows it by less than 1.5. Plus the
/// L^2 Lipschitz constant of t -> B(t) f over a pair plan.
inline Prop31Report check_prop31_hypotheses(const SymbolSpec& spec, const PerturbationFamily& B,
                                            std::span<const GridFunction> vectors, int time_samples = 33,
                                            std::vector<double> separations = {1e-4, 1e-3, 1e-2, 1e-1}) {
  if (vectors.empty()) throw ConfigError("check_prop31_hypotheses: empty test set");
  const Grid& grid = vectors.front().grid();
  const int n = grid.n();
  Prop31Report rep;
  rep.band_limits = {n / 8, n / 4, n / 2 - 1};
  const SymbolOnGrid table(spec, grid);
  auto a0 = table.values(0.0);
  for (auto& v : a0) v = -v;
  const auto times = uniform_times(spec.horizon(), time_samples);
  rep.pass = true;
  for (const auto& f : vectors) {
    Prop31Vector pv;
    for (int K : rep.band_limits) {
      const auto fk = band_limit(f, K);
      double sup = 0.0;
      for (double t : times) {
        const auto g = apply_perturbation(B, t, fk);
        sup = std::max(sup, l2_norm(apply_multiplier(a0, g)) + l2_norm(g));
      }
      pv.graph_norms.push_back(sup);
    }
    const double prev = pv.graph_norms[pv.graph_norms.size() - 2];
    const double last = pv.graph_norms.back();
    pv.growth = prev > 0.0 ? last / prev : (last > 0.0 ? std::numeric_limits<double>::infinity() : 1.0);
    pv.bounded = std::isfinite(last) && pv.growth < 1.5;

    PairPlan plan;
    plan.base_times = time_samples;
    plan.separations = separations;
    plan.random_pairs = 0;
    detail::QuotientTracker tr(plan.separations);
    for (const auto& p : make_pairs(spec, plan)) {
      const double q = l2_norm(apply_perturbation(B, p.t, f) - apply_perturbation(B, p.s, f)) / (p.t - p.s);
      Witness w;
      w.t = p.t;
      w.s = p.s;
      tr.record(q, p, w);
      ++tr.out.pairs;
    }
    pv.lipschitz = tr.finish(plan.cap);
    pv.pass = pv.bounded && pv.lipschitz.pass;
    rep.pass = rep.pass && pv.pass;
    rep.vectors.push_back(std::move(pv));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Regularity of t -> B(t) f

struct ModulusSeries {
  std::vector<double> separations;
  std::vector<double> modulus;  // omega(delta)
  LogLogFit fit;
};

struct RegularityVector {
  double sup_norm = 0.0;           // sup_t ||B(t) f||_{L^2}
  ModulusSeries l2;
  ModulusSeries negative_sobolev;  // weight (1 + |xi|^2)^{-m}
  ModulusSeries extrapolated;      // ||A(0)^{-1} .||
  double lipschitz_negative_sobolev = 0.0;  // max_delta omega(delta) / delta
  double lipschitz_extrapolated = 0.0;
};

struct RegularityReport {
  int order = 2;
  std::vector<RegularityVector> vectors;
};

/// 2^-2, ..., 2^-(1 + count)
inline std::vector<double> dyadic_separations(int count = 6, int first = 2) {
  std::vector<double> out;
  for (int j = 0; j < count; ++j) out.push_back(std::ldexp(1.0, -(first + j)));
  return out;
}

/// Modulus of continuity omega(delta) = max over s in {0} u linspace(0, T - delta, bases)
/// of ||B(s + delta) f - B(s) f||, in L^2, W^{2,-m} and the X_{-1}(A(0)) norm.
inline RegularityReport perturbation_regularity_report(const PerturbationFamily& B, const SymbolSpec& spec,
                                                       std::span<const GridFunction> vectors,
                                                       std::span<const double> separations, int bases = 64,
                                                       int sup_samples = 65) {
  if (separations.size() < 3) throw ConfigError("regularity report: need at least 3 separations");
  if (vectors.empty()) throw ConfigError("regularity report: empty test set");
  const double T = spec.horizon();
  RegularityReport rep;
  rep.order = spec.order();
  const NormSpec neg = NegativeSobolevNorm{-static_cast<double>(spec.order())};
  const NormSpec ext = ExtrapolatedNorm{spec, 0.0};
  for (const auto& f : vectors) {
    RegularityVector rv;
    for (double t : uniform_times(T, sup_samples)) rv.sup_norm = std::max(rv.sup_norm, l2_norm(apply_perturbation(B, t, f)));
    for (double d : separations) {
      if (!(d > 0.0 && d <= T)) throw ConfigError("regularity report: separation outside (0, T]");
      std::vector<double> base{0.0};
      for (int j = 0; j < bases; ++j) base.push_back(bases == 1 ? 0.0 : (T - d) * j / (bases - 1));
      double m2 = 0.0, mn = 0.0, me = 0.0;
      for (double s : base) {
        const auto diff = apply_perturbation(B, s + d, f) - apply_perturbation(B, s, f);
        m2 = std::max(m2, l2_norm(diff));
        mn = std::max(mn, norm(diff, neg));
        me = std::max(me, norm(diff, ext));
      }
      rv.l2.separations.push_back(d);
      rv.l2.modulus.push_back(m2);
      rv.negative_sobolev.separations.push_back(d);
      rv.negative_sobolev.modulus.push_back(mn);
      rv.extrapolated.separations.push_back(d);
      rv.extrapolated.modulus.push_back(me);
      rv.lipschitz_negative_sobolev = std::max(rv.lipschitz_negative_sobolev, mn / d);
      rv.lipschitz_extrapolated = std::max(rv.lipschitz_extrapolated, me / d);
    }
    for (auto* series : {&rv.l2, &rv.negative_sobolev, &rv.extrapolated}) {
      const bool positive = std::all_of(series->modulus.begin(), series->modulus.end(), [](double v) { return v > 0.0; });
      if (positive) series->fit = fit_loglog(series->separations, series->modulus);
    }
    rep.vectors.push_back(std::move(rv));
  }
  return rep;
}

}  // namespace evofam
