#pragma once

// Upwind finite volumes for
//   d_t f = -d_x (g(t, x) f) - mu(t, x) f   on [0, X_max],  f(t, 0) = 0,
// with free outflow at X_max.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <variant>
#include <vector>

#include "evofam/errors.hpp"
#include "evofam/numerics.hpp"
#include "evofam/symbol.hpp"

namespace evofam {

/// Re time(t) * (1 + amplitude sin(frequency x))
struct TransportField {
  CoefficientFunction time{1.0};
  double amplitude = 0.0;
  double frequency = 0.0;

  double operator()(double t, double x) const {
    return time(t).real() * (1.0 + amplitude * std::sin(frequency * x));
  }
  bool is_constant() const { return time.is_constant() && (amplitude == 0.0 || frequency == 0.0); }
};

struct Indicator {
  double a = 1.0;
  double b = 2.0;
};

struct Gaussian {
  double center = 2.0;
  double width = 0.3;
  double height = 1.0;
};

/// height * exp(1 - 1 / (1 - ((x - center) / radius)^2)) inside the support
struct SmoothBump {
  double center = 2.0;
  double radius = 1.0;
  double height = 1.0;
};

using InitialProfile = std::variant<Indicator, Gaussian, SmoothBump>;

namespace detail {

inline double bump_value(const SmoothBump& p, double x) {
  const double r = (x - p.center) / p.radius;
  if (std::abs(r) >= 1.0) return 0.0;
  return p.height * std::exp(1.0 - 1.0 / (1.0 - r * r));
}

}  // namespace detail

/// int_p^q f0(y) dy
inline double profile_integral(const InitialProfile& f0, double p, double q) {
  if (q <= p) return 0.0;
  return std::visit(
      [&](const auto& k) -> double {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, Indicator>) {
          return std::max(0.0, std::min(q, k.b) - std::max(p, k.a));
        } else if constexpr (std::is_same_v<K, Gaussian>) {
          const double c = k.height * k.width * std::sqrt(std::numbers::pi) / 2.0;
          return c * (std::erf((q - k.center) / k.width) - std::erf((p - k.center) / k.width));
        } else {
          const double lo = std::max(p, k.center - k.radius), hi = std::min(q, k.center + k.radius);
          if (hi <= lo) return 0.0;
          double acc = 0.0;
          for (const auto& node : composite_gauss(lo, hi, 4, 16)) acc += node.w * detail::bump_value(k, node.x);
          return acc;
        }
      },
      f0);
}

struct TransportProblem {
  double horizon = 1.0;
  double xmax = 8.0;
  int cells = 400;
  TransportField g;
  TransportField mu{CoefficientFunction{1.0}};
  double dt = 0.0;  // 0: 0.9 / (sup g / h + sup mu)

  double spacing() const { return xmax / cells; }
  double centre(int i) const { return (i + 0.5) * spacing(); }
};

struct TransportState {
  std::vector<double> cells;
  double time = 0.0;
  double outflow = 0.0;  // mass that has left through x = X_max

  double mass(double h) const {
    double m = 0.0;
    for (double v : cells) m += v;
    return m * h;
  }
  double l1(double h) const {
    double m = 0.0;
    for (double v : cells) m += std::abs(v);
    return m * h;
  }
};

struct StepRecord {
  double time;
  double mass;
  double l1;
  double balance_defect;  // |dmass + dt sum mu f h + outflow| / mass
};

struct CoefficientBounds {
  double g_min = 0.0;
  double g_max = 0.0;
  double mu_min = 0.0;
  double mu_max = 0.0;
};

/// Bounds of g and mu over faces/centres and a time grid.
inline CoefficientBounds coefficient_bounds(const TransportProblem& p, int time_samples = 65) {
  CoefficientBounds b{std::numeric_limits<double>::infinity(), 0.0, std::numeric_limits<double>::infinity(), 0.0};
  const double h = p.spacing();
  for (double t : uniform_times(p.horizon, time_samples)) {
    for (int i = 0; i <= p.cells; ++i) {
      const double gv = p.g(t, i * h);
      b.g_min = std::min(b.g_min, gv);
      b.g_max = std::max(b.g_max, gv);
    }
    for (int i = 0; i < p.cells; ++i) {
      const double mv = p.mu(t, p.centre(i));
      b.mu_min = std::min(b.mu_min, mv);
      b.mu_max = std::max(b.mu_max, mv);
    }
  }
  return b;
}

inline void validate(const TransportProblem& p) {
  if (!(p.horizon > 0.0) || !(p.xmax > 0.0) || p.cells < 2) throw ConfigError("transport: bad horizon, xmax or cells");
  const auto b = coefficient_bounds(p);
  if (!(b.g_min > 0.0)) throw ConfigError("transport: velocity must be bounded away from zero");
  if (!(b.mu_min >= 0.0)) throw ConfigError("transport: decay rate must be nonnegative");
}

/// The step used by every solve of p; solves share the global ladder n * dt.
inline double transport_step(const TransportProblem& p) {
  const auto b = coefficient_bounds(p);
  const double h = p.spacing();
  if (p.dt > 0.0) {
    if (p.dt > 0.9 * h / b.g_max * (1.0 + 1e-12))
      throw ConfigError("transport: CFL violated, dt > 0.9 h / sup g");
    if (p.dt * (b.g_max / h + b.mu_max) > 1.0)
      throw ConfigError("transport: dt breaks monotonicity, dt (sup g / h + sup mu) > 1");
    return p.dt;
  }
  return 0.9 / (b.g_max / h + b.mu_max);
}

inline TransportState initial_state(const TransportProblem& p, const InitialProfile& f0, double s = 0.0) {
  const double h = p.spacing();
  TransportState st;
  st.time = s;
  st.cells.resize(p.cells);
  for (int i = 0; i < p.cells; ++i) st.cells[i] = profile_integral(f0, i * h, (i + 1) * h) / h;
  return st;
}

namespace detail {

inline void upwind_step(const TransportProblem& p, TransportState& st, double dt, std::vector<double>& flux) {
  const double h = p.spacing();
  const double tm = st.time + 0.5 * dt;
  const int n = p.cells;
  // flux[i] at face i + 1/2 (x = (i + 1) h); inflow face carries 0
  for (int i = 0; i < n; ++i) flux[i] = p.g(tm, (i + 1) * h) * st.cells[i];
  for (int i = n - 1; i >= 0; --i) {
    const double in = i == 0 ? 0.0 : flux[i - 1];
    st.cells[i] -= dt / h * (flux[i] - in) + dt * p.mu(tm, p.centre(i)) * st.cells[i];
  }
  st.outflow += dt * flux[n - 1];
  st.time += dt;
}

}  // namespace detail

/// March from state.time to t on the ladder {n dt} (partial first/last steps
/// when the endpoints are off the ladder).
inline TransportState transport_solve(const TransportProblem& p, TransportState st, double t,
                                      std::vector<StepRecord>* log = nullptr) {
  validate(p);
  const double s = st.time;
  if (!(s <= t)) throw DomainError("transport_solve: need s <= t");
  if (s < 0.0 || t > p.horizon * (1.0 + 1e-12)) throw DomainError("transport_solve: time outside [0, T]");
  if (static_cast<int>(st.cells.size()) != p.cells) throw ConfigError("transport_solve: state size != cells");
  const double dt = transport_step(p);
  const double h = p.spacing();
  std::vector<double> flux(p.cells);
  const double eps = 1e-12 * std::max(1.0, t);
  long n = static_cast<long>(std::floor(s / dt + 1e-9)) + 1;
  while (st.time < t - eps) {
    const double target = std::min(t, n * dt);
    const double step = target - st.time;
    ++n;
    if (step <= eps) continue;
    const double m0 = st.mass(h), out0 = st.outflow;
    double sink = 0.0;
    if (log) {
      const double tm = st.time + 0.5 * step;
      for (int i = 0; i < p.cells; ++i) sink += p.mu(tm, p.centre(i)) * st.cells[i];
      sink *= step * h;
    }
    detail::upwind_step(p, st, step, flux);
    st.time = target;
    if (log) {
      const double m1 = st.mass(h);
      const double def = std::abs(m1 - m0 + sink + (st.outflow - out0));
      log->push_back({st.time, m1, st.l1(h), m0 > 0.0 ? def / m0 : def});
    }
  }
  st.time = t;
  return st;
}

inline TransportState transport_solve(const TransportProblem& p, double s, double t, const InitialProfile& f0,
                                      std::vector<StepRecord>* log = nullptr) {
  return transport_solve(p, initial_state(p, f0, s), t, log);
}

/// Cell averages of e^{-mu (t - s)} f0(x - g (t - s)) (0 for x < g (t - s)).
inline TransportState characteristics_oracle(const TransportProblem& p, double s, double t, const InitialProfile& f0) {
  if (!p.g.is_constant() || !p.mu.is_constant())
    throw UnsupportedError("characteristics_oracle: coefficients must be constant");
  if (!(s <= t)) throw DomainError("characteristics_oracle: need s <= t");
  const double g = p.g(0.0, 0.0), mu = p.mu(0.0, 0.0), tau = t - s, h = p.spacing();
  const double shift = g * tau, decay = std::exp(-mu * tau);
  TransportState st;
  st.time = t;
  st.cells.resize(p.cells);
  for (int i = 0; i < p.cells; ++i) {
    const double lo = std::max(i * h, shift), hi = (i + 1) * h;
    st.cells[i] = decay * profile_integral(f0, lo - shift, hi - shift) / h;
  }
  // mass carried past X_max by the exact flow
  st.outflow = 0.0;
  return st;
}

inline double l1_distance(const TransportState& a, const TransportState& b, double h) {
  if (a.cells.size() != b.cells.size()) throw ConfigError("l1_distance: size mismatch");
  double d = 0.0;
  for (std::size_t i = 0; i < a.cells.size(); ++i) d += std::abs(a.cells[i] - b.cells[i]);
  return d * h;
}

struct TransportFamilyReport {
  double cocycle_defect = 0.0;  // ||U(t,s)U(s,r)f - U(t,r)f||_1 / ||f||_1
  bool aligned = false;         // s lies on the step ladder
  double decay_ratio = 0.0;     // (||U(t,r)f||_1 + outflow) / ||f||_1
  double decay_bound = 1.0;     // e^{-mu_min (t - r)}
  double mu_min = 0.0;
  bool positive = true;
  double worst_balance_defect = 0.0;
  bool boundary_reached = false;  // mass within the last cell exceeded 1e-12 of the total
  bool pass = false;
};

/// Cocycle over r <= s <= t, L^1 growth against e^{-mu_min (t - r)},
/// positivity and the discrete mass balance.
inline TransportFamilyReport transport_family_checks(const TransportProblem& p, double r, double s, double t,
                                                     const InitialProfile& f0) {
  if (!(r <= s && s <= t)) throw DomainError("transport_family_checks: need r <= s <= t");
  const double h = p.spacing();
  const double dt = transport_step(p);
  TransportFamilyReport rep;
  const auto b = coefficient_bounds(p);
  rep.mu_min = b.mu_min;
  const double ratio = s / dt;
  rep.aligned = std::abs(ratio - std::round(ratio)) < 1e-9 || s == r || s == t;
  std::vector<StepRecord> log;
  const auto start = initial_state(p, f0, r);
  const auto direct = transport_solve(p, start, t, &log);
  const auto mid = transport_solve(p, start, s);
  const auto composed = transport_solve(p, mid, t);
  const double n0 = start.l1(h);
  rep.cocycle_defect = n0 > 0.0 ? l1_distance(direct, composed, h) / n0 : l1_distance(direct, composed, h);
  rep.decay_bound = std::exp(-rep.mu_min * (t - r));
  rep.decay_ratio = n0 > 0.0 ? (direct.l1(h) + direct.outflow) / n0 : 0.0;
  for (double v : direct.cells) rep.positive = rep.positive && v >= 0.0;
  for (const auto& rec : log) rep.worst_balance_defect = std::max(rep.worst_balance_defect, rec.balance_defect);
  const double total = direct.mass(h);
  rep.boundary_reached = direct.outflow > 1e-12 * std::max(total, 1e-300) ||
                         direct.cells.back() * h > 1e-12 * std::max(total, 1e-300);
  rep.pass = (!rep.aligned || rep.cocycle_defect <= 1e-12) && rep.decay_ratio <= rep.decay_bound * (1.0 + 1e-12) &&
             rep.positive && rep.worst_balance_defect <= 1e-12;
  return rep;
}

struct TransportConvergence {
  std::vector<int> cells;
  std::vector<double> errors;  // L^1 distance to the oracle
  std::vector<double> orders;  // between consecutive levels
};

/// L^1 error against the characteristics oracle for cells, 2 cells, ...
inline TransportConvergence transport_convergence(TransportProblem p, double s, double t, const InitialProfile& f0,
                                                  int levels = 4) {
  if (levels < 2) throw ConfigError("transport_convergence: need >= 2 levels");
  TransportConvergence c;
  for (int l = 0; l < levels; ++l) {
    const auto num = transport_solve(p, s, t, f0);
    const auto ref = characteristics_oracle(p, s, t, f0);
    c.cells.push_back(p.cells);
    c.errors.push_back(l1_distance(num, ref, p.spacing()));
    if (l > 0) c.orders.push_back(observed_order(c.errors[l - 1], c.errors[l]));
    p.cells *= 2;
    if (p.dt > 0.0) p.dt *= 0.5;
  }
  return c;
}

}  // namespace evofam
