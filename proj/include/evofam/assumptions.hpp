#pragma once

// Numerical certification of the sectorial bound, uniform extrapolation
// norms, operator/resolvent Lipschitz continuity, Kato stability, commuting
// resolvents and the CD-system conditions for a multiplier family
// A(t) = -a(t, .) on a grid.
//
// Every checker is a pure function of (spec, grid, plan). Plans refine by
// doubling densities so the refined sample set contains the original one;
// measured maxima are therefore nondecreasing under refinement.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <memory>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "evofam/errors.hpp"
#include "evofam/numerics.hpp"
#include "evofam/spectral.hpp"
#include "evofam/symbol.hpp"

namespace evofam {

/// Values above this are reported as "violation at cap".
inline constexpr double default_cap = 1e8;

struct Witness {
  double t = 0.0;
  double s = 0.0;
  complex lambda{};
  std::vector<double> xi;
};

namespace detail {

inline Witness witness_at(const Grid& grid, std::size_t bin, double t, double s = 0.0, complex lambda = {}) {
  Witness w;
  w.t = t;
  w.s = s;
  w.lambda = lambda;
  const auto xi = grid.frequency(bin);
  w.xi.assign(xi.begin(), xi.end());
  return w;
}

inline std::vector<double> with_extra(std::vector<double> ts, const std::vector<double>& extra) {
  ts.insert(ts.end(), extra.begin(), extra.end());
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  return ts;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Sectorial bound

struct SectorPlan {
  int rays = 9;              // arguments equally spaced over [-theta, theta], incl. +-pi/2 and 0
  int moduli_per_decade = 4;
  double min_modulus = 1e-3;
  double max_modulus = 1e6;
  int time_samples = 33;
  double cap = default_cap;

  SectorPlan refined(int factor) const {
    SectorPlan p = *this;
    p.rays = (rays - 1) * factor + 1;
    p.moduli_per_decade *= factor;
    p.time_samples = (time_samples - 1) * factor + 1;
    return p;
  }
};

struct SectorParams {
  double theta = 0.0;
  double M = 0.0;
  bool pass = false;
  bool violation_at_cap = false;
  /// Largest sampled half-angle keeping every -a(t, xi) outside the sector.
  double theta_max = 0.0;
  Witness witness;
  std::string note;
  std::size_t samples = 0;
};

inline std::vector<double> sector_arguments(double theta, int rays) {
  std::vector<double> args;
  if (rays < 2) return {0.0};
  for (int j = 0; j < rays; ++j) args.push_back(-theta + 2.0 * theta * j / (rays - 1));
  args.push_back(0.0);
  args.push_back(std::numbers::pi / 2);
  args.push_back(-std::numbers::pi / 2);
  std::sort(args.begin(), args.end());
  args.erase(std::unique(args.begin(), args.end()), args.end());
  return args;
}

inline SectorParams check_sector(const SymbolSpec& spec, const Grid& grid, double theta, const SectorPlan& plan = {}) {
  if (!(theta > std::numbers::pi / 2 && theta < std::numbers::pi))
    throw DomainError("check_sector: theta must lie in (pi/2, pi)");
  if (plan.time_samples < 1 || plan.moduli_per_decade < 1) throw ConfigError("check_sector: empty sample plan");
  const SymbolOnGrid table(spec, grid);
  const auto times = detail::with_extra(uniform_times(spec.horizon(), plan.time_samples), spec.discontinuities());
  const auto moduli = log_spaced(plan.min_modulus, plan.max_modulus, plan.moduli_per_decade);
  std::vector<complex> lambdas;
  for (double arg : sector_arguments(theta, plan.rays))
    for (double r : moduli) lambdas.push_back(std::polar(r, arg));

  SectorParams out;
  out.theta = theta;
  out.theta_max = std::numbers::pi;
  bool singular = false;
  for (double t : times) {
    const auto a = table.values(t);
    for (std::size_t b = 0; b < a.size(); ++b) {
      const double mod = std::abs(a[b]);
      // spectrum of A(t) is {-a(t, xi)}; it must avoid the closed sector
      const double arg = mod > 0.0 ? std::abs(std::arg(-a[b])) : 0.0;
      if (arg < out.theta_max) out.theta_max = arg;
      if (!singular && (mod == 0.0 || arg <= theta)) {
        singular = true;
        out.witness = detail::witness_at(grid, b, t, 0.0, -a[b]);
        out.note = mod == 0.0 ? "a(t, xi) = 0: A(t) not invertible" : "-a(t, xi) lies in the sector";
      }
      const double inv = mod > 0.0 ? 1.0 / mod : std::numeric_limits<double>::infinity();
      if (inv > out.M) {
        out.M = inv;
        if (!singular) out.witness = detail::witness_at(grid, b, t);
      }
      for (const complex& lam : lambdas) {
        const double ratio = std::abs(lam) / std::abs(lam + a[b]);
        if (ratio > out.M) {
          out.M = ratio;
          if (!singular) out.witness = detail::witness_at(grid, b, t, 0.0, lam);
        }
      }
    }
    out.samples += a.size() * (lambdas.size() + 1);
  }
  out.violation_at_cap = !(out.M <= plan.cap);
  out.pass = !singular && !out.violation_at_cap;
  if (singular) out.M = std::numeric_limits<double>::infinity();
  return out;
}

// ---------------------------------------------------------------------------
// Kato stability

struct KatoPlan {
  int kmax = 8;
  int random_partitions = 16;  // per k
  std::vector<double> lambda_offsets = {0.25, 1.0, 4.0, 16.0, 64.0};  // lambda = omega + offset
  int time_samples = 65;  // used for omega and the adversarial partitions
  std::uint64_t seed = 1;
  double cap = default_cap;

  KatoPlan refined(int factor) const {
    KatoPlan p = *this;
    p.random_partitions *= factor;
    p.time_samples = (time_samples - 1) * factor + 1;
    return p;
  }
};

struct StabilityCertificate {
  double M = 1.0;
  double omega = 0.0;
  int kmax = 0;
  std::size_t partitions = 0;
  std::size_t samples = 0;
  bool pass = false;
  /// Semigroup form: max of prod_j ||e^{-tau_j a(s_j)}|| / e^{omega sum tau_j}.
  double M_semigroup = 1.0;
  Witness witness;
  std::vector<double> witness_partition;

  /// True when the measured products also satisfy the claimed constants.
  bool certifies(double M_claim, double omega_claim, double rtol = 1e-12) const {
    return pass && omega <= omega_claim + rtol && M <= M_claim * (1.0 + rtol) &&
           M_semigroup <= M_claim * (1.0 + rtol);
  }
};

inline StabilityCertificate check_kato_stability(const SymbolSpec& spec, const Grid& grid, const KatoPlan& plan = {},
                                                 std::span<const double> explicit_lambdas = {}) {
  if (plan.kmax < 1 || plan.time_samples < 1) throw ConfigError("check_kato_stability: empty plan");
  const SymbolOnGrid table(spec, grid);
  const double T = spec.horizon();
  std::uniform_real_distribution<double> unif(0.0, T);

  // partitions: sorted random draws plus adversarial ones (all equal; endpoints).
  // One stream per k keeps the first draws fixed when the plan is refined.
  std::vector<std::vector<double>> partitions;
  const auto grid_times = detail::with_extra(uniform_times(T, plan.time_samples), spec.discontinuities());
  for (int k = 1; k <= plan.kmax; ++k) {
    std::mt19937_64 rng(plan.seed * 1000003ULL + static_cast<std::uint64_t>(k));
    for (int r = 0; r < plan.random_partitions; ++r) {
      std::vector<double> p(k);
      for (auto& x : p) x = unif(rng);
      std::sort(p.begin(), p.end());
      partitions.push_back(std::move(p));
    }
    for (double t : {0.0, T}) partitions.emplace_back(k, t);
    std::vector<double> ends(k);
    for (int j = 0; j < k; ++j) ends[j] = j < k / 2 ? 0.0 : T;
    partitions.push_back(ends);
  }
  for (double t : grid_times)
    for (int k = 1; k <= plan.kmax; ++k) partitions.emplace_back(k, t);

  // omega = -min Re a over every time involved; makes each factor <= 1/(lambda - omega)
  std::vector<double> all_times = grid_times;
  for (const auto& p : partitions) all_times.insert(all_times.end(), p.begin(), p.end());
  all_times = detail::with_extra(std::move(all_times), {});
  std::vector<std::vector<complex>> cache;
  double min_re = std::numeric_limits<double>::infinity();
  for (double t : all_times) {
    cache.push_back(table.values(t));
    for (const auto& v : cache.back()) min_re = std::min(min_re, v.real());
  }
  auto values_at = [&](double t) -> const std::vector<complex>& {
    const auto it = std::lower_bound(all_times.begin(), all_times.end(), t);
    return cache[static_cast<std::size_t>(it - all_times.begin())];
  };

  StabilityCertificate c;
  c.omega = -min_re;
  c.kmax = plan.kmax;
  c.partitions = partitions.size();
  std::vector<double> lambdas;
  for (double off : plan.lambda_offsets) lambdas.push_back(c.omega + off);
  for (double l : explicit_lambdas) {
    if (!(l > c.omega)) throw DomainError("check_kato_stability: lambda must exceed omega");
    lambdas.push_back(l);
  }
  const std::size_t nb = grid.size();
  std::vector<double> prod(nb), semi(nb);
  for (const auto& part : partitions) {
    const int k = static_cast<int>(part.size());
    std::vector<double> taus(k);
    for (int j = 0; j < k; ++j) taus[j] = 0.05 + 0.95 * std::fmod(0.6180339887498949 * (j + 1) + part[j] / T, 1.0);
    for (double lam : lambdas) {
      std::fill(prod.begin(), prod.end(), 1.0);
      for (double t : part) {
        const auto& a = values_at(t);
        for (std::size_t b = 0; b < nb; ++b) prod[b] /= std::abs(lam + a[b]);
      }
      const double scale = std::pow(lam - c.omega, k);
      for (std::size_t b = 0; b < nb; ++b) {
        const double v = prod[b] * scale;
        if (v > c.M) {
          c.M = v;
          c.witness = detail::witness_at(grid, b, part.front(), part.back(), lam);
          c.witness_partition = part;
        }
      }
      c.samples += nb;
    }
    // semigroup form: prod_j e^{-tau_j Re a(t_j)} <= M e^{omega sum tau_j}
    std::fill(semi.begin(), semi.end(), 0.0);
    double tau_sum = 0.0;
    for (int j = 0; j < k; ++j) {
      const auto& a = values_at(part[j]);
      for (std::size_t b = 0; b < nb; ++b) semi[b] -= taus[j] * a[b].real();
      tau_sum += taus[j];
    }
    for (std::size_t b = 0; b < nb; ++b) c.M_semigroup = std::max(c.M_semigroup, std::exp(semi[b] - c.omega * tau_sum));
  }
  c.pass = std::isfinite(c.M) && c.M <= plan.cap && c.M_semigroup <= plan.cap;
  return c;
}

// ---------------------------------------------------------------------------
// Lipschitz constants

struct PairPlan {
  int base_times = 65;  // uniform, includes dyadic fractions of T
  std::vector<double> separations = {1e-6, 1e-4, 1e-2, 1e-1};
  int all_pairs_times = 33;  // every pair of a coarse uniform grid
  int random_pairs = 64;
  std::uint64_t seed = 2;
  double cap = default_cap;

  PairPlan refined(int factor) const {
    PairPlan p = *this;
    p.base_times = (base_times - 1) * factor + 1;
    if (all_pairs_times > 1) p.all_pairs_times = (all_pairs_times - 1) * factor + 1;
    p.random_pairs *= factor;
    return p;
  }
};

struct TimePair {
  double t;
  double s;
  double separation;  // nominal separation class, 0 for random pairs
};

/// Pairs (c - d/2, c + d/2) centred on base times and on coefficient
/// discontinuities, forward pairs (c, c + d), all pairs of a coarse grid,
/// plus seeded random pairs.
inline std::vector<TimePair> make_pairs(const SymbolSpec& spec, const PairPlan& plan) {
  if (plan.base_times < 2 || plan.separations.empty()) throw ConfigError("pair plan is empty");
  const double T = spec.horizon();
  std::vector<TimePair> pairs;
  const auto centres = detail::with_extra(uniform_times(T, plan.base_times), spec.discontinuities());
  for (double c : centres) {
    for (double d : plan.separations) {
      const double lo = c - 0.5 * d, hi = c + 0.5 * d;
      if (lo >= 0.0 && hi <= T) pairs.push_back({hi, lo, d});
      if (c + d <= T) pairs.push_back({c + d, c, d});
    }
  }
  if (plan.all_pairs_times > 1) {
    const auto coarse = uniform_times(T, plan.all_pairs_times);
    for (std::size_t i = 0; i < coarse.size(); ++i)
      for (std::size_t j = 0; j < i; ++j) pairs.push_back({coarse[i], coarse[j], 0.0});
  }
  std::mt19937_64 rng(plan.seed);
  std::uniform_real_distribution<double> unif(0.0, T);
  for (int r = 0; r < plan.random_pairs; ++r) {
    const double a = unif(rng), b = unif(rng);
    if (a != b) pairs.push_back({std::max(a, b), std::min(a, b), 0.0});
  }
  return pairs;
}

struct LipschitzConstant {
  double value = 0.0;
  bool pass = false;
  /// Max quotient at the finest separation over max quotient at the coarsest
  /// structured separation; grows like the separation ratio across a jump.
  double blowup_ratio = 1.0;
  Witness witness;
  std::size_t pairs = 0;
  std::size_t skipped = 0;
};

namespace detail {

struct QuotientTracker {
  LipschitzConstant out;
  double finest = std::numeric_limits<double>::infinity();
  double coarsest = 0.0;
  double max_fine = 0.0;
  double max_coarse = 0.0;

  explicit QuotientTracker(const std::vector<double>& separations) {
    finest = *std::min_element(separations.begin(), separations.end());
    coarsest = *std::max_element(separations.begin(), separations.end());
  }

  void record(double q, const TimePair& p, const Witness& w) {
    if (q > out.value || std::isnan(q)) {
      out.value = std::isnan(q) ? std::numeric_limits<double>::infinity() : q;
      out.witness = w;
    }
    if (p.separation == finest) max_fine = std::max(max_fine, q);
    if (p.separation == coarsest) max_coarse = std::max(max_coarse, q);
  }

  LipschitzConstant finish(double cap) {
    out.blowup_ratio = max_coarse > 0.0 ? max_fine / max_coarse : (max_fine > 0.0 ? max_fine : 1.0);
    out.pass = std::isfinite(out.value) && out.value <= cap && out.blowup_ratio < 10.0;
    return out;
  }
};

}  // namespace detail

/// L = max over pairs, both orientations, of max_xi |1 - a(t, xi) / a(s, xi)| / |t - s|,
/// i.e. ||Id - A(t) A(s)^{-1}|| / |t - s| (equal to the X_{-1} version for
/// commuting multipliers).
inline LipschitzConstant check_operator_lipschitz(const SymbolSpec& spec, const Grid& grid, const PairPlan& plan = {}) {
  const SymbolOnGrid table(spec, grid);
  const auto pairs = make_pairs(spec, plan);
  detail::QuotientTracker tr(plan.separations);
  for (const auto& p : pairs) {
    if (p.t == p.s) {
      ++tr.out.skipped;
      continue;
    }
    const auto at = table.values(p.t);
    const auto as = table.values(p.s);
    double q = 0.0;
    std::size_t arg = 0;
    bool flipped = false;
    for (std::size_t b = 0; b < at.size(); ++b) {
      const double fwd = std::abs(1.0 - at[b] / as[b]);
      const double bwd = std::abs(1.0 - as[b] / at[b]);
      const double v = std::max(fwd, bwd);
      if (v > q || std::isnan(fwd) || std::isnan(bwd)) {
        q = std::isnan(fwd) || std::isnan(bwd) ? std::numeric_limits<double>::infinity() : v;
        arg = b;
        flipped = bwd > fwd;
      }
    }
    q /= std::abs(p.t - p.s);
    tr.record(q, p, flipped ? detail::witness_at(grid, arg, p.s, p.t) : detail::witness_at(grid, arg, p.t, p.s));
    ++tr.out.pairs;
  }
  return tr.finish(plan.cap);
}

/// Sector rays +-theta and the positive axis, log-spaced moduli.
inline std::vector<complex> sector_lambdas(double theta, const SectorPlan& plan) {
  std::vector<complex> out;
  for (double arg : {-theta, 0.0, theta})
    for (double r : log_spaced(plan.min_modulus, plan.max_modulus, plan.moduli_per_decade))
      out.push_back(std::polar(r, arg));
  return out;
}

/// C' = max |lambda| max_xi |(lambda + a_t)^{-1} - (lambda + a_s)^{-1}| / |t - s|.
inline LipschitzConstant check_resolvent_lipschitz(const SymbolSpec& spec, const Grid& grid, double theta,
                                                   const PairPlan& plan = {}, const SectorPlan& lplan = {}) {
  const SymbolOnGrid table(spec, grid);
  const auto pairs = make_pairs(spec, plan);
  const auto lambdas = sector_lambdas(theta, lplan);
  detail::QuotientTracker tr(plan.separations);
  for (const auto& p : pairs) {
    if (p.t == p.s) {
      ++tr.out.skipped;
      continue;
    }
    const auto at = table.values(p.t);
    const auto as = table.values(p.s);
    double q = 0.0;
    Witness w;
    // (lambda + a_t)^{-1} - (lambda + a_s)^{-1} = (a_s - a_t) / (dt ds); squared moduli throughout
    double q2 = 0.0;
    for (const complex& lam : lambdas) {
      const double l2 = std::norm(lam);
      for (std::size_t b = 0; b < at.size(); ++b) {
        const double dt2 = std::norm(lam + at[b]), ds2 = std::norm(lam + as[b]);
        if (dt2 < 1e-28 || ds2 < 1e-28)
          throw NumericError("check_resolvent_lipschitz: singular bin at lambda on the sector", b);
        const double v2 = l2 * std::norm(as[b] - at[b]) / (dt2 * ds2);
        if (v2 > q2) {
          q2 = v2;
          w = detail::witness_at(grid, b, p.t, p.s, lam);
        }
      }
    }
    q = std::sqrt(q2);
    tr.record(q / std::abs(p.t - p.s), p, w);
    ++tr.out.pairs;
  }
  return tr.finish(plan.cap);
}

/// C = max over tau, pairs of max_xi |e^{-tau a_t} - e^{-tau a_s}| / |t - s|.
inline LipschitzConstant check_semigroup_lipschitz(const SymbolSpec& spec, const Grid& grid, const PairPlan& plan = {},
                                                   int taus_per_decade = 4) {
  const SymbolOnGrid table(spec, grid);
  const auto pairs = make_pairs(spec, plan);
  const auto taus = log_spaced(1e-6, 1e2, taus_per_decade);
  detail::QuotientTracker tr(plan.separations);
  for (const auto& p : pairs) {
    if (p.t == p.s) {
      ++tr.out.skipped;
      continue;
    }
    const auto at = table.values(p.t);
    const auto as = table.values(p.s);
    double q = 0.0;
    Witness w;
    for (double tau : taus) {
      for (std::size_t b = 0; b < at.size(); ++b) {
        // |e^{-tau a_t} - e^{-tau a_s}| <= 2 e^{-tau min Re a}: skip bins that cannot raise q
        if (2.0 * std::exp(-tau * std::min(at[b].real(), as[b].real())) <= q) continue;
        const double v = std::abs(std::exp(-tau * at[b]) - std::exp(-tau * as[b]));
        if (v > q) {
          q = v;
          w = detail::witness_at(grid, b, p.t, p.s, tau);
        }
      }
    }
    tr.record(q / std::abs(p.t - p.s), p, w);
    ++tr.out.pairs;
  }
  return tr.finish(plan.cap);
}

struct LipschitzReport {
  LipschitzConstant operator_difference;  // L
  LipschitzConstant resolvent;            // C'
  LipschitzConstant semigroup;            // C
};

inline LipschitzReport check_lipschitz(const SymbolSpec& spec, const Grid& grid, double theta,
                                       const PairPlan& plan = {}, const SectorPlan& lplan = {}) {
  return {check_operator_lipschitz(spec, grid, plan), check_resolvent_lipschitz(spec, grid, theta, plan, lplan),
          check_semigroup_lipschitz(spec, grid, plan)};
}

// ---------------------------------------------------------------------------
// Uniform extrapolation norms

struct EquivalenceReport {
  double kappa = 1.0;
  double upper = 1.0;  // max |a(t)/a(0)|
  double lower = 1.0;  // max |a(0)/a(t)|
  bool pass = false;
  Witness upper_witness;
  Witness lower_witness;
  std::size_t samples = 0;
};

/// kappa = max over t and bins of max(|a(t)/a(0)|, |a(0)/a(t)|). Both
/// extrapolation gauges are diagonal, so this is the exact equivalence
/// constant on the discretized space.
inline EquivalenceReport check_norm_equivalence(const SymbolSpec& spec, const Grid& grid, int time_samples = 513,
                                                double cap = default_cap) {
  const SymbolOnGrid table(spec, grid);
  const auto a0 = table.values(0.0);
  for (std::size_t b = 0; b < a0.size(); ++b)
    if (!(std::abs(a0[b]) > 0.0)) throw NumericError("check_norm_equivalence: a(0, xi) vanishes", b);
  EquivalenceReport r;
  for (double t : detail::with_extra(uniform_times(spec.horizon(), time_samples), spec.discontinuities())) {
    const auto at = table.values(t);
    for (std::size_t b = 0; b < at.size(); ++b) {
      const double up = std::abs(at[b] / a0[b]);
      const double lo = std::abs(a0[b] / at[b]);
      if (up > r.upper) {
        r.upper = up;
        r.upper_witness = detail::witness_at(grid, b, t);
      }
      if (lo > r.lower || std::isnan(lo)) {
        r.lower = std::isnan(lo) ? std::numeric_limits<double>::infinity() : lo;
        r.lower_witness = detail::witness_at(grid, b, t);
      }
    }
    r.samples += at.size();
  }
  r.kappa = std::max(r.upper, r.lower);
  r.pass = std::isfinite(r.kappa) && r.kappa <= cap;
  return r;
}

// ---------------------------------------------------------------------------
// Commuting resolvents

/// max ||R(l, A(t)) R(m, A(s)) f - R(m, A(s)) R(l, A(t)) f|| / ||f|| over
/// seeded random draws of (t, s, lambda, mu, f).
inline double check_commuting(const SymbolSpec& spec, std::shared_ptr<const Grid> grid, int draws = 3,
                              std::uint64_t seed = 3) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, spec.horizon());
  std::uniform_real_distribution<double> lam_dist(0.5, 10.0);
  std::normal_distribution<double> g;
  const SymbolOnGrid table(spec, *grid);
  double worst = 0.0;
  for (int d = 0; d < draws; ++d) {
    const double t = unif(rng), s = unif(rng);
    const complex lam{lam_dist(rng), lam_dist(rng) - 5.0}, mu{lam_dist(rng), 0.0};
    auto f = GridFunction::zeros(grid);
    for (auto& v : f.values()) v = {g(rng), g(rng)};
    auto rt = table.values(t), rs = table.values(s);
    for (auto& v : rt) v = 1.0 / (lam + v);
    for (auto& v : rs) v = 1.0 / (mu + v);
    const auto one = apply_multiplier(rt, apply_multiplier(rs, f));
    const auto two = apply_multiplier(rs, apply_multiplier(rt, f));
    worst = std::max(worst, l2_norm(one - two) / l2_norm(f));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// CD-system

struct StrongLipschitz {
  double measured = 0.0;  // max over vectors and pairs of ||(A(t) - A(s)) f|| / |t - s|
  double bound = 0.0;     // sum_alpha Lip(a_alpha) ||d^alpha f|| for the worst vector
  double blowup_ratio = 1.0;
  bool pass = false;
  Witness witness;
  std::size_t vector_index = 0;
  std::vector<double> per_vector;
  std::vector<double> per_vector_bound;
};

struct CdSystemReport {
  bool constant_domain = true;  // structural in the multiplier model
  StabilityCertificate kato;
  StrongLipschitz strong_x;
  StrongLipschitz strong_xm1;  // measured in the X_{-1}(A(0)) gauge
  bool pass_x = false;
  bool pass_xminus1 = false;
  std::size_t test_vectors = 0;
};

namespace detail {

inline StrongLipschitz strong_lipschitz(const SymbolSpec& spec, std::span<const GridFunction> vectors,
                                        const PairPlan& plan, std::span<const complex> gauge) {
  const Grid& grid = vectors.front().grid();
  const SymbolOnGrid table(spec, grid);
  const auto pairs = make_pairs(spec, plan);
  const auto lips = coefficient_lipschitz(spec);
  StrongLipschitz out;
  double fine = 0.0, coarse = 0.0;
  const double finest = *std::min_element(plan.separations.begin(), plan.separations.end());
  const double coarsest = *std::max_element(plan.separations.begin(), plan.separations.end());
  std::vector<std::vector<double>> weights;  // |F_b|^2 |gauge_b|^2 per vector
  for (const auto& f : vectors) {
    const auto fr = f.as_frequency();
    std::vector<double> w(fr.size());
    for (std::size_t b = 0; b < w.size(); ++b) w[b] = std::norm(fr.values()[b] * gauge[b]);
    weights.push_back(std::move(w));
  }
  out.per_vector.assign(vectors.size(), 0.0);
  const double hd = grid.cell_volume();
  for (const auto& p : pairs) {
    if (p.t == p.s) continue;
    const auto at = table.values(p.t);
    const auto as = table.values(p.s);
    for (std::size_t v = 0; v < vectors.size(); ++v) {
      double acc = 0.0;
      for (std::size_t b = 0; b < at.size(); ++b) acc += std::norm(at[b] - as[b]) * weights[v][b];
      const double q = std::sqrt(acc * hd) / std::abs(p.t - p.s);
      out.per_vector[v] = std::max(out.per_vector[v], q);
      if (q > out.measured) {
        out.measured = q;
        out.vector_index = v;
        out.witness.t = p.t;
        out.witness.s = p.s;
      }
      if (p.separation == finest) fine = std::max(fine, q);
      if (p.separation == coarsest) coarse = std::max(coarse, q);
    }
  }
  // per-vector bound sum_alpha Lip(a_alpha) ||d^alpha f|| in the same gauge
  out.per_vector_bound.assign(vectors.size(), 0.0);
  for (std::size_t v = 0; v < vectors.size(); ++v) {
    for (const auto& [alpha, lip] : lips) {
      if (lip == 0.0) continue;
      double acc = 0.0;
      for (std::size_t b = 0; b < grid.size(); ++b) acc += std::norm(monomial(alpha, grid.frequency(b))) * weights[v][b];
      out.per_vector_bound[v] += lip * std::sqrt(acc * hd);
    }
  }
  out.bound = out.per_vector_bound[out.vector_index];
  out.blowup_ratio = coarse > 0.0 ? fine / coarse : 1.0;
  bool ok = std::isfinite(out.measured) && out.measured <= plan.cap && out.blowup_ratio < 10.0;
  for (std::size_t v = 0; v < vectors.size(); ++v)
    ok = ok && std::isfinite(out.per_vector_bound[v]) && out.per_vector[v] <= 1.05 * out.per_vector_bound[v];
  out.pass = ok;
  return out;
}

}  // namespace detail

inline CdSystemReport certify_cd_system(const SymbolSpec& spec, std::span<const GridFunction> vectors,
                                        const KatoPlan& kplan = {}, const PairPlan& pplan = {}) {
  if (vectors.empty()) throw ConfigError("certify_cd_system: empty test set");
  const Grid& grid = vectors.front().grid();
  CdSystemReport r;
  r.test_vectors = vectors.size();
  r.kato = check_kato_stability(spec, grid, kplan);
  const std::vector<complex> unit(grid.size(), 1.0);
  r.strong_x = detail::strong_lipschitz(spec, vectors, pplan, unit);
  r.strong_xm1 = detail::strong_lipschitz(spec, vectors, pplan, inverse_symbol_table(spec, 0.0, grid));
  r.pass_x = r.constant_domain && r.kato.pass && r.strong_x.pass;
  r.pass_xminus1 = r.constant_domain && r.kato.pass && r.strong_xm1.pass;
  return r;
}

}  // namespace evofam
