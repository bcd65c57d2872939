#pragma once

// Grid functions on the periodic box, the discrete Fourier transform, Fourier
// multipliers and the norm functionals used throughout (L^p, weighted
// negative Sobolev, extrapolation norm).
//
// Normalization: the transform is the unitary DFT
//   F_k = N^{-d/2} sum_j f_j exp(-2 pi i j.k / N),
// so sum |f_j|^2 = sum |F_k|^2 and the L^2 norm is sqrt(h^d sum |F_k|^2) in
// either representation.

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <concepts>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <random>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "evofam/errors.hpp"
#include "evofam/grid.hpp"
#include "evofam/symbol.hpp"

namespace evofam {

enum class Representation { physical, frequency };
enum class Direction { to_frequency, to_physical };

namespace detail {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

inline void fft_inplace(std::vector<complex>& data, const Grid& grid, int sign) {
  std::vector<int> dims(grid.dim(), grid.n());
  auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan;
  {
    std::lock_guard lock(fftw_planner_mutex());
    plan = fftw_plan_dft(grid.dim(), dims.data(), ptr, ptr, sign, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(grid.size()));
  for (auto& v : data) v *= scale;
}

}  // namespace detail

class GridFunction {
 public:
  GridFunction(std::shared_ptr<const Grid> grid, Representation rep, std::vector<complex> values)
      : grid_(std::move(grid)), rep_(rep), values_(std::move(values)) {
    if (!grid_) throw ConfigError("grid function: null grid");
    if (values_.size() != grid_->size()) throw ConfigError("grid function: value count != N^d");
  }

  static GridFunction zeros(std::shared_ptr<const Grid> grid, Representation rep = Representation::physical) {
    const auto n = grid->size();
    return {std::move(grid), rep, std::vector<complex>(n)};
  }

  template <class F>
    requires std::invocable<F, std::span<const double>>
  static GridFunction from_physical(std::shared_ptr<const Grid> grid, F&& f) {
    std::vector<complex> v(grid->size());
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = f(grid->point(j));
    return {std::move(grid), Representation::physical, std::move(v)};
  }

  template <class F>
    requires std::invocable<F, std::span<const double>>
  static GridFunction from_spectrum(std::shared_ptr<const Grid> grid, F&& f) {
    std::vector<complex> v(grid->size());
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = f(grid->frequency(j));
    return {std::move(grid), Representation::frequency, std::move(v)};
  }

  const Grid& grid() const noexcept { return *grid_; }
  const std::shared_ptr<const Grid>& grid_ptr() const noexcept { return grid_; }
  Representation representation() const noexcept { return rep_; }
  std::span<const complex> values() const noexcept { return values_; }
  std::span<complex> values() noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }

  /// Converting copy; no-op when already in the requested representation.
  GridFunction in(Representation rep) const {
    if (rep == rep_) return *this;
    GridFunction out = *this;
    detail::fft_inplace(out.values_, *grid_, rep == Representation::frequency ? FFTW_FORWARD : FFTW_BACKWARD);
    out.rep_ = rep;
    return out;
  }
  GridFunction as_frequency() const { return in(Representation::frequency); }
  GridFunction as_physical() const { return in(Representation::physical); }

  GridFunction& operator+=(const GridFunction& o) {
    check_compatible(o);
    for (std::size_t j = 0; j < values_.size(); ++j) values_[j] += o.values_[j];
    return *this;
  }
  GridFunction& operator-=(const GridFunction& o) {
    check_compatible(o);
    for (std::size_t j = 0; j < values_.size(); ++j) values_[j] -= o.values_[j];
    return *this;
  }
  GridFunction& operator*=(complex c) {
    for (auto& v : values_) v *= c;
    return *this;
  }
  /// this += c * o
  GridFunction& axpy(complex c, const GridFunction& o) {
    check_compatible(o);
    for (std::size_t j = 0; j < values_.size(); ++j) values_[j] += c * o.values_[j];
    return *this;
  }

  friend GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
  friend GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
  friend GridFunction operator*(complex c, GridFunction a) { return a *= c; }

 private:
  void check_compatible(const GridFunction& o) const {
    if (!(*grid_ == *o.grid_)) throw StateError("grid function: grids differ");
    if (rep_ != o.rep_) throw StateError("grid function: representations differ");
  }

  std::shared_ptr<const Grid> grid_;
  Representation rep_;
  std::vector<complex> values_;
};

/// Strict transform: the input must be in the representation opposite to
/// the requested direction.
inline GridFunction transform(const GridFunction& f, Direction dir) {
  const auto target = dir == Direction::to_frequency ? Representation::frequency : Representation::physical;
  if (f.representation() == target) throw StateError("transform: function already in target representation");
  return f.in(target);
}

/// A function of the frequency vector.
using Multiplier = std::function<complex(std::span<const double>)>;

/// Multiplier values tabulated on the bins of a grid.
inline std::vector<complex> tabulate(const Multiplier& m, const Grid& grid) {
  std::vector<complex> v(grid.size());
  for (std::size_t b = 0; b < v.size(); ++b) v[b] = m(grid.frequency(b));
  return v;
}

inline GridFunction apply_multiplier(std::span<const complex> table, const GridFunction& f) {
  if (table.size() != f.size()) throw ConfigError("multiplier table size != grid size");
  GridFunction out = f.as_frequency();
  auto vals = out.values();
  for (std::size_t b = 0; b < vals.size(); ++b) {
    const complex m = table[b];
    if (!std::isfinite(m.real()) || !std::isfinite(m.imag())) throw NumericError("multiplier not finite", b);
    vals[b] *= m;
  }
  return out;
}

inline GridFunction apply_multiplier(const Multiplier& m, const GridFunction& f) {
  return apply_multiplier(tabulate(m, f.grid()), f);
}

struct LpNorm {
  double p = 2.0;
};
/// Weighted frequency norm with weight (1 + |xi|^2)^{s/2}; p fixed to 2.
struct NegativeSobolevNorm {
  double s = -2.0;
};
/// ||f||_{-1} = ||A(t0)^{-1} f||_{L^2} with A(t0) the multiplier -a(t0, .).
struct ExtrapolatedNorm {
  SymbolSpec spec;
  double t0 = 0.0;
};
using NormSpec = std::variant<LpNorm, NegativeSobolevNorm, ExtrapolatedNorm>;

namespace detail {

inline void check_finite(std::span<const complex> v) {
  for (std::size_t j = 0; j < v.size(); ++j)
    if (!std::isfinite(v[j].real()) || !std::isfinite(v[j].imag())) throw NumericError("norm: non-finite value", j);
}

/// sqrt(h^d sum w_b |F_b|^2), fixed summation order.
inline double weighted_l2(const GridFunction& freq, std::span<const double> weight2) {
  double acc = 0.0;
  const auto v = freq.values();
  for (std::size_t b = 0; b < v.size(); ++b) acc += weight2[b] * std::norm(v[b]);
  return std::sqrt(acc * freq.grid().cell_volume());
}

}  // namespace detail

inline double l2_norm(const GridFunction& f) {
  detail::check_finite(f.values());
  double acc = 0.0;
  for (const auto& v : f.values()) acc += std::norm(v);
  return std::sqrt(acc * f.grid().cell_volume());
}

inline std::vector<complex> inverse_symbol_table(const SymbolSpec& spec, double t0, const Grid& grid) {
  const SymbolOnGrid table(spec, grid);
  auto a = table.values(t0);
  for (std::size_t b = 0; b < a.size(); ++b) {
    if (!(std::abs(a[b]) > 0.0)) throw NumericError("extrapolated norm: reference symbol vanishes", b);
    a[b] = 1.0 / a[b];
  }
  return a;
}

inline double norm(const GridFunction& f, const NormSpec& spec) {
  detail::check_finite(f.values());
  return std::visit(
      [&](const auto& n) -> double {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, LpNorm>) {
          if (!(n.p > 1.0) || !std::isfinite(n.p)) throw DomainError("norm: p must lie in (1, inf)");
          if (n.p == 2.0) return l2_norm(f.as_frequency());
          const auto phys = f.as_physical();
          double acc = 0.0;
          for (const auto& v : phys.values()) acc += std::pow(std::abs(v), n.p);
          return std::pow(acc * f.grid().cell_volume(), 1.0 / n.p);
        } else if constexpr (std::is_same_v<T, NegativeSobolevNorm>) {
          const auto fr = f.as_frequency();
          std::vector<double> w(fr.size());
          for (std::size_t b = 0; b < w.size(); ++b) w[b] = std::pow(1.0 + f.grid().frequency_norm2(b), n.s);
          return detail::weighted_l2(fr, w);
        } else {
          return l2_norm(apply_multiplier(inverse_symbol_table(n.spec, n.t0, f.grid()), f));
        }
      },
      spec);
}

enum class OperatorSpace { l2, extrapolated };

/// Operator norm of a multiplier on the discretized L^2 (max modulus over
/// the bins). In the extrapolated gauge the diagonal weight cancels, so the
/// value is the same.
inline double multiplier_operator_norm(std::span<const complex> table, OperatorSpace = OperatorSpace::l2) {
  double m = 0.0;
  for (const auto& v : table) m = std::max(m, std::abs(v));
  return m;
}

inline double multiplier_operator_norm(const Multiplier& m, const Grid& grid,
                                       OperatorSpace space = OperatorSpace::l2) {
  return multiplier_operator_norm(tabulate(m, grid), space);
}

/// Fraction of L^2 energy in bins with some |k_j| >= N/4. Test vectors are
/// expected to keep this below 1e-8.
inline double spectral_tail_fraction(const GridFunction& f) {
  const auto fr = f.as_frequency();
  const int cut = fr.grid().n() / 4;
  double tail = 0.0, total = 0.0;
  for (std::size_t b = 0; b < fr.size(); ++b) {
    const double e = std::norm(fr.values()[b]);
    total += e;
    const auto k = fr.grid().wavenumber(b);
    if (std::any_of(k.begin(), k.end(), [cut](int x) { return std::abs(x) >= cut; })) tail += e;
  }
  return total > 0.0 ? tail / total : 0.0;
}

/// Zeroes every bin with some |k_j| > kmax.
inline GridFunction band_limit(const GridFunction& f, int kmax) {
  auto fr = f.as_frequency();
  for (std::size_t b = 0; b < fr.size(); ++b) {
    const auto k = fr.grid().wavenumber(b);
    if (std::any_of(k.begin(), k.end(), [kmax](int x) { return std::abs(x) > kmax; })) fr.values()[b] = 0.0;
  }
  return fr;
}

/// Seeded complex Gaussian coefficients on the bins with every |k_j| <= kmax,
/// zero elsewhere; normalized to unit L^2 norm. Vector j uses its own stream,
/// so growing the count keeps the earlier vectors.
inline std::vector<GridFunction> band_limited_test_set(const std::shared_ptr<const Grid>& grid, int count, int kmax,
                                                       std::uint64_t seed) {
  if (count < 1) throw ConfigError("test set: count must be >= 1");
  if (kmax < 0 || kmax >= grid->n() / 4) throw ConfigError("test set: kmax must lie in [0, N/4)");
  std::vector<GridFunction> out;
  for (int j = 0; j < count; ++j) {
    std::mt19937_64 rng(seed * 7919ULL + static_cast<std::uint64_t>(j));
    std::normal_distribution<double> g;
    auto f = GridFunction::zeros(grid, Representation::frequency);
    for (std::size_t b = 0; b < f.size(); ++b) {
      const auto k = grid->wavenumber(b);
      if (std::all_of(k.begin(), k.end(), [kmax](int x) { return std::abs(x) <= kmax; }))
        f.values()[b] = {g(rng), g(rng)};
    }
    f *= 1.0 / l2_norm(f);
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace evofam
