#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "evofam/errors.hpp"

namespace evofam {

/// Uniform periodic box [-L/2, L/2)^d with N points per axis (N a power of two).
///
/// Points are x_j = -L/2 + j h with h = L/N; the frequency attached to the
/// FFT bin index j is xi = 2 pi k / L where k = j for j < N/2 and k = j - N
/// otherwise, so k ranges over [-N/2, N/2). Flat indices are row-major with
/// the last axis fastest.
class Grid {
 public:
  Grid(int dim, int n, double box) : dim_(dim), n_(n), box_(box) {
    if (dim < 1) throw ConfigError("grid: dim must be >= 1");
    if (n < 2 || (n & (n - 1)) != 0) throw ConfigError("grid: n must be a power of two >= 2");
    if (!(box > 0.0) || !std::isfinite(box)) throw ConfigError("grid: box must be positive");
    size_ = 1;
    for (int a = 0; a < dim; ++a) {
      if (size_ > (std::size_t{1} << 26) / static_cast<std::size_t>(n))
        throw ConfigError("grid: n^dim too large");
      size_ *= static_cast<std::size_t>(n);
    }
    spacing_ = box / n;
    points_.resize(size_ * dim);
    freqs_.resize(size_ * dim);
    wavenumbers_.resize(size_ * dim);
    const double dk = 2.0 * std::numbers::pi / box;
    for (std::size_t flat = 0; flat < size_; ++flat) {
      std::size_t rem = flat;
      for (int a = dim - 1; a >= 0; --a) {
        const int j = static_cast<int>(rem % n);
        rem /= n;
        const int k = j < n / 2 ? j : j - n;
        points_[flat * dim + a] = -0.5 * box + j * spacing_;
        wavenumbers_[flat * dim + a] = k;
        freqs_[flat * dim + a] = dk * k;
      }
    }
  }

  int dim() const noexcept { return dim_; }
  int n() const noexcept { return n_; }
  double box() const noexcept { return box_; }
  double spacing() const noexcept { return spacing_; }
  std::size_t size() const noexcept { return size_; }
  double cell_volume() const noexcept { return std::pow(spacing_, dim_); }
  double volume() const noexcept { return std::pow(box_, dim_); }
  double frequency_spacing() const noexcept { return 2.0 * std::numbers::pi / box_; }
  /// Largest |xi_j| on any axis (the Nyquist frequency).
  double max_frequency() const noexcept { return frequency_spacing() * (n_ / 2); }

  std::span<const double> point(std::size_t flat) const {
    return {points_.data() + flat * dim_, static_cast<std::size_t>(dim_)};
  }
  std::span<const double> frequency(std::size_t flat) const {
    return {freqs_.data() + flat * dim_, static_cast<std::size_t>(dim_)};
  }
  std::span<const int> wavenumber(std::size_t flat) const {
    return {wavenumbers_.data() + flat * dim_, static_cast<std::size_t>(dim_)};
  }

  /// |xi|^2 at a bin.
  double frequency_norm2(std::size_t flat) const {
    double r = 0.0;
    for (double x : frequency(flat)) r += x * x;
    return r;
  }

  /// Flat index of the bin carrying integer wavenumbers k (each in [-N/2, N/2)).
  std::size_t bin_of(std::span<const int> k) const {
    if (static_cast<int>(k.size()) != dim_) throw DomainError("grid: wavenumber dimension mismatch");
    std::size_t flat = 0;
    for (int a = 0; a < dim_; ++a) {
      if (k[a] < -n_ / 2 || k[a] >= n_ / 2) throw DomainError("grid: wavenumber out of range");
      const int j = k[a] >= 0 ? k[a] : k[a] + n_;
      flat = flat * n_ + static_cast<std::size_t>(j);
    }
    return flat;
  }

  bool operator==(const Grid& o) const noexcept {
    return dim_ == o.dim_ && n_ == o.n_ && box_ == o.box_;
  }

 private:
  int dim_;
  int n_;
  double box_;
  double spacing_ = 0.0;
  std::size_t size_ = 0;
  std::vector<double> points_;
  std::vector<double> freqs_;
  std::vector<int> wavenumbers_;
};

}  // namespace evofam
