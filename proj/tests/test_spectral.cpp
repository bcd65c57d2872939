#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "evofam/spectral.hpp"
#include "fixtures.hpp"

using namespace evofam;
using fixtures::pi;

TEST(Grid, FrequencyLayout) {
  const Grid g(1, 8, 2 * pi);
  EXPECT_DOUBLE_EQ(g.frequency(0)[0], 0.0);
  EXPECT_DOUBLE_EQ(g.frequency(3)[0], 3.0);
  EXPECT_DOUBLE_EQ(g.frequency(4)[0], -4.0);
  EXPECT_DOUBLE_EQ(g.point(0)[0], -pi);
  const std::vector<int> k{-1};
  EXPECT_EQ(g.bin_of(k), 7u);
  EXPECT_THROW(Grid(1, 12, 1.0), ConfigError);
  EXPECT_THROW(Grid(1, 8, -1.0), ConfigError);
}

TEST(Transform, ConstantLandsInZeroBin) {
  const auto g = fixtures::grid(64);
  const auto f = GridFunction::from_physical(g, [](auto) { return complex(3.0); });
  const auto F = transform(f, Direction::to_frequency);
  EXPECT_NEAR(std::abs(F.values()[0] - 3.0 * 8.0), 0.0, 1e-12);
  for (std::size_t b = 1; b < F.size(); ++b) EXPECT_LT(std::abs(F.values()[b]), 1e-12);
}

TEST(Transform, RoundTripAndParseval) {
  const auto g = fixtures::grid(256);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  auto f = GridFunction::zeros(g);
  for (auto& v : f.values()) v = {n(rng), n(rng)};
  const auto back = transform(transform(f, Direction::to_frequency), Direction::to_physical);
  EXPECT_LT(fixtures::max_abs_diff(f, back), 1e-12);
  EXPECT_NEAR(l2_norm(f), l2_norm(f.as_frequency()), 1e-12 * l2_norm(f));
  EXPECT_THROW(transform(f, Direction::to_physical), StateError);
}

TEST(Transform, TwoDimensionalRoundTrip) {
  const auto g = fixtures::grid(32, 2 * pi, 2);
  const auto f = GridFunction::from_physical(g, [](std::span<const double> x) {
    return complex(std::cos(x[0]) * std::sin(2 * x[1]), std::exp(-x[0] * x[0]));
  });
  EXPECT_LT(fixtures::max_abs_diff(f, f.as_frequency().as_physical()), 1e-12);
}

TEST(Multiplier, DerivativeOfSine) {
  const auto g = fixtures::grid(128);
  const auto f = GridFunction::from_physical(g, [](std::span<const double> x) { return complex(std::sin(x[0])); });
  const auto df = apply_multiplier([](std::span<const double> xi) { return complex(0.0, xi[0]); }, f);
  const auto c = GridFunction::from_physical(g, [](std::span<const double> x) { return complex(std::cos(x[0])); });
  EXPECT_LT(fixtures::max_abs_diff(df, c), 1e-10);
}

TEST(Multiplier, InverseHelmholtzScalesMode) {
  const auto g = fixtures::grid(64);
  const auto f = fixtures::mode(g, 2);
  const auto r = apply_multiplier([](std::span<const double> xi) { return complex(1.0 / (1.0 + xi[0] * xi[0])); }, f);
  auto expect = f;
  expect *= 0.2;
  EXPECT_LT(fixtures::max_abs_diff(r, expect), 1e-14);
}

TEST(Multiplier, RejectsNonFiniteValues) {
  const auto g = fixtures::grid(16);
  const auto f = fixtures::mode(g, 1);
  EXPECT_THROW(apply_multiplier([](std::span<const double> xi) { return complex(1.0 / xi[0]); }, f), NumericError);
}

TEST(Norms, LpOfConstant) {
  const auto g = fixtures::grid(64);
  const auto one = GridFunction::from_physical(g, [](auto) { return complex(1.0); });
  for (double p : {1.5, 2.0, 3.0, 7.0}) EXPECT_NEAR(norm(one, LpNorm{p}), std::pow(2 * pi, 1.0 / p), 1e-12);
  EXPECT_THROW(norm(one, LpNorm{1.0}), DomainError);
}

TEST(Norms, NegativeSobolevAndExtrapolated) {
  const auto g = fixtures::grid(64);
  EXPECT_NEAR(norm(fixtures::mode(g, 2), NegativeSobolevNorm{-2.0}), 0.2, 1e-14);
  EXPECT_NEAR(norm(fixtures::mode(g, 1), ExtrapolatedNorm{fixtures::h1(), 0.0}), 0.5, 1e-14);
  EXPECT_NEAR(norm(fixtures::mode(g, 3), ExtrapolatedNorm{fixtures::td1(), pi / 2}), 1.0 / 28.0, 1e-14);
}

TEST(Norms, RejectNonFinite) {
  const auto g = fixtures::grid(16);
  auto f = fixtures::mode(g, 0);
  f.values()[3] = complex(std::nan(""), 0.0);
  EXPECT_THROW(norm(f, LpNorm{2.0}), NumericError);
}

TEST(OperatorNorm, Multipliers) {
  const auto g = fixtures::grid(64);
  EXPECT_NEAR(multiplier_operator_norm([](std::span<const double> xi) { return std::exp(-(1.0 + xi[0] * xi[0])); }, *g),
              std::exp(-1.0), 1e-15);
  const complex c(0.6, -0.8);
  EXPECT_NEAR(multiplier_operator_norm([c](auto) { return c; }, *g), 1.0, 1e-15);
  EXPECT_NEAR(multiplier_operator_norm(
                  [](std::span<const double> xi) { return complex(3.0 / (3.0 + 1.0 + xi[0] * xi[0])); }, *g),
              0.75, 1e-15);
}

TEST(TestSet, BandLimitedAndNested) {
  const auto g = fixtures::grid(128);
  const auto a = band_limited_test_set(g, 4, 4, 7);
  const auto b = band_limited_test_set(g, 8, 4, 7);
  for (int j = 0; j < 4; ++j) EXPECT_EQ(fixtures::max_abs_diff(a[j], b[j]), 0.0);
  for (const auto& f : b) {
    EXPECT_NEAR(l2_norm(f), 1.0, 1e-14);
    EXPECT_LT(spectral_tail_fraction(f), 1e-8);
  }
  EXPECT_THROW(band_limited_test_set(g, 1, 32, 7), ConfigError);
}

TEST(TestSet, BandLimit) {
  const auto g = fixtures::grid(64);
  const auto f = fixtures::mode(g, 1) + fixtures::mode(g, 9);
  EXPECT_LT(fixtures::max_abs_diff(band_limit(f, 4), fixtures::mode(g, 1)), 1e-14);
}
