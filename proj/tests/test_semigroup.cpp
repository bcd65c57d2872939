#include <gtest/gtest.h>

#include <cmath>

#include "evofam/semigroup.hpp"
#include "fixtures.hpp"

using namespace evofam;
using fixtures::pi;

namespace {

double amplitude(const GridFunction& f, int k) {
  const auto fr = f.as_frequency();
  const std::vector<int> kk{k};
  const auto m = fixtures::mode(f.grid_ptr(), k).as_frequency();
  const auto b = f.grid().bin_of(kk);
  return std::abs(fr.values()[b] / m.values()[b]);
}

}  // namespace

TEST(FrozenSemigroup, DecayOfModes) {
  const auto g = fixtures::grid(64);
  const FrozenOperator op(fixtures::h1(), 0.0);
  EXPECT_NEAR(amplitude(frozen_semigroup(op, 1.0, fixtures::mode(g, 1)), 1), std::exp(-2.0), 1e-14);
  EXPECT_NEAR(amplitude(frozen_semigroup(op, 0.5, fixtures::mode(g, 3)), 3), std::exp(-5.0), 1e-14);
  EXPECT_THROW(frozen_semigroup(op, -1.0, fixtures::mode(g, 1)), DomainError);
}

TEST(FrozenSemigroup, SemigroupLaw) {
  const auto g = fixtures::grid(128);
  const FrozenOperator op(fixtures::td1(), 1.2);
  for (const auto& f : band_limited_test_set(g, 4, 8, 5)) {
    const auto two = frozen_semigroup(op, 0.3, frozen_semigroup(op, 0.4, f));
    EXPECT_LT(fixtures::max_abs_diff(two, frozen_semigroup(op, 0.7, f)), 1e-14);
    EXPECT_LE(l2_norm(frozen_semigroup(op, 0.7, f)), l2_norm(f));
  }
}

TEST(FrozenResolvent, ModeAndIdentity) {
  const auto g = fixtures::grid(64);
  const FrozenOperator op(fixtures::h1(), 0.0);
  EXPECT_NEAR(amplitude(frozen_resolvent(op, 1.0, fixtures::mode(g, 2)), 2), 1.0 / 6.0, 1e-15);
  const auto f = band_limited_test_set(g, 1, 6, 2)[0];
  const complex l(2.0, 1.0), m(0.5, -3.0);
  // R(l) - R(m) = (m - l) R(l) R(m)
  const auto lhs = frozen_resolvent(op, l, f) - frozen_resolvent(op, m, f);
  auto rhs = frozen_resolvent(op, l, frozen_resolvent(op, m, f));
  rhs *= m - l;
  EXPECT_LT(fixtures::max_abs_diff(lhs, rhs), 1e-14);
  const FrozenOperator bad(fixtures::h1(), 0.0);
  EXPECT_THROW(frozen_resolvent(bad, -1.0, fixtures::mode(g, 0)), NumericError);
}

TEST(Laplace, ConstantModeAndResidual) {
  const auto g = fixtures::grid(64);
  const FrozenOperator op(fixtures::h1(), 0.0);
  const auto q = laplace_quadrature_multiplier(op, 2.0, *g, 40.0, 64);
  EXPECT_NEAR(std::abs(q[0] - 1.0 / 3.0), 0.0, 1e-13);
  const auto f = band_limited_test_set(g, 1, 4, 9)[0];
  EXPECT_LE(laplace_transform_check(op, 2.0, f, 40.0, 64), 1e-8);
  EXPECT_LE(laplace_transform_check(FrozenOperator(fixtures::td1(), 2.0), 2.0, f, 40.0, 64), 1e-8);
}

TEST(Laplace, TruncationErrorShrinksWithHorizon) {
  const auto g = fixtures::grid(64);
  const FrozenOperator op(fixtures::h1(), 0.0);
  const auto f = fixtures::mode(g, 0);
  const double r10 = laplace_transform_check(op, 0.1, f, 10.0, 64);
  const double r20 = laplace_transform_check(op, 0.1, f, 20.0, 64);
  EXPECT_GE(r10 / r20, 1e3);
  EXPECT_NEAR(r10, laplace_tail_bound(op, 0.1, f, 10.0), 1e-6 * r10);
  EXPECT_THROW(laplace_transform_check(op, -2.0, f, 10.0, 8), DomainError);
}

TEST(Generator, DifferenceQuotientIsFirstOrder) {
  const auto g = fixtures::grid(64);
  const FrozenOperator op(fixtures::h1(), 0.0);
  const auto f = fixtures::mode(g, 1);
  const double e1 = generator_difference_quotient(op, f, 1e-3);
  const double e2 = generator_difference_quotient(op, f, 5e-4);
  EXPECT_NEAR(e1, 2e-3, 0.2 * 2e-3);
  EXPECT_GE(e1 / e2, 1.8);
  EXPECT_LE(e1 / e2, 2.2);
}

TEST(Favard, BandLimitedVectorsHaveGeneratorNorm) {
  const auto g = fixtures::grid(64);
  const FrozenOperator op(fixtures::h1(), 0.0);
  const auto f = fixtures::mode(g, 1);
  const auto ts = geometric_samples();
  const auto f1 = favard_norm(op, f, FavardSpace::f1, ts);
  EXPECT_NEAR(f1.value, 2.0, 1e-9);
  EXPECT_LT(f1.argmax_t, 1e-6);
  const auto f0 = favard_norm(op, f, FavardSpace::f0, ts);
  EXPECT_NEAR(f0.value, 1.0, 1e-9);
  const auto mixed = band_limited_test_set(g, 1, 4, 1)[0];
  EXPECT_NEAR(favard_norm(op, mixed, FavardSpace::f1, ts).value, l2_norm(apply_generator(op, mixed)), 1e-8);
}

TEST(Favard, RoughVectorHasLargeF1Quotient) {
  const auto g = fixtures::grid(1024);
  const FrozenOperator op(fixtures::h1(), 0.0);
  const auto step = GridFunction::from_physical(g, [](std::span<const double> x) { return complex(x[0] > 0 ? 1.0 : 0.0); });
  const auto ts = geometric_samples();
  EXPECT_GT(favard_norm(op, step, FavardSpace::f1, ts).value, 1e3);
  EXPECT_LT(favard_norm(op, step, FavardSpace::f0, ts).value, 1.3 * l2_norm(step));
}

TEST(Favard, GeometricSamples) {
  const auto s = geometric_samples();
  EXPECT_EQ(s.size(), 41u);
  EXPECT_DOUBLE_EQ(s.front(), std::ldexp(1.0, -40));
  EXPECT_DOUBLE_EQ(s.back(), 1.0);
  EXPECT_THROW(geometric_samples(1.0, 0.5), ConfigError);
}
