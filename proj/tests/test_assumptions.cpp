#include <gtest/gtest.h>

#include <cmath>

#include "evofam/assumptions.hpp"
#include "fixtures.hpp"

using namespace evofam;
using fixtures::pi;

namespace {

constexpr double theta = 3 * pi / 4;

SymbolSpec one_plus_t() {
  return SymbolSpec(1, 2, 1.0,
                    {SymbolTerm{{2}, CoefficientFunction(-1.0)},
                     SymbolTerm{{0}, CoefficientFunction(1.0, {{1, 1.0}})}});
}

}  // namespace

TEST(Sector, EllipticSymbolsStayBelowBound) {
  const auto g = fixtures::grid(256);
  for (const auto& spec : {fixtures::h1(), fixtures::td1()}) {
    const auto r = check_sector(spec, *g, theta);
    EXPECT_TRUE(r.pass);
    EXPECT_LE(r.M, std::sqrt(2.0) + 1.0);
    EXPECT_GE(r.M, 1.0);
    EXPECT_GT(r.samples, 0u);
  }
  EXPECT_NEAR(check_sector(fixtures::td1(), *g, theta).M, std::sqrt(2.0), 1e-3);
}

TEST(Sector, ImaginarySymbolFails) {
  const auto g = fixtures::grid(256);
  const auto r = check_sector(fixtures::nonelliptic(), *g, theta);
  EXPECT_FALSE(r.pass);
  EXPECT_TRUE(std::isinf(r.M));
  EXPECT_FALSE(r.note.empty());
  EXPECT_THROW(check_sector(fixtures::h1(), *g, 1.0), DomainError);
}

TEST(Kato, ContractiveFamilies) {
  const auto g = fixtures::grid(128);
  for (const auto& spec : {fixtures::td1(), fixtures::h1()}) {
    const auto c = check_kato_stability(spec, *g);
    EXPECT_TRUE(c.pass);
    EXPECT_NEAR(c.M, 1.0, 1e-12);
    EXPECT_NEAR(c.omega, -1.0, 1e-12);
    EXPECT_TRUE(c.certifies(1.0, -1.0));
    EXPECT_GT(c.partitions, 0u);
  }
}

TEST(Lipschitz, OperatorDifference) {
  const auto g = fixtures::grid(256);
  const auto td1 = check_operator_lipschitz(fixtures::td1(), *g);
  EXPECT_TRUE(td1.pass);
  EXPECT_NEAR(td1.value, 0.778, 0.02 * 0.778);
  const auto h1 = check_operator_lipschitz(fixtures::h1(), *g);
  EXPECT_TRUE(h1.pass);
  EXPECT_EQ(h1.value, 0.0);
  EXPECT_NEAR(check_operator_lipschitz(one_plus_t(), *g).value, 1.0, 1e-6);
}

TEST(Lipschitz, ResolventAndSemigroup) {
  const auto g = fixtures::grid(128);
  const auto rep = check_lipschitz(fixtures::td1(), *g, theta);
  const auto sector = check_sector(fixtures::td1(), *g, theta);
  EXPECT_TRUE(rep.resolvent.pass);
  EXPECT_LE(rep.resolvent.value, sector.M * sector.M * rep.operator_difference.value * 1.05);
  EXPECT_TRUE(rep.semigroup.pass);
  EXPECT_GT(rep.semigroup.value, 0.0);
  const auto h1 = check_lipschitz(fixtures::h1(), *g, theta);
  EXPECT_EQ(h1.resolvent.value, 0.0);
  EXPECT_EQ(h1.semigroup.value, 0.0);
}

TEST(Lipschitz, JumpBlowsUp) {
  const auto g = fixtures::grid(128);
  const auto r = check_operator_lipschitz(fixtures::jump(), *g);
  EXPECT_FALSE(r.pass);
  EXPECT_GT(r.value, 1e4);
  EXPECT_LE(std::min(r.witness.s, r.witness.t), pi);
  EXPECT_GE(std::max(r.witness.s, r.witness.t), pi);
}

TEST(Equivalence, Kappa) {
  const auto g = fixtures::grid(256);
  const auto td1 = check_norm_equivalence(fixtures::td1(), *g);
  EXPECT_TRUE(td1.pass);
  EXPECT_NEAR(td1.kappa, 2.0, 0.04);
  EXPECT_NEAR(check_norm_equivalence(fixtures::h1(), *g).kappa, 1.0, 1e-15);
  EXPECT_THROW(check_norm_equivalence(fixtures::nonelliptic(), *g), NumericError);
}

TEST(Commuting, MultipliersCommute) {
  EXPECT_LT(check_commuting(fixtures::td1(), fixtures::grid(128)), 1e-14);
}

TEST(CdSystem, SmoothFamilyPasses) {
  const auto g = fixtures::grid(256);
  const auto vs = band_limited_test_set(g, 4, 4, 7);
  const auto r = certify_cd_system(fixtures::td1(), vs);
  EXPECT_TRUE(r.pass_x);
  EXPECT_TRUE(r.pass_xminus1);
  EXPECT_LE(r.strong_x.measured, 1.05 * r.strong_x.bound);
  EXPECT_EQ(r.test_vectors, 4u);
}

TEST(CdSystem, DiscontinuousFamilyFailsAcrossTheJump) {
  const auto g = fixtures::grid(256);
  const auto vs = band_limited_test_set(g, 4, 4, 7);
  const auto r = certify_cd_system(fixtures::jump(), vs);
  EXPECT_FALSE(r.pass_x);
  EXPECT_GT(r.strong_x.blowup_ratio, 10.0);
  const double lo = std::min(r.strong_x.witness.s, r.strong_x.witness.t);
  const double hi = std::max(r.strong_x.witness.s, r.strong_x.witness.t);
  EXPECT_LE(lo, pi);
  EXPECT_GE(hi, pi);
  EXPECT_LT(hi - lo, 1e-5);
  EXPECT_THROW(certify_cd_system(fixtures::td1(), std::span<const GridFunction>{}), ConfigError);
}
