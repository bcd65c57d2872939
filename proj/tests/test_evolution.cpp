#include <gtest/gtest.h>

#include <cmath>
#include <utility>
#include <vector>

#include "evofam/evolution.hpp"
#include "fixtures.hpp"

using namespace evofam;
using fixtures::pi;

namespace {

double product_error(const GridFunction& f, int steps, ProductRule rule) {
  const PropagatorEngine exact(fixtures::td1());
  const PropagatorEngine product(fixtures::td1(), ProductFormula{steps, rule});
  return l2_norm(product.propagate(0.0, 1.0, f) - exact.propagate(0.0, 1.0, f));
}

}  // namespace

TEST(Propagator, ClosedFormModeDecay) {
  const auto g = fixtures::grid(64);
  const PropagatorEngine engine(fixtures::td1());
  EXPECT_LT(engine.self_check_error(), 1e-12);
  const auto u = engine.propagate(0.0, pi, fixtures::mode(g, 1));
  auto expect = fixtures::mode(g, 1);
  expect *= std::exp(-(3 * pi + 2));
  EXPECT_LT(fixtures::max_abs_diff(u, expect), 1e-15);
  EXPECT_NEAR(l2_norm(u), std::exp(-(3 * pi + 2)), 1e-16);
}

TEST(Propagator, IdentityOnDiagonalAndTriangleCheck) {
  const auto g = fixtures::grid(64);
  const PropagatorEngine engine(fixtures::td1());
  const auto f = band_limited_test_set(g, 1, 4, 3)[0];
  EXPECT_LT(fixtures::max_abs_diff(engine.propagate(1.0, 1.0, f), f), 1e-15);
  EXPECT_THROW(engine.propagate(2.0, 1.0, f), DomainError);
  EXPECT_THROW(engine.propagate(0.0, 7.0, f), DomainError);
}

TEST(Propagator, CocycleOverRandomTriples) {
  const auto g = fixtures::grid(128);
  const PropagatorEngine engine(fixtures::td1());
  const auto vs = band_limited_test_set(g, 4, 8, 11);
  for (const auto& [r, s, t] : {std::tuple{0.0, 1.0, 2.0}, {0.3, 3.0, 6.0}, {1.0, 3.14, 3.15}})
    for (const auto& f : vs) EXPECT_LE(cocycle_defect(engine, r, s, t, f), 1e-10);
}

TEST(Propagator, StepCoefficientIntegratesAcrossJump) {
  const auto g = fixtures::grid(64);
  const PropagatorEngine engine(fixtures::jump());
  const auto u = engine.propagate(0.0, 2 * pi, fixtures::mode(g, 1));
  // (2 + H(t - pi)) + 1 integrated over [0, 2 pi] is 2 * 2 pi + pi + 2 pi
  EXPECT_NEAR(l2_norm(u), std::exp(-(7 * pi)), 1e-20);
}

TEST(ProductFormula, LeftEndpointIsFirstOrder) {
  const auto g = fixtures::grid(128);
  const auto f = band_limited_test_set(g, 1, 4, 5)[0];
  const double e64 = product_error(f, 64, ProductRule::left_endpoint);
  const double e128 = product_error(f, 128, ProductRule::left_endpoint);
  EXPECT_GE(e64 / e128, 1.6);
  EXPECT_LE(e64 / e128, 2.4);
}

TEST(ProductFormula, MidpointIsSecondOrder) {
  const auto g = fixtures::grid(128);
  const auto f = band_limited_test_set(g, 1, 4, 5)[0];
  const double e32 = product_error(f, 32, ProductRule::midpoint);
  const double e64 = product_error(f, 64, ProductRule::midpoint);
  EXPECT_GE(e32 / e64, 3.5);
  EXPECT_LE(e32 / e64, 4.5);
  EXPECT_LT(e64, product_error(f, 64, ProductRule::left_endpoint));
}

TEST(Derivatives, CentralDifferencesAreSecondOrder) {
  const auto g = fixtures::grid(128);
  const PropagatorEngine engine(fixtures::td1());
  const auto f = band_limited_test_set(g, 1, 4, 2)[0];
  for (auto which : {Derivative::dt, Derivative::ds}) {
    const double a = derivative_defect(engine, 0.25, 0.75, f, 4e-3, which);
    const double b = derivative_defect(engine, 0.25, 0.75, f, 2e-3, which);
    EXPECT_GE(a / b, 3.5);
    EXPECT_LE(a / b, 4.5);
  }
  EXPECT_THROW(derivative_defect(engine, 0.0, 0.5, f, 1e-3, Derivative::ds), DomainError);
  EXPECT_DOUBLE_EQ(default_derivative_step(0.0, 1.0), 1e-3);
}

TEST(Growth, ContractionWithRateOne) {
  const auto g = fixtures::grid(128);
  const PropagatorEngine engine(fixtures::td1());
  const std::vector<std::pair<double, double>> samples{{0.0, 0.5}, {1.0, 4.0}, {2.0, 2.0}, {0.0, 2 * pi}};
  const auto r = growth_bound(engine, *g, samples, 1.0, -1.0);
  EXPECT_TRUE(r.pass);
  for (std::size_t j = 0; j < samples.size(); ++j)
    EXPECT_NEAR(r.norms[j], std::exp(-(samples[j].second - samples[j].first)), 1e-14);
  EXPECT_FALSE(growth_bound(engine, *g, samples, 1.0, -1.5).pass);
}

TEST(Extrapolated, RestrictionAndNorms) {
  const auto g = fixtures::grid(128);
  const PropagatorEngine engine(fixtures::td1());
  const auto f = band_limited_test_set(g, 1, 4, 4)[0];
  const auto x = extrapolated_propagate(engine, 0.5, 2.0, f, Gauge::x);
  const auto xm = extrapolated_propagate(engine, 0.5, 2.0, f, Gauge::x_minus1);
  EXPECT_EQ(x.restriction_defect, 0.0);
  EXPECT_NEAR(x.norm, l2_norm(engine.propagate(0.5, 2.0, f)), 1e-15);
  EXPECT_LT(xm.norm, x.norm);
  const auto [nx, nxm] = extrapolated_operator_norms(engine, *g, 0.5, 2.0);
  EXPECT_NEAR(nx, nxm, 1e-15);
  EXPECT_NEAR(nx, std::exp(-1.5), 1e-14);
}
