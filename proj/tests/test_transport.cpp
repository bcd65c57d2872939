#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "evofam/transport.hpp"

using namespace evofam;

namespace {

TransportProblem problem(double mu = 1.0, int cells = 400) {
  TransportProblem p;
  p.horizon = 1.0;
  p.xmax = 8.0;
  p.cells = cells;
  p.g = TransportField{CoefficientFunction(1.0)};
  p.mu = TransportField{CoefficientFunction(mu)};
  return p;
}

}  // namespace

TEST(Transport, PureTranslationConservesMass) {
  const auto p = problem(0.0);
  const auto st = transport_solve(p, 0.0, 0.5, Indicator{1.0, 2.0});
  EXPECT_NEAR(st.mass(p.spacing()), 1.0, 1e-12);
  EXPECT_EQ(st.outflow, 0.0);
  // the centre of mass moves with speed one
  double m1 = 0.0;
  for (int i = 0; i < p.cells; ++i) m1 += p.centre(i) * st.cells[i] * p.spacing();
  EXPECT_NEAR(m1, 2.0, 2e-2);
}

TEST(Transport, DecayAtRateMu) {
  for (int cells : {400, 1600}) {
    const auto p = problem(1.0, cells);
    const auto st = transport_solve(p, 0.0, 0.5, Indicator{1.0, 2.0});
    EXPECT_NEAR(st.mass(p.spacing()), std::exp(-0.5), 1e-2 * 400.0 / cells);
  }
}

TEST(Transport, ZeroDataStaysZero) {
  const auto p = problem();
  const auto st = transport_solve(p, 0.0, 1.0, Indicator{3.0, 3.0});
  for (double v : st.cells) EXPECT_EQ(v, 0.0);
}

TEST(Transport, FamilyChecksOnAlignedLadder) {
  const auto p = problem();
  const double dt = transport_step(p);
  const double s = 20 * dt;
  const auto rep = transport_family_checks(p, 0.0, s, 1.0, Gaussian{});
  EXPECT_TRUE(rep.aligned);
  EXPECT_LE(rep.cocycle_defect, 1e-12);
  EXPECT_LE(rep.decay_ratio, rep.decay_bound);
  EXPECT_NEAR(rep.decay_bound, std::exp(-1.0), 1e-15);
  EXPECT_TRUE(rep.positive);
  EXPECT_LE(rep.worst_balance_defect, 1e-12);
  EXPECT_FALSE(rep.boundary_reached);
  EXPECT_TRUE(rep.pass);
}

TEST(Transport, VariableCoefficientsStayPositive) {
  auto p = problem();
  p.g = TransportField{CoefficientFunction(1.0), 0.5, 1.0};
  p.mu = TransportField{CoefficientFunction(1.5, {}, {{2.0, 0.0, 0.5}})};
  const auto rep = transport_family_checks(p, 0.0, 0.5, 1.0, Indicator{1.0, 2.0});
  EXPECT_TRUE(rep.positive);
  EXPECT_NEAR(rep.mu_min, 1.5, 1e-12);
  EXPECT_LE(rep.decay_ratio, rep.decay_bound);
  EXPECT_LE(rep.worst_balance_defect, 1e-12);
  EXPECT_THROW(characteristics_oracle(p, 0.0, 1.0, Gaussian{}), UnsupportedError);
}

TEST(Transport, SmoothDataConvergeAtFirstOrder) {
  const auto c = transport_convergence(problem(1.0, 200), 0.0, 1.0, Gaussian{}, 4);
  ASSERT_EQ(c.orders.size(), 3u);
  for (double o : c.orders) {
    EXPECT_GE(o, 0.8);
    EXPECT_LE(o, 1.1);
  }
}

TEST(Transport, IndicatorDataConvergeAtHalfOrder) {
  const auto c = transport_convergence(problem(1.0, 200), 0.0, 1.0, Indicator{1.0, 2.0}, 5);
  EXPECT_GE(c.orders.back(), 0.45);
  EXPECT_LT(c.orders.back(), 0.8);
}

TEST(Transport, OracleMatchesExactShift) {
  const auto p = problem(0.5);
  const auto st = characteristics_oracle(p, 0.0, 1.0, Indicator{1.0, 2.0});
  EXPECT_NEAR(st.mass(p.spacing()), std::exp(-0.5), 1e-14);
  EXPECT_NEAR(profile_integral(Gaussian{2.0, 0.3, 1.0}, -10.0, 10.0), 0.3 * std::sqrt(M_PI), 1e-14);
  EXPECT_NEAR(profile_integral(SmoothBump{}, 0.0, 2.0), 0.5 * profile_integral(SmoothBump{}, 0.0, 4.0), 1e-8);
}

TEST(Transport, RejectsBadProblems) {
  auto p = problem();
  p.g = TransportField{CoefficientFunction(0.0)};
  EXPECT_THROW(transport_solve(p, 0.0, 1.0, Gaussian{}), ConfigError);
  auto q = problem();
  q.dt = 1.0;
  EXPECT_THROW(transport_step(q), ConfigError);
  EXPECT_THROW(transport_solve(problem(), 0.5, 0.25, Gaussian{}), DomainError);
  EXPECT_THROW(transport_convergence(problem(), 0.0, 1.0, Gaussian{}, 1), ConfigError);
}
