// Variation-of-constants solve for the commuting perturbation
// B(t) = 0.5 (1 + |xi|^2)^{-1} on a(t, xi) = (2 + sin t) xi^2 + 1,
// compared against the closed-form perturbed multiplier on a step ladder.

#include <cmath>
#include <cstdio>
#include <memory>
#include <numbers>

#include "evofam/perturbation.hpp"

using namespace evofam;

int main() {
  const double pi = std::numbers::pi;
  const SymbolSpec spec(1, 2, 2 * pi,
                        {SymbolTerm{{2}, CoefficientFunction(-2.0, {}, {{1.0, 0.0, -1.0}})},
                         SymbolTerm{{0}, CoefficientFunction(1.0)}});
  const PropagatorEngine U(spec);
  const PerturbationFamily B = MultiplierFamily{CoefficientFunction(0.5), RationalProfile{{1.0}, {1.0, 1.0}}};
  const auto grid = std::make_shared<const Grid>(1, 256, 2 * pi);
  const auto x = band_limited_test_set(grid, 1, 4, 7)[0];
  const auto exact = perturbed_oracle(U, B, 0.0, 1.0, x);

  std::printf("%8s %14s %8s %14s %7s\n", "steps", "oracle error", "order", "duhamel", "sweeps");
  double prev = 0.0;
  for (int m = 32; m <= 1024; m *= 2) {
    const auto tr = solve_perturbed(U, B, 0.0, 1.0, x, VolterraSolver{m});
    const double err = l2_norm(tr.values.back() - exact) / l2_norm(exact);
    const double order = prev > 0.0 ? std::log2(prev / err) : std::nan("");
    std::printf("%8d %14.6e %8.3f %14.6e %7d\n", m, err, order, duhamel_residual(tr, U, B, 0.0, x),
                tr.max_sweeps_used);
    prev = err;
  }
  return 0;
}
