// Difference quotients (1/t)||T(t)f - f|| for a smooth and a rough vector
// under the frozen heat-type semigroup of a(xi) = 1 + xi^2. The smooth one
// settles at ||A f||; the rough one grows like t^{-3/4} as t -> 0.

#include <cmath>
#include <cstdio>
#include <memory>
#include <numbers>
#include <vector>

#include "evofam/semigroup.hpp"

using namespace evofam;

int main() {
  const double pi = std::numbers::pi;
  const auto grid = std::make_shared<const Grid>(1, 4096, 2 * pi);
  const SymbolSpec spec(1, 2, 1.0,
                        {SymbolTerm{{2}, CoefficientFunction(-1.0)}, SymbolTerm{{0}, CoefficientFunction(1.0)}});
  const FrozenOperator op(spec, 0.0);

  const auto smooth = band_limited_test_set(grid, 1, 6, 1)[0];
  auto rough = GridFunction::from_physical(grid, [](std::span<const double> x) { return complex(x[0] > 0 ? 1.0 : 0.0); });
  rough *= 1.0 / l2_norm(rough);

  std::printf("# ||A f|| for the smooth vector: %.6f\n", l2_norm(apply_generator(op, smooth)));
  std::printf("%10s %14s %14s %14s\n", "t", "smooth F1", "rough F1", "rough F0");
  for (int e = 0; e >= -16; e -= 2) {
    const std::vector<double> t{std::ldexp(1.0, e)};
    std::printf("%10.3e %14.6f %14.6f %14.6f\n", t[0], favard_norm(op, smooth, FavardSpace::f1, t).value,
                favard_norm(op, rough, FavardSpace::f1, t).value, favard_norm(op, rough, FavardSpace::f0, t).value);
  }
  return 0;
}
