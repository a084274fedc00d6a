// Monotone stencils for a 2x2 coefficient field along a closed path in the
// diagonally dominant unit-trace matrices. The support stays on the same
// eight lattice neighbours; only the coefficients move.

#include "sbary/sbary.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

int main() {
  using namespace sbary;
  const auto model = dd_trace1_polytope(2);
  const double h = 0.1;
  bool first = true;
  for (int i = 0; i <= 8; ++i) {
    const double y = 2.0 * std::numbers::pi * i / 8.0;
    const double a = 0.5 + 0.49 * std::sin(y);
    const double b = 0.2 * std::cos(y) * (1.0 - 0.98 * std::sin(y) * std::sin(y));
    Matrix u(2, 2);
    u << a, b, b, 1.0 - a;
    const auto s = factorize_point(model, u);
    const auto spec = build_stencil(model, s, h);
    if (first) {
      std::printf("%6s ", "y");
      for (const auto& d : spec.directions) std::printf("  (%2.0f,%2.0f) ", d(0), d(1));
      std::printf("  %9s\n", "center");
      first = false;
    }
    std::printf("%6.3f ", y);
    // One coefficient per direction; the +g and -g entries carry the same value.
    for (std::size_t g = 0; g < spec.directions.size(); ++g)
      std::printf(" %9.4f", spec.direction_weights[g] / (h * h));
    std::printf("  %9.3f\n", spec.center);
  }
  return 0;
}
