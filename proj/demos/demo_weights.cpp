// Barrier weights of a regular hexagon along a chord from the center to a
// vertex, with the derivative of each weight along the chord.

#include "sbary/sbary.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <vector>

int main() {
  using namespace sbary;
  std::vector<Vector> pts;
  for (int k = 0; k < 6; ++k) {
    const double t = 2.0 * std::numbers::pi * k / 6.0;
    Vector v(2);
    v << std::cos(t), std::sin(t);
    pts.push_back(v);
  }
  const auto P = make_polygon(pts, "hexagon");

  Vector dir(2);
  dir << 1.0, 0.0;
  std::printf("%6s  %-47s  %s\n", "s", "weights", "d/ds p");
  for (double s : {0.0, 0.25, 0.5, 0.75, 0.9, 0.99}) {
    const Vector x = P.chart().to_chart(s * dir);
    const auto sol = solve_weights(P, x);
    const auto der = differentiate(P, sol);
    const Vector dp = der.directional(P.chart().direction_to_chart(dir));
    std::printf("%6.2f ", s);
    for (Eigen::Index k = 0; k < sol.weights.size(); ++k) std::printf(" %7.4f", sol.weights(k));
    std::printf("   ");
    for (Eigen::Index k = 0; k < dp.size(); ++k) std::printf(" %7.3f", dp(k));
    std::printf("\n");
  }

  VerifyOptions opts;
  opts.samples = 20;
  const auto rep = run_verification(P, opts);
  std::printf("\n%zu checks over %d points: %s\n", rep.checks.checks.size(), rep.samples,
              rep.passed() ? "all passed" : "FAILED");
  return rep.passed() ? 0 : 1;
}
