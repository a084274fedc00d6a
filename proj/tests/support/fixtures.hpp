#ifndef SBARY_TESTS_FIXTURES_HPP_
#define SBARY_TESTS_FIXTURES_HPP_

#include "sbary/sbary.hpp"
#include "support/oracles.hpp"

#include <initializer_list>
#include <random>
#include <string>
#include <vector>

namespace fixtures {

inline sbary::Vector vec(std::initializer_list<double> xs) {
  sbary::Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

inline sbary::Polytope unit_square() { return sbary::make_box(vec({0, 0}), vec({1, 1})); }

inline sbary::Polytope random_interval(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const double a = u(rng);
  const double len = 0.1 + std::abs(u(rng));
  return sbary::make_box(vec({a}), vec({a + len}));
}

inline sbary::Polytope random_triangle(std::mt19937_64& rng) {
  return sbary::make_polygon(oracle::random_convex_polygon(3, rng), "triangle");
}

inline sbary::Polytope random_hexagon(std::mt19937_64& rng) {
  return sbary::make_polygon(oracle::random_convex_polygon(6, rng), "hexagon");
}

// Cycles interval, triangle, square, hexagon.
inline sbary::Polytope mixed_polytope(int i, std::mt19937_64& rng) {
  switch (i % 4) {
    case 0: return random_interval(rng);
    case 1: return random_triangle(rng);
    case 2: return unit_square();
    default: return random_hexagon(rng);
  }
}

// Interior point with weights in the bulk and occasionally near a face.
inline sbary::Vector sample_point(const sbary::Polytope& P, std::mt19937_64& rng) {
  return sbary::random_interior_point(P, rng);
}

}  // namespace fixtures

#endif  // SBARY_TESTS_FIXTURES_HPP_
