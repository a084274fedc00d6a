#include "sbary/polytope.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace sbary;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

}  // namespace

TEST(Polytope, UnitSquareFacetDistances) {
  const auto P = make_box(vec({0, 0}), vec({1, 1}));
  ASSERT_EQ(P.size(), 4u);
  ASSERT_EQ(P.facets().size(), 4u);
  const Vector x = P.chart().to_chart(vec({0.25, 0.5}));
  auto d = P.facet_distances(x);
  std::sort(d.begin(), d.end());
  EXPECT_NEAR(d[0], 0.25, 1e-15);
  EXPECT_NEAR(d[1], 0.5, 1e-15);
  EXPECT_NEAR(d[2], 0.5, 1e-15);
  EXPECT_NEAR(d[3], 0.75, 1e-15);
  EXPECT_NEAR(P.boundary_distance(x), 0.25, 1e-15);
}

TEST(Polytope, RayExitMatchesBisection) {
  std::mt19937_64 rng(3);
  const auto pts = oracle::random_convex_polygon(6, rng);
  const auto P = make_polygon(pts, "hexagon");
  ASSERT_EQ(P.facets().size(), 6u);
  Matrix N(6, 2);
  Vector off(6);
  for (std::size_t g = 0; g < 6; ++g) {
    N.row(static_cast<Eigen::Index>(g)) = P.facets()[g].normal.transpose();
    off(static_cast<Eigen::Index>(g)) = P.facets()[g].offset;
  }
  std::normal_distribution<double> normal;
  const Vector c = P.centroid();
  for (int t = 0; t < 50; ++t) {
    const Vector xi = vec({normal(rng), normal(rng)});
    const Vector x = c + 0.3 * vec({normal(rng), normal(rng)}) * P.boundary_distance(c);
    EXPECT_NEAR(P.ray_exit_distance(x, xi), oracle::bisect_exit(N, off, x, xi), 1e-12);
  }
}

TEST(Polytope, FacetDistancesMatchEdgeLines) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const auto pts = oracle::random_convex_polygon(5, rng);
    const auto P = make_polygon(pts);
    const Vector x = P.centroid();
    const auto d = P.facet_distances(x);
    // Every facet distance is the distance to some edge line, and each edge
    // line is matched once.
    std::vector<double> edges;
    const auto& V = P.vertices();
    for (std::size_t k = 0; k < V.size(); ++k)
      edges.push_back(oracle::segment_line_distance(P.chart().to_chart(V[k]),
                                                    P.chart().to_chart(V[(k + 1) % V.size()]), x));
    auto sd = d;
    std::sort(sd.begin(), sd.end());
    std::sort(edges.begin(), edges.end());
    for (std::size_t k = 0; k < sd.size(); ++k) EXPECT_NEAR(sd[k], edges[k], 1e-12);
  }
}

TEST(Polytope, LowerDimensionalHullUsesOrthonormalChart) {
  // A triangle sitting in a plane of R^3.
  std::vector<Vector> pts = {vec({1, 0, 0}), vec({0, 1, 0}), vec({0, 0, 1})};
  const auto P = build_polytope(pts, std::nullopt, "tri3");
  EXPECT_EQ(P.dim(), 2);
  EXPECT_EQ(P.ambient_dim(), 3);
  const Matrix& B = P.chart().basis;
  EXPECT_LT((B.transpose() * B - Matrix::Identity(2, 2)).norm(), 1e-14);
  const Vector y = vec({0.2, 0.3, 0.5});
  EXPECT_LT((P.chart().to_ambient(P.chart().to_chart(y)) - y).norm(), 1e-14);
  EXPECT_NEAR(P.chart().hull_residual(vec({1, 1, 1})), 2.0 / std::sqrt(3.0), 1e-14);
}

TEST(Polytope, DuplicatesAreMerged) {
  std::vector<Vector> pts = {vec({0}), vec({1}), vec({1 + 1e-13})};
  const auto P = build_polytope(pts);
  EXPECT_EQ(P.size(), 2u);
}

TEST(Polytope, RejectsBadInput) {
  EXPECT_THROW(build_polytope({vec({0, 0})}), Error);
  EXPECT_THROW(build_polytope({vec({0, 0}), vec({1})}), Error);
  EXPECT_THROW(build_polytope({vec({0, 0}), vec({std::nan(""), 1})}), Error);
  // Non-strictly convex polygon: the midpoint of an edge is listed.
  EXPECT_THROW(make_polygon({vec({0, 0}), vec({1, 0}), vec({2, 0}), vec({1, 1})}), Error);
  // A facet that cuts a vertex off.
  std::vector<Facet> bad = {{vec({1, 0}), 0.5}};
  try {
    build_polytope({vec({0, 0}), vec({1, 0}), vec({0, 1})}, bad);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_input);
  }
}

TEST(Polytope, ActiveFacetsAndFaceVertices) {
  const auto P = make_box(vec({0, 0}), vec({1, 1}));
  const Vector x = P.chart().to_chart(vec({1, 0.4}));
  const auto act = P.active_facets(x, 1e-12);
  ASSERT_EQ(act.size(), 1u);
  const auto on = P.vertices_on(act);
  ASSERT_EQ(on.size(), 2u);
  for (auto k : on) EXPECT_DOUBLE_EQ(P.vertices()[k](0), 1.0);
}

TEST(Polytope, SimplexShape) {
  const auto S = make_simplex(3);
  EXPECT_EQ(S.size(), 4u);
  EXPECT_EQ(S.dim(), 3);
  EXPECT_EQ(S.facets().size(), 4u);
  EXPECT_TRUE(S.contains(S.centroid(), 0.0));
}
