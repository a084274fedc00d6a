#ifndef SBARY_POLYTOPE_HPP_
#define SBARY_POLYTOPE_HPP_

#include "sbary/core.hpp"

#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace sbary {

/// Half-space {w : (normal, w) <= offset} whose boundary carries a facet.
/// Stored in chart coordinates with a unit normal.
struct Facet {
  Vector normal;
  double offset = 0.0;
};

/// Orthonormal parametrization of the affine hull of the vertex set.
/// The origin is the first vertex, so the first vertex has chart
/// coordinates zero. When the hull is full-dimensional the basis is the
/// identity and chart coordinates are ambient coordinates shifted by the
/// first vertex.
struct AffineChart {
  Vector origin;
  Matrix basis;  // ambient_dim x dim, orthonormal columns

  int dim() const { return static_cast<int>(basis.cols()); }
  int ambient_dim() const { return static_cast<int>(basis.rows()); }

  Vector to_chart(const Vector& ambient) const {
    return basis.transpose() * (ambient - origin);
  }
  Vector to_ambient(const Vector& chart) const {
    return origin + basis * chart;
  }
  Vector direction_to_chart(const Vector& ambient_dir) const {
    return basis.transpose() * ambient_dir;
  }
  Vector direction_to_ambient(const Vector& chart_dir) const {
    return basis * chart_dir;
  }
  /// Distance from an ambient point to the affine hull.
  double hull_residual(const Vector& ambient) const {
    return (to_ambient(to_chart(ambient)) - ambient).norm();
  }
};

struct RayExit {
  double distance = 0.0;
  std::size_t facet = 0;
};

/// Bounded convex polytope given by its vertices, with an optional facet
/// description. Immutable after construction.
class Polytope {
 public:
  static constexpr double kDedupTolerance = 1e-9;   // relative to diameter
  static constexpr double kRankTolerance = 1e-10;   // relative to sigma_max
  static constexpr double kFacetTolerance = 1e-10;  // relative to diameter

  const std::string& name() const { return name_; }
  std::size_t size() const { return vertices_.size(); }
  int dim() const { return chart_.dim(); }
  int ambient_dim() const { return chart_.ambient_dim(); }
  double diameter() const { return diameter_; }

  const std::vector<Vector>& vertices() const { return vertices_; }
  const AffineChart& chart() const { return chart_; }
  /// dim x n matrix, column k is vertex k in chart coordinates.
  const Matrix& chart_vertices() const { return chart_vertices_; }
  Vector chart_vertex(std::size_t k) const {
    return chart_vertices_.col(static_cast<Eigen::Index>(k));
  }

  bool has_facets() const { return !facets_.empty(); }
  const std::vector<Facet>& facets() const { return facets_; }

  Vector centroid() const { return chart_vertices_.rowwise().mean(); }

  /// Absolute tolerance for facet membership tests.
  double facet_tolerance() const { return kFacetTolerance * diameter_; }

  /// c_G - (n_G, x) for every facet G.
  std::vector<double> facet_distances(const Vector& x) const {
    require_facets("facet_distances");
    std::vector<double> out;
    out.reserve(facets_.size());
    for (const auto& f : facets_) out.push_back(f.offset - f.normal.dot(x));
    return out;
  }

  double boundary_distance(const Vector& x) const {
    const auto d = facet_distances(x);
    return *std::min_element(d.begin(), d.end());
  }

  bool contains(const Vector& x, double tol) const {
    require_facets("contains");
    for (const auto& f : facets_)
      if (f.normal.dot(x) > f.offset + tol) return false;
    return true;
  }

  /// Distance from x to the boundary along the ray x + t xi / |xi|, and the
  /// facet where the ray leaves.
  RayExit ray_exit(const Vector& x, const Vector& xi) const {
    require_facets("ray_exit_distance");
    const double len = xi.norm();
    if (!(len > 0.0))
      throw Error(ErrorKind::invalid_input, "ray_exit_distance: zero direction");
    const double outside_tol = 1e-12 * diameter_;
    RayExit best{std::numeric_limits<double>::infinity(), 0};
    for (std::size_t g = 0; g < facets_.size(); ++g) {
      const auto& f = facets_[g];
      const double gap = f.offset - f.normal.dot(x);
      if (gap < -outside_tol)
        throw Error(ErrorKind::outside_polytope,
                    "ray_exit_distance: point violates facet " +
                        std::to_string(g));
      const double rate = f.normal.dot(xi);
      if (rate <= 0.0) continue;
      const double t = std::max(gap, 0.0) * len / rate;
      if (t < best.distance) best = {t, g};
    }
    if (!std::isfinite(best.distance))
      throw Error(ErrorKind::invalid_input,
                  "ray_exit_distance: ray never leaves the polytope");
    return best;
  }

  double ray_exit_distance(const Vector& x, const Vector& xi) const {
    return ray_exit(x, xi).distance;
  }

  /// Facets whose hyperplane passes within tol of x.
  std::vector<std::size_t> active_facets(const Vector& x, double tol) const {
    std::vector<std::size_t> out;
    for (std::size_t g = 0; g < facets_.size(); ++g)
      if (facets_[g].offset - facets_[g].normal.dot(x) <= tol) out.push_back(g);
    return out;
  }

  /// Vertices lying on every listed facet.
  std::vector<std::size_t> vertices_on(std::span<const std::size_t> facet_ids) const {
    std::vector<std::size_t> out;
    const double tol = std::max(facet_tolerance(), 1e-9 * diameter_);
    for (std::size_t k = 0; k < size(); ++k) {
      const Vector v = chart_vertex(k);
      bool on_all = true;
      for (auto g : facet_ids) {
        if (std::abs(facets_[g].offset - facets_[g].normal.dot(v)) > tol) {
          on_all = false;
          break;
        }
      }
      if (on_all) out.push_back(k);
    }
    return out;
  }

 private:
  friend Polytope build_polytope(std::vector<Vector>, std::optional<std::vector<Facet>>,
                                 std::string);

  void require_facets(const char* op) const {
    if (facets_.empty())
      throw Error(ErrorKind::missing_facets,
                  std::string(op) + ": polytope has no facet description");
  }

  std::string name_;
  std::vector<Vector> vertices_;
  AffineChart chart_;
  Matrix chart_vertices_;
  std::vector<Facet> facets_;
  double diameter_ = 0.0;
};

namespace detail {

inline double max_pairwise_distance(const std::vector<Vector>& pts) {
  double best = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      best = std::max(best, (pts[i] - pts[j]).norm());
  return best;
}

inline int affine_rank(const Matrix& cols, double rel_tol) {
  if (cols.cols() <= 1) return 0;
  Matrix diffs(cols.rows(), cols.cols() - 1);
  for (Eigen::Index k = 1; k < cols.cols(); ++k)
    diffs.col(k - 1) = cols.col(k) - cols.col(0);
  Eigen::JacobiSVD<Matrix> svd(diffs);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > rel_tol * s(0)) ++rank;
  return rank;
}

}  // namespace detail

/// Builds a polytope from ambient vertices. Facets, when supplied, are in
/// ambient coordinates: {w : (normal, w) <= offset}. Near-duplicate points
/// are merged (first occurrence kept).
inline Polytope build_polytope(std::vector<Vector> points,
                               std::optional<std::vector<Facet>> facets = std::nullopt,
                               std::string name = {}) {
  if (points.empty())
    throw Error(ErrorKind::invalid_input, "build_polytope: no vertices");
  const auto ambient = points.front().size();
  for (const auto& p : points) {
    if (p.size() != ambient)
      throw Error(ErrorKind::invalid_input,
                  "build_polytope: vertices have mixed dimensions");
    if (!p.allFinite())
      throw Error(ErrorKind::invalid_input, "build_polytope: non-finite vertex");
  }

  const double raw_diam = detail::max_pairwise_distance(points);
  if (!(raw_diam > 0.0))
    throw Error(ErrorKind::invalid_input,
                "build_polytope: fewer than 2 distinct vertices");
  const double dedup = Polytope::kDedupTolerance * raw_diam;
  std::vector<Vector> unique;
  for (auto& p : points) {
    const bool dup = std::any_of(unique.begin(), unique.end(),
                                 [&](const Vector& q) { return (p - q).norm() <= dedup; });
    if (!dup) unique.push_back(std::move(p));
  }
  if (unique.size() < 2)
    throw Error(ErrorKind::invalid_input,
                "build_polytope: fewer than 2 distinct vertices");

  Polytope P;
  P.name_ = std::move(name);
  P.diameter_ = detail::max_pairwise_distance(unique);
  const auto n = static_cast<Eigen::Index>(unique.size());

  Matrix diffs(ambient, n - 1);
  for (Eigen::Index k = 1; k < n; ++k) diffs.col(k - 1) = unique[k] - unique[0];
  Eigen::JacobiSVD<Matrix> svd(diffs, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > Polytope::kRankTolerance * sv(0)) ++rank;

  P.chart_.origin = unique[0];
  // Full-dimensional hulls keep the ambient axes.
  if (rank == static_cast<Eigen::Index>(ambient))
    P.chart_.basis = Matrix::Identity(rank, rank);
  else
    P.chart_.basis = svd.matrixU().leftCols(rank);
  P.chart_vertices_.resize(rank, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    P.chart_vertices_.col(k) = P.chart_.to_chart(unique[k]);
    const double err = (P.chart_.to_ambient(P.chart_vertices_.col(k)) - unique[k]).norm();
    if (err > 1e-12 * std::max(1.0, P.diameter_))
      throw Error(ErrorKind::invalid_input,
                  "build_polytope: vertex " + std::to_string(k) +
                      " is off the numerical affine hull (near-degenerate input)");
  }
  P.vertices_ = std::move(unique);

  if (facets && !facets->empty()) {
    const double tol = P.facet_tolerance();
    const double touch_tol = std::max(tol, 1e-9 * P.diameter_);
    const int d = static_cast<int>(rank);
    std::vector<int> incidence(static_cast<std::size_t>(n), 0);
    for (std::size_t g = 0; g < facets->size(); ++g) {
      const auto& f = (*facets)[g];
      if (f.normal.size() != static_cast<Eigen::Index>(ambient))
        throw Error(ErrorKind::invalid_input,
                    "build_polytope: facet " + std::to_string(g) +
                        " normal has wrong dimension");
      Vector normal = P.chart_.basis.transpose() * f.normal;
      double offset = f.offset - f.normal.dot(P.chart_.origin);
      const double len = normal.norm();
      if (!(len > 1e-12 * f.normal.norm()))
        throw Error(ErrorKind::invalid_input,
                    "build_polytope: facet " + std::to_string(g) +
                        " is parallel to the affine hull");
      normal /= len;
      offset /= len;
      std::vector<Eigen::Index> touching;
      for (Eigen::Index k = 0; k < n; ++k) {
        const double gap = offset - normal.dot(P.chart_vertices_.col(k));
        if (gap < -tol)
          throw Error(ErrorKind::invalid_input,
                      "build_polytope: facet " + std::to_string(g) +
                          " violated by vertex " + std::to_string(k));
        if (gap <= touch_tol) touching.push_back(k);
      }
      Matrix on(d, static_cast<Eigen::Index>(touching.size()));
      for (std::size_t i = 0; i < touching.size(); ++i)
        on.col(static_cast<Eigen::Index>(i)) = P.chart_vertices_.col(touching[i]);
      if (static_cast<int>(touching.size()) < d ||
          detail::affine_rank(on, Polytope::kRankTolerance) < d - 1)
        throw Error(ErrorKind::invalid_input,
                    "build_polytope: facet " + std::to_string(g) +
                        " is not supported by d affinely independent vertices");
      for (auto k : touching) ++incidence[static_cast<std::size_t>(k)];
      P.facets_.push_back({std::move(normal), offset});
    }
    for (Eigen::Index k = 0; k < n; ++k)
      if (incidence[static_cast<std::size_t>(k)] < d)
        throw Error(ErrorKind::invalid_input,
                    "build_polytope: vertex " + std::to_string(k) +
                        " lies on fewer than d facets (not a vertex)");
  }
  return P;
}

/// Polytope spanned by a subset of the vertices of P. Its ambient space is
/// the chart space of P.
inline Polytope sub_polytope(const Polytope& P, std::span<const std::size_t> ids,
                             std::string name = {}) {
  std::vector<Vector> pts;
  pts.reserve(ids.size());
  for (auto k : ids) pts.push_back(P.chart_vertex(k));
  return build_polytope(std::move(pts), std::nullopt, std::move(name));
}

inline Polytope make_simplex(int d) {
  if (d < 1) throw Error(ErrorKind::invalid_input, "make_simplex: d must be >= 1");
  std::vector<Vector> verts(1, Vector::Zero(d));
  std::vector<Facet> facets;
  for (int i = 0; i < d; ++i) {
    verts.push_back(Vector::Unit(d, i));
    facets.push_back({-Vector::Unit(d, i), 0.0});
  }
  const double s = 1.0 / std::sqrt(static_cast<double>(d));
  facets.push_back({Vector::Constant(d, s), s});
  return build_polytope(std::move(verts), std::move(facets),
                        "simplex" + std::to_string(d));
}

inline Polytope make_box(const Vector& lows, const Vector& highs) {
  if (lows.size() != highs.size() || lows.size() < 1)
    throw Error(ErrorKind::invalid_input, "make_box: bound size mismatch");
  const auto D = static_cast<int>(lows.size());
  if (D > 20) throw Error(ErrorKind::invalid_input, "make_box: dimension too large");
  for (int i = 0; i < D; ++i)
    if (!(lows(i) < highs(i)))
      throw Error(ErrorKind::invalid_input, "make_box: empty extent on axis " +
                                                std::to_string(i));
  std::vector<Vector> verts;
  for (unsigned mask = 0; mask < (1u << D); ++mask) {
    Vector v(D);
    for (int i = 0; i < D; ++i) v(i) = (mask >> i) & 1u ? highs(i) : lows(i);
    verts.push_back(std::move(v));
  }
  std::vector<Facet> facets;
  for (int i = 0; i < D; ++i) {
    facets.push_back({Vector::Unit(D, i), highs(i)});
    facets.push_back({-Vector::Unit(D, i), -lows(i)});
  }
  return build_polytope(std::move(verts), std::move(facets), "box");
}

/// Convex polygon from 2-D points in any order; vertices are sorted
/// counter-clockwise around the centroid.
inline Polytope make_polygon(std::vector<Vector> pts, std::string name = "polygon") {
  if (pts.size() < 3)
    throw Error(ErrorKind::invalid_input, "make_polygon: need at least 3 vertices");
  Vector c = Vector::Zero(2);
  for (const auto& p : pts) {
    if (p.size() != 2) throw Error(ErrorKind::invalid_input, "make_polygon: points must be 2-D");
    c += p;
  }
  c /= static_cast<double>(pts.size());
  std::sort(pts.begin(), pts.end(), [&](const Vector& a, const Vector& b) {
    return std::atan2(a(1) - c(1), a(0) - c(0)) < std::atan2(b(1) - c(1), b(0) - c(0));
  });
  const double diam = detail::max_pairwise_distance(pts);
  const std::size_t n = pts.size();
  std::vector<Facet> facets;
  for (std::size_t i = 0; i < n; ++i) {
    const Vector& a = pts[i];
    const Vector& b = pts[(i + 1) % n];
    const Vector& next = pts[(i + 2) % n];
    const Vector e1 = b - a, e2 = next - b;
    const double cross = e1(0) * e2(1) - e1(1) * e2(0);
    if (!(cross > 1e-12 * diam * diam))
      throw Error(ErrorKind::invalid_input,
                  "make_polygon: input is not strictly convex");
    Vector normal(2);
    normal << e1(1), -e1(0);
    normal.normalize();
    facets.push_back({normal, normal.dot(a)});
  }
  return build_polytope(std::move(pts), std::move(facets), std::move(name));
}

}  // namespace sbary

#endif  // SBARY_POLYTOPE_HPP_
