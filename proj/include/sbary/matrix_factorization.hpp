#ifndef SBARY_MATRIX_FACTORIZATION_HPP_
#define SBARY_MATRIX_FACTORIZATION_HPP_

// Polytopes of symmetric nonnegative matrices and the fixed-direction
// factorization of a matrix field u(y) inside one:
//
//   u(y) = sum_k p_k(u(y)) u_k = sum_{k,i} p_k(u(y)) mu_ki xi_ki xi_ki^T,
//
// so u = v v^T with columns v = sigma gamma, sigma^2 = p_k mu_ki, and
// directions gamma drawn from the finite set of vertex eigenvectors.

#include "sbary/barrier_weights.hpp"
#include "sbary/calculus.hpp"
#include "sbary/core.hpp"
#include "sbary/polytope.hpp"

#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace sbary {

/// Linear isometry between symmetric m x m matrices (Frobenius) and R^{m(m+1)/2}.
/// Layout: the diagonal u_11..u_mm, then sqrt(2) u_ij for i < j in row-major order.
class SymmetricEmbedding {
 public:
  explicit SymmetricEmbedding(int m = 1) : m_(m) {
    if (m < 1) throw Error(ErrorKind::invalid_input, "SymmetricEmbedding: m must be >= 1");
  }

  int matrix_dim() const { return m_; }
  int size() const { return m_ * (m_ + 1) / 2; }

  Vector embed(const Matrix& u) const {
    if (u.rows() != m_ || u.cols() != m_)
      throw Error(ErrorKind::invalid_input, "SymmetricEmbedding: matrix has wrong shape");
    Vector v(size());
    for (int i = 0; i < m_; ++i) v(i) = u(i, i);
    int at = m_;
    for (int i = 0; i < m_; ++i)
      for (int j = i + 1; j < m_; ++j) v(at++) = std::numbers::sqrt2 * 0.5 * (u(i, j) + u(j, i));
    return v;
  }

  Matrix unembed(const Vector& v) const {
    if (v.size() != size())
      throw Error(ErrorKind::invalid_input, "SymmetricEmbedding: vector has wrong length");
    Matrix u(m_, m_);
    for (int i = 0; i < m_; ++i) u(i, i) = v(i);
    int at = m_;
    for (int i = 0; i < m_; ++i)
      for (int j = i + 1; j < m_; ++j) u(i, j) = u(j, i) = v(at++) / std::numbers::sqrt2;
    return u;
  }

 private:
  int m_;
};

struct Eigenpair {
  double value = 0.0;           // mu_ki >= 0
  Vector direction;             // unit xi_ki
  std::size_t direction_index = 0;  // into MatrixPolytopeModel::directions
};

struct MatrixPolytopeModel {
  std::string name;
  SymmetricEmbedding embedding;
  Polytope polytope;
  std::vector<Matrix> vertex_matrices;
  std::vector<std::vector<Eigenpair>> eigen;
  std::vector<Vector> directions;  // deduplicated up to sign

  /// Chart coordinates of a matrix, plus the distance from its embedding to
  /// the affine hull.
  std::pair<Vector, double> to_chart(const Matrix& u) const {
    const Vector v = embedding.embed(u);
    return {polytope.chart().to_chart(v), polytope.chart().hull_residual(v)};
  }
};

namespace detail {

inline Vector canonical_sign(Vector v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > 1e-9) {
      if (v(i) < 0.0) v = -v;
      break;
    }
  }
  return v;
}

}  // namespace detail

/// Facets, when given, are half-spaces in the embedded coordinates.
inline MatrixPolytopeModel build_matrix_polytope(std::vector<Matrix> vertex_matrices,
                                                 std::optional<std::vector<Facet>> facets = std::nullopt,
                                                 std::string name = {}) {
  if (vertex_matrices.size() < 2)
    throw Error(ErrorKind::invalid_input, "build_matrix_polytope: need at least 2 vertex matrices");
  const auto m = static_cast<int>(vertex_matrices.front().rows());
  MatrixPolytopeModel model;
  model.name = name;
  model.embedding = SymmetricEmbedding(m);

  std::vector<Vector> embedded;
  for (std::size_t k = 0; k < vertex_matrices.size(); ++k) {
    const Matrix& u = vertex_matrices[k];
    const std::string tag = "build_matrix_polytope: vertex " + std::to_string(k);
    if (u.rows() != m || u.cols() != m)
      throw Error(ErrorKind::invalid_input, tag + " has wrong shape");
    if (!u.allFinite()) throw Error(ErrorKind::invalid_input, tag + " is not finite");
    const double norm = u.norm();
    if ((u - u.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, norm))
      throw Error(ErrorKind::invalid_input, tag + " is not symmetric");
    embedded.push_back(model.embedding.embed(u));
  }
  model.polytope = build_polytope(embedded, std::move(facets), name);
  // build_polytope drops near-duplicates; keep the matrices aligned with it.
  std::vector<Matrix> kept;
  for (const auto& v : model.polytope.vertices()) {
    for (std::size_t k = 0; k < embedded.size(); ++k)
      if ((embedded[k] - v).norm() == 0.0) {
        kept.push_back(vertex_matrices[k]);
        break;
      }
  }
  model.vertex_matrices = std::move(kept);

  for (std::size_t k = 0; k < model.vertex_matrices.size(); ++k) {
    const Matrix& u = model.vertex_matrices[k];
    const double norm = u.norm();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (u + u.transpose()));
    if (eig.eigenvalues().minCoeff() < -1e-10 * std::max(1.0, norm))
      throw Error(ErrorKind::invalid_input,
                  "build_matrix_polytope: vertex " + std::to_string(k) + " is indefinite");
    std::vector<Eigenpair> pairs;
    for (int i = 0; i < m; ++i) {
      const double mu = eig.eigenvalues()(i);
      if (mu < 1e-12 * norm) continue;
      Vector xi = detail::canonical_sign(eig.eigenvectors().col(i));
      std::size_t idx = model.directions.size();
      for (std::size_t g = 0; g < model.directions.size(); ++g) {
        const auto& dg = model.directions[g];
        if (std::min((dg - xi).norm(), (dg + xi).norm()) <= 1e-9) {
          idx = g;
          break;
        }
      }
      if (idx == model.directions.size()) model.directions.push_back(xi);
      pairs.push_back({mu, std::move(xi), idx});
    }
    model.eigen.push_back(std::move(pairs));
  }
  return model;
}

/// Active-constraint certificate that every listed matrix is an extreme
/// point of {u symmetric : trace u = 1, u_ii >= sum_{j != i} |u_ij|}: it
/// satisfies all constraints, and the active ones together with the trace
/// equation have full rank m(m+1)/2.
inline bool certify_diagonally_dominant_vertices(const std::vector<Matrix>& verts, double tol = 1e-12) {
  for (const auto& u : verts) {
    const auto m = static_cast<int>(u.rows());
    const int dim = m * (m + 1) / 2;
    if (std::abs(u.trace() - 1.0) > tol) return false;
    // Functionals on (u_11..u_mm, u_ij for i<j).
    auto offdiag_index = [m](int i, int j) {
      if (i > j) std::swap(i, j);
      int at = m;
      for (int a = 0; a < i; ++a) at += m - a - 1;
      return at + (j - i - 1);
    };
    std::vector<Vector> active;
    Vector trace = Vector::Zero(dim);
    trace.head(m).setOnes();
    active.push_back(trace);
    for (int i = 0; i < m; ++i) {
      const unsigned patterns = 1u << (m - 1);
      for (unsigned s = 0; s < patterns; ++s) {
        Vector f = Vector::Zero(dim);
        f(i) = 1.0;
        double value = u(i, i);
        int bit = 0;
        for (int j = 0; j < m; ++j) {
          if (j == i) continue;
          const double sign = (s >> bit++) & 1u ? -1.0 : 1.0;
          f(offdiag_index(i, j)) = -sign;
          value -= sign * u(i, j);
        }
        if (value < -tol) return false;
        if (value <= tol) active.push_back(f);
      }
    }
    Matrix A(static_cast<Eigen::Index>(active.size()), dim);
    for (std::size_t r = 0; r < active.size(); ++r) A.row(static_cast<Eigen::Index>(r)) = active[r].transpose();
    Eigen::FullPivLU<Matrix> lu(A);
    lu.setThreshold(1e-10);
    if (lu.rank() != dim) return false;
  }
  return true;
}

/// Diagonally dominant symmetric m x m matrices with unit trace, m in {2, 3}.
/// Vertices: e_i e_i^T, then (1/2)(e_i + e_j)(e_i + e_j)^T and
/// (1/2)(e_i - e_j)(e_i - e_j)^T for i < j.
inline MatrixPolytopeModel dd_trace1_polytope(int m) {
  if (m != 2 && m != 3)
    throw Error(ErrorKind::invalid_input, "dd_trace1_polytope: m must be 2 or 3");
  std::vector<Matrix> verts;
  for (int i = 0; i < m; ++i) {
    const Vector e = Vector::Unit(m, i);
    verts.push_back(e * e.transpose());
  }
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      const Vector plus = Vector::Unit(m, i) + Vector::Unit(m, j);
      const Vector minus = Vector::Unit(m, i) - Vector::Unit(m, j);
      verts.push_back(0.5 * plus * plus.transpose());
      verts.push_back(0.5 * minus * minus.transpose());
    }
  if (!certify_diagonally_dominant_vertices(verts))
    throw Error(ErrorKind::invalid_input, "dd_trace1_polytope: vertex certificate failed");

  std::optional<std::vector<Facet>> facets;
  if (m == 2) {
    // +-u_12 <= u_11 and +-u_12 <= u_22 in (u_11, u_22, sqrt2 u_12).
    const double r = 1.0 / std::numbers::sqrt2;
    facets.emplace();
    for (double s : {1.0, -1.0}) {
      Vector a(3), b(3);
      a << -1.0, 0.0, s * r;
      b << 0.0, -1.0, s * r;
      facets->push_back({a, 0.0});
      facets->push_back({b, 0.0});
    }
  }
  return build_matrix_polytope(std::move(verts), std::move(facets), "dd" + std::to_string(m));
}

struct SampleFactorization {
  Vector y;
  Matrix u;
  Vector weights;                          // p_k(u(y))
  std::vector<std::vector<double>> sigma2;  // [k][i] = p_k mu_ki
  Vector direction_coefficients;           // summed sigma^2 per model direction
  double reconstruction_error = 0.0;       // |sum sigma^2 gamma gamma^T - u|_F
  double weight_reconstruction_error = 0.0;  // |sum p_k u_k - u|_F
};

struct Factorization {
  std::vector<Vector> directions;
  std::vector<SampleFactorization> samples;
};

namespace detail {

inline std::string locate_violation(const MatrixPolytopeModel& model, const Vector& x, double residual) {
  const auto& P = model.polytope;
  if (residual > 1e-9 * std::max(1.0, P.diameter()))
    return "matrix is off the affine hull of the vertices (distance " + std::to_string(residual) + ")";
  if (P.has_facets()) {
    const auto dist = P.facet_distances(x);
    for (std::size_t g = 0; g < dist.size(); ++g)
      if (dist[g] < -P.facet_tolerance())
        return "matrix violates facet " + std::to_string(g) + " by " + std::to_string(-dist[g]);
  }
  return {};
}

inline SampleFactorization assemble_sample(const MatrixPolytopeModel& model, Vector y, Matrix u,
                                           Vector weights) {
  SampleFactorization s;
  s.y = std::move(y);
  s.weights = std::move(weights);
  s.direction_coefficients = Vector::Zero(static_cast<Eigen::Index>(model.directions.size()));
  const auto m = model.embedding.matrix_dim();
  Matrix by_vertex = Matrix::Zero(m, m);
  Matrix by_direction = Matrix::Zero(m, m);
  for (std::size_t k = 0; k < model.eigen.size(); ++k) {
    const double pk = s.weights(static_cast<Eigen::Index>(k));
    by_vertex += pk * model.vertex_matrices[k];
    std::vector<double> row;
    for (const auto& ep : model.eigen[k]) {
      const double c = pk * ep.value;
      row.push_back(c);
      s.direction_coefficients(static_cast<Eigen::Index>(ep.direction_index)) += c;
    }
    s.sigma2.push_back(std::move(row));
  }
  for (std::size_t g = 0; g < model.directions.size(); ++g)
    by_direction += s.direction_coefficients(static_cast<Eigen::Index>(g)) *
                    model.directions[g] * model.directions[g].transpose();
  s.reconstruction_error = (by_direction - u).norm();
  s.weight_reconstruction_error = (by_vertex - u).norm();
  s.u = std::move(u);
  return s;
}

}  // namespace detail

inline SampleFactorization factorize_point(const MatrixPolytopeModel& model, const Matrix& u,
                                           const SolverOptions& opts = {}, Vector y = {}) {
  const auto [x, residual] = model.to_chart(u);
  if (auto why = detail::locate_violation(model, x, residual); !why.empty())
    throw Error(ErrorKind::outside_polytope, "factorize: " + why);
  const auto sol = weights_on_closure(model.polytope, x, opts);
  return detail::assemble_sample(model, std::move(y), u, sol.weights);
}

/// Factorizes every sample; weights are solved concurrently.
inline Factorization factorize_field(const MatrixPolytopeModel& model,
                                     const std::vector<std::pair<Vector, Matrix>>& samples,
                                     const SolverOptions& opts = {}) {
  std::vector<Vector> pts;
  pts.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto [x, residual] = model.to_chart(samples[i].second);
    if (auto why = detail::locate_violation(model, x, residual); !why.empty())
      throw Error(ErrorKind::outside_polytope,
                  "factorize: sample " + std::to_string(i) + ": " + why);
    pts.push_back(x);
  }
  const auto solved = batch_solve(model.polytope, pts, opts);
  Factorization out;
  out.directions = model.directions;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!solved[i].ok())
      throw Error(solved[i].error_kind.value_or(ErrorKind::outside_polytope),
                  "factorize: sample " + std::to_string(i) + ": " + solved[i].error);
    out.samples.push_back(detail::assemble_sample(model, samples[i].first, samples[i].second,
                                                  solved[i].solution->weights));
  }
  return out;
}

/// Embeds a sampled matrix field for estimate_sqrt_lipschitz.
inline SampledField embed_field(const MatrixPolytopeModel& model, std::vector<int> shape,
                                const std::vector<std::pair<Vector, Matrix>>& samples) {
  SampledField f;
  f.shape = std::move(shape);
  for (const auto& [y, u] : samples) {
    f.y.push_back(y);
    f.u.push_back(model.embedding.embed(u));
  }
  return f;
}

}  // namespace sbary

#endif  // SBARY_MATRIX_FACTORIZATION_HPP_
