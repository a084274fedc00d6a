#ifndef SBARY_CALCULUS_HPP_
#define SBARY_CALCULUS_HPP_

// First and second derivatives of the barrier weights by implicit
// differentiation of F(lambda(x), x) = 0, and numerical checks of the
// identities and bounds they satisfy.
//
// Notation: r_k = x - a_k, g = D lambda = D^2 U. The directional derivative
// of p_k along xi is
//
//   p_k,xi = p_k^2 ((lambda, xi) + (r_k, g xi)).

#include "sbary/barrier_weights.hpp"
#include "sbary/core.hpp"
#include "sbary/polytope.hpp"

#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace sbary {

struct WeightDerivatives {
  Matrix grad_p;  // n x d, row k = grad p_k(x)
  Matrix hess_U;  // d x d, D^2 U(x) = D lambda(x)
  WeightSolution base;

  Vector directional(const Vector& xi) const { return grad_p * xi; }
};

struct RepresentationCoefficients {
  Vector q;  // sum q_k = 1, sum q_k a_k = x; signs unrestricted
};

namespace detail {

inline void require_interior(const WeightSolution& sol, const char* op) {
  if (!sol.lambda.allFinite() || (sol.weights.array() <= 0.0).any())
    throw Error(ErrorKind::boundary_point, std::string(op) + ": solution is not interior");
}

}  // namespace detail

/// Derivatives from the primal optimality system. With A the (d+1) x n
/// matrix of columns (a_k, 1) and B = diag(p) A^T = QR,
///
///   grad p = diag(p) Q R^{-T} E,   D^2 U = -(R^{-T} E)^T (R^{-T} E),
///
/// where E selects the first d coordinates. This is the implicit
/// differentiation of F(lambda, x) = 0 written through the multipliers
/// (lambda, n - (x, lambda)); working with B instead of B^T B squares the
/// conditioning only once.
inline WeightDerivatives differentiate(const Polytope& P, const WeightSolution& sol) {
  detail::require_interior(sol, "differentiate");
  const Vector& p = sol.weights;
  const int d = P.dim();
  const auto n = static_cast<Eigen::Index>(P.size());
  Matrix B(n, d + 1);
  B.leftCols(d) = P.chart_vertices().transpose();
  B.col(d).setOnes();
  B = p.asDiagonal() * B;

  Eigen::HouseholderQR<Matrix> qr(B);
  const Matrix R = qr.matrixQR().topRows(d + 1).triangularView<Eigen::Upper>();
  const double rmax = R.diagonal().cwiseAbs().maxCoeff();
  if (!(R.diagonal().cwiseAbs().minCoeff() > 1e-14 * rmax))
    throw Error(ErrorKind::singular_jacobian, "differentiate: optimality system is singular");
  const Matrix E = Matrix::Identity(d + 1, d);
  const Matrix W = R.transpose().triangularView<Eigen::Lower>().solve(E);  // R^{-T} E
  const Matrix Q = qr.householderQ() * Matrix::Identity(n, d + 1);

  WeightDerivatives der;
  der.grad_p = p.asDiagonal() * (Q * W);
  der.hess_U = -W.transpose() * W;
  der.base = sol;
  return der;
}

/// Same derivatives by the dual route D lambda = -J^{-1} dF/dx, with
/// J = sum_k p_k^2 r_k r_k^T and dF/dx = (sum_k p_k^2 r_k) lambda^T + I.
inline WeightDerivatives differentiate_dual(const Polytope& P, const WeightSolution& sol) {
  detail::require_interior(sol, "differentiate_dual");
  const Matrix R = detail::offsets_from(P, sol.x);
  const Vector& p = sol.weights;
  const Matrix J = detail::dual_jacobian(R, p);
  const int d = P.dim();

  const Matrix dFdx = (R * p.cwiseAbs2()) * sol.lambda.transpose() +
                      p.sum() * Matrix::Identity(d, d);
  Eigen::LDLT<Matrix> ldlt(J);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.rcond() < 1e-20)
    throw Error(ErrorKind::singular_jacobian, "differentiate_dual: dual Jacobian is singular");

  WeightDerivatives der;
  der.hess_U = -ldlt.solve(dFdx);
  const Matrix lam_rows = sol.lambda.transpose().replicate(R.cols(), 1);
  der.grad_p = p.cwiseAbs2().asDiagonal() * (lam_rows + R.transpose() * der.hess_U);
  der.base = sol;
  return der;
}

struct CheckOptions {
  std::uint64_t seed = 20240607;
  int random_probes = 8;
  int random_coefficients = 8;
  double identity_tol = 1e-7;
  double bound_tol = 1e-8;
};

/// Chart basis vectors followed by `extra` random unit vectors.
inline std::vector<Vector> probe_directions(int d, int extra, std::uint64_t seed) {
  std::vector<Vector> out;
  for (int i = 0; i < d; ++i) out.push_back(Vector::Unit(d, i));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  for (int j = 0; j < extra; ++j) {
    Vector v(d);
    do {
      for (int i = 0; i < d; ++i) v(i) = normal(rng);
    } while (v.norm() < 1e-3);
    out.push_back(v.normalized());
  }
  return out;
}

/// Basis of {q : sum q_k = 0, sum q_k a_k = 0}, one column per direction.
inline Matrix representation_null_space(const Polytope& P) {
  const auto n = static_cast<Eigen::Index>(P.size());
  const int d = P.dim();
  Matrix A(d + 1, n);
  A.topRows(d) = P.chart_vertices();
  A.row(d).setOnes();
  Eigen::JacobiSVD<Matrix> svd(A, Eigen::ComputeFullV);
  const auto rank = static_cast<Eigen::Index>(d + 1);
  return svd.matrixV().rightCols(n - rank);
}

/// q = p + N t for a random t of the given spread.
inline RepresentationCoefficients random_representation(const Polytope& P, const WeightSolution& sol,
                                                        std::mt19937_64& rng, double spread = 1.0) {
  const Matrix N = representation_null_space(P);
  std::normal_distribution<double> normal(0.0, spread);
  Vector t(N.cols());
  for (Eigen::Index i = 0; i < t.size(); ++i) t(i) = normal(rng);
  return {sol.weights + N * t};
}

/// Sum of grad p_k is zero; sum grad p_k (x) a_k is the identity; hess_U is
/// symmetric and negative definite.
inline CheckReport check_derivative_invariants(const Polytope& P, const WeightDerivatives& der,
                                               double tol = 1e-9) {
  CheckReport rep;
  const int d = P.dim();
  const double grad_scale = std::max(1.0, der.grad_p.cwiseAbs().maxCoeff());
  const double sum_err = der.grad_p.colwise().sum().cwiseAbs().maxCoeff() / grad_scale;
  rep.checks.push_back(detail::identity_check("grad_sum_zero", sum_err, tol));
  const Matrix repro = P.chart_vertices() * der.grad_p;  // sum_k a_k grad p_k^T
  const double repro_err = (repro - Matrix::Identity(d, d)).cwiseAbs().maxCoeff() /
                           std::max(1.0, (P.chart_vertices().cwiseAbs() * der.grad_p.cwiseAbs()).maxCoeff());
  rep.checks.push_back(detail::identity_check("grad_reproduction", repro_err, tol));
  const double h_scale = std::max(1e-300, der.hess_U.cwiseAbs().maxCoeff());
  const double sym = (der.hess_U - der.hess_U.transpose()).cwiseAbs().maxCoeff() / h_scale;
  rep.checks.push_back(detail::identity_check("hessian_symmetry", sym, tol));
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (der.hess_U + der.hess_U.transpose()));
  const double top = eig.eigenvalues().maxCoeff();
  rep.checks.push_back({"hessian_negative_definite", top, 0.0, top < 0.0,
                        "largest eigenvalue of D^2 U"});
  return rep;
}

/// xi^T D^2U xi = -sum_k p_k,xi^2 / p_k^2 over probe directions.
inline CheckResult check_hessian_identity(const Polytope& P, const WeightDerivatives& der,
                                          const CheckOptions& opts = {}) {
  const Vector& p = der.base.weights;
  double worst = 0.0;
  for (const auto& xi : probe_directions(P.dim(), opts.random_probes, opts.seed)) {
    const double lhs = xi.dot(der.hess_U * xi);
    const double rhs = -(der.directional(xi).cwiseQuotient(p)).squaredNorm();
    worst = std::max(worst, detail::relative_error(lhs, rhs, std::max(std::abs(lhs), std::abs(rhs))));
  }
  return detail::identity_check("hessian_identity", worst, opts.identity_tol);
}

/// For any affine representation x = sum q_k a_k, sum q_k = 1:
/// sum q_k / p_k = n.
inline CheckResult check_representation_identity(const Polytope& P, const WeightSolution& sol,
                                                 const RepresentationCoefficients& rc,
                                                 double tol_per_vertex = 1e-7) {
  const auto n = static_cast<double>(P.size());
  if (rc.q.size() != sol.weights.size())
    throw Error(ErrorKind::invalid_input, "representation: wrong number of coefficients");
  const double scale = std::max(1.0, rc.q.cwiseAbs().maxCoeff());
  if (std::abs(rc.q.sum() - 1.0) > 1e-9 * scale ||
      (P.chart_vertices() * rc.q - sol.x).norm() > 1e-9 * scale * std::max(1.0, P.diameter()))
    throw Error(ErrorKind::invalid_input, "representation: coefficients do not represent x");
  const double err = std::abs(rc.q.cwiseQuotient(sol.weights).sum() - n);
  return {"representation_identity", err, tol_per_vertex * n, err <= tol_per_vertex * n, {}};
}

namespace detail {

inline double min_two_sided_exit(const Polytope& P, const Vector& x, const Vector& xi) {
  return std::min(P.ray_exit_distance(x, xi), P.ray_exit_distance(x, -xi));
}

}  // namespace detail

namespace detail {

// sup over xi != 0 of |(g, xi)| / max_j |(w_j, xi)|, i.e. the dual of the
// polyhedral norm max_j |(w_j, .)|. The sup of (g, xi) over
// {xi : |(w_j, xi)| <= 1} is attained at a vertex, so enumerate the vertices
// cut out by d of the constraints.
inline double polyhedral_dual_norm(const Vector& g, const std::vector<Vector>& w) {
  const auto d = static_cast<int>(g.size());
  const auto m = static_cast<int>(w.size());
  double best = 0.0;
  std::vector<int> pick(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) pick[static_cast<std::size_t>(i)] = i;
  Matrix A(d, d);
  while (true) {
    for (int i = 0; i < d; ++i) A.row(i) = w[static_cast<std::size_t>(pick[static_cast<std::size_t>(i)])].transpose();
    Eigen::FullPivLU<Matrix> lu(A);
    if (lu.isInvertible()) {
      for (unsigned signs = 0; signs < (1u << d); ++signs) {
        Vector rhs(d);
        for (int i = 0; i < d; ++i) rhs(i) = (signs >> i) & 1u ? -1.0 : 1.0;
        const Vector xi = lu.solve(rhs);
        double worst = 0.0;
        for (const auto& wj : w) worst = std::max(worst, std::abs(wj.dot(xi)));
        if (worst <= 1.0 + 1e-9) best = std::max(best, std::abs(g.dot(xi)) / worst);
      }
    }
    int i = d - 1;
    while (i >= 0 && pick[static_cast<std::size_t>(i)] == m - d + i) --i;
    if (i < 0) break;
    ++pick[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < d; ++j) pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
  }
  return best;
}

}  // namespace detail

/// Best constant at x in |p_k,xi| / p_k^{1/2} <= N max_G |(n_G, xi)| / d_G(x)^{1/2}:
/// the sup over all directions xi and vertices k of the left side divided
/// by the right-hand shape.
inline double sqrt_gradient_ratio(const Polytope& P, const WeightDerivatives& der) {
  const Vector& p = der.base.weights;
  const auto dist = P.facet_distances(der.base.x);
  std::vector<Vector> w;
  for (std::size_t g = 0; g < dist.size(); ++g)
    w.push_back(P.facets()[g].normal / std::sqrt(std::max(dist[g], 1e-300)));
  double best = 0.0;
  for (Eigen::Index k = 0; k < p.size(); ++k)
    best = std::max(best, detail::polyhedral_dual_norm(der.grad_p.row(k).transpose(), w) /
                              std::sqrt(p(k)));
  return best;
}

/// Every inequality on the weights and their derivatives. Needs facets.
inline CheckReport check_gradient_bounds(const Polytope& P, const WeightSolution& sol,
                                         const WeightDerivatives& der,
                                         const CheckOptions& opts = {}) {
  if (!P.has_facets())
    throw Error(ErrorKind::missing_facets, "check_gradient_bounds: facets required");
  const auto nv = static_cast<Eigen::Index>(P.size());
  const double n = static_cast<double>(nv);
  const Vector& p = sol.weights;
  const Matrix R = detail::offsets_from(P, sol.x);
  const double big_n2 = n + 4.0 * n * n;
  const double big_n = std::sqrt(big_n2);
  const double root = std::sqrt(n + 1.0);
  const auto probes = probe_directions(P.dim(), opts.random_probes, opts.seed);

  double hess_slack = std::numeric_limits<double>::infinity();
  double log_slack = hess_slack;
  for (const auto& xi : probes) {
    const double m = detail::min_two_sided_exit(P, sol.x, xi);
    const double len2 = xi.squaredNorm();
    hess_slack = std::min(hess_slack, detail::relative_slack(-big_n2 * len2 / (m * m),
                                                             xi.dot(der.hess_U * xi)));
    const Vector dp = der.directional(xi);
    for (Eigen::Index k = 0; k < nv; ++k)
      log_slack = std::min(log_slack, detail::relative_slack(std::abs(dp(k)) / p(k),
                                                             big_n * std::sqrt(len2) / m));
  }

  double lower_slack = std::numeric_limits<double>::infinity();
  double vertex_slack = lower_slack;
  double cross_slack = lower_slack;
  for (Eigen::Index j = 0; j < nv; ++j) {
    const Vector rj = R.col(j);
    const double len = rj.norm();
    if (len > 0.0) {
      const double dj = P.ray_exit_distance(sol.x, rj);
      lower_slack = std::min(lower_slack,
                             detail::relative_slack(dj / (n * dj + n * len), p(j)));
    }
    const Vector dp = der.directional(rj);  // along x - a_j
    vertex_slack = std::min(vertex_slack, detail::relative_slack(std::abs(dp(j)), root));
    for (Eigen::Index k = 0; k < nv; ++k)
      cross_slack = std::min(cross_slack,
                             detail::relative_slack(std::abs(dp(k)), root * p(k) / p(j)));
  }

  std::mt19937_64 rng(opts.seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal;
  double weighted_slack = std::numeric_limits<double>::infinity();
  for (int t = 0; t < opts.random_coefficients; ++t) {
    Vector q(nv);
    for (Eigen::Index k = 0; k < nv; ++k) q(k) = normal(rng);
    const Vector xi = -R * q;  // sum q_k (a_k - x)
    const double lhs = der.directional(xi).cwiseQuotient(p).squaredNorm();
    const double rhs = (n + 1.0) * q.cwiseQuotient(p).squaredNorm();
    weighted_slack = std::min(weighted_slack, detail::relative_slack(lhs, rhs));
  }

  const double ratio = sqrt_gradient_ratio(P, der);

  CheckReport rep;
  rep.checks.push_back(detail::bound_check("lower_bound", lower_slack, opts.bound_tol,
                                           "p_k >= d/(n d + n |x - a_k|)"));
  rep.checks.push_back(detail::bound_check("vertex_direction_gradient_bound", vertex_slack,
                                           opts.bound_tol, "|p_k,(a_k - x)| <= (n+1)^1/2"));
  rep.checks.push_back(detail::bound_check("weighted_gradient_bound", weighted_slack,
                                           opts.bound_tol,
                                           "sum p_k,xi^2/p_k^2 <= (n+1) sum q_k^2/p_k^2"));
  rep.checks.push_back(detail::bound_check("cross_gradient_bound", cross_slack, opts.bound_tol,
                                           "|p_k,(x - a_j)| <= (n+1)^1/2 p_k/p_j"));
  rep.checks.push_back(detail::bound_check("hessian_lower_bound", hess_slack, opts.bound_tol,
                                           "U_xi,xi >= -(n+4n^2)|xi|^2/(d(x,xi) ^ d(x,-xi))^2"));
  rep.checks.push_back(detail::bound_check("log_gradient_bound", log_slack, opts.bound_tol,
                                           "|p_k,xi|/p_k <= N |xi|/(d(x,xi) ^ d(x,-xi))"));
  rep.checks.push_back({"sqrt_gradient_ratio", ratio, 0.0, std::isfinite(ratio),
                        "empirical constant in |p_k,xi|/p_k^1/2 <= N max_G |(n_G,xi)|/d_G^1/2"});
  return rep;
}

/// Identities for a zero-sum q (Pythagorean split), for xi = x - a_k, and
/// the j <-> k symmetry of p_k,(x - a_j)/p_k^2 + 1/p_j.
inline CheckReport check_second_order_identities(const Polytope& P, const WeightSolution& sol,
                                                 const WeightDerivatives& der,
                                                 const Vector& zero_sum_q,
                                                 const CheckOptions& opts = {}) {
  const auto nv = static_cast<Eigen::Index>(P.size());
  const double n = static_cast<double>(nv);
  if (zero_sum_q.size() != nv)
    throw Error(ErrorKind::invalid_input, "zero-sum coefficients have wrong size");
  if (std::abs(zero_sum_q.sum()) > 1e-12 * std::max(1.0, zero_sum_q.cwiseAbs().sum()))
    throw Error(ErrorKind::invalid_input, "coefficients do not sum to zero");
  const Vector& p = sol.weights;
  const Matrix R = detail::offsets_from(P, sol.x);

  CheckReport rep;
  {
    const Vector xi = -R * zero_sum_q;
    const Vector dp = der.directional(xi);
    const double lhs = zero_sum_q.cwiseQuotient(p).squaredNorm();
    const double a = dp.cwiseQuotient(p).squaredNorm();
    const double b = (dp - zero_sum_q).cwiseQuotient(p).squaredNorm();
    rep.checks.push_back(detail::identity_check(
        "pythagorean_identity", detail::relative_error(lhs, a + b, std::max(lhs, a + b)),
        opts.identity_tol));
  }

  // dp_all.col(j) = derivatives of all p along x - a_j.
  const Matrix dp_all = der.grad_p * R;
  double vtx_err = 0.0, range_slack = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < nv; ++k) {
    const Vector g = dp_all.col(k);
    const double lhs = g(k) + 1.0 - p(k);
    double alpha = lhs * lhs / (p(k) * p(k));
    for (Eigen::Index i = 0; i < nv; ++i)
      if (i != k) alpha += (g(i) - p(i)) * (g(i) - p(i)) / (p(i) * p(i));
    const double rhs = alpha * p(k) * p(k);
    vtx_err = std::max(vtx_err, detail::relative_error(
                                    lhs, rhs, std::max({1.0, std::abs(g(k)), std::abs(rhs)})));
    // 1 >= lhs and p_k >= g_k >= p_k - 1; all on an O(1) scale.
    range_slack = std::min({range_slack, 1.0 - lhs, p(k) - g(k), g(k) - (p(k) - 1.0)});
  }
  rep.checks.push_back(detail::identity_check("vertex_direction_identity", vtx_err, opts.identity_tol));
  rep.checks.push_back(detail::bound_check("vertex_direction_range", range_slack, opts.bound_tol,
                                           "p_k >= p_k,(x - a_k) >= p_k - 1"));

  double sym_err = 0.0, hess_err = 0.0;
  for (Eigen::Index k = 0; k < nv; ++k) {
    for (Eigen::Index j = 0; j < nv; ++j) {
      const double t1 = dp_all(k, j) / (p(k) * p(k));
      const double t2 = dp_all(j, k) / (p(j) * p(j));
      const double s_kj = t1 + 1.0 / p(j) - n;
      const double s_jk = t2 + 1.0 / p(k) - n;
      const double mixed = R.col(k).dot(der.hess_U * R.col(j));
      const double scale = std::max({std::abs(t1), std::abs(t2), 1.0 / p(j), 1.0 / p(k), n});
      sym_err = std::max(sym_err, detail::relative_error(s_kj, s_jk, scale));
      hess_err = std::max(hess_err, detail::relative_error(s_kj, mixed, scale));
    }
  }
  rep.checks.push_back(detail::identity_check("mixed_derivative_symmetry", sym_err, opts.identity_tol));
  rep.checks.push_back(detail::identity_check("mixed_derivative_hessian", hess_err, opts.identity_tol));
  return rep;
}

/// Removing a_1: the barrier values satisfy
///   U_{n-1}(t x) - n ln t + ln(t - 1) <= U(x),  t > 1, t x in P_1,
/// with equality at t = 1/(1 - p_1(x)); and when P_1 is full-dimensional,
/// grad U(x) = grad U_{n-1}(t x) / (1 - p_1(x)) at that t.
inline CheckReport check_vertex_removal(const Polytope& P, const WeightSolution& sol,
                                        const SolverOptions& solver = {},
                                        const CheckOptions& opts = {}) {
  CheckReport rep;
  const auto rec = check_recursion(P, sol, solver);
  rep.checks.push_back(detail::identity_check("recursion", rec.max_error, 1e-8,
                                              "p_k = (1 - p_1) pbar_k(x / (1 - p_1))"));
  if (!rec.reduced) return rep;
  const auto n = static_cast<double>(P.size());
  const Polytope& P1 = *rec.reduced;
  const double t0 = 1.0 / (1.0 - sol.weights(0));
  auto lhs_at = [&](double t, double U1) { return U1 - n * std::log(t) + std::log(t - 1.0); };
  const double U1 = rec.reduced_solution->barrier;
  const double eq_scale = std::abs(sol.barrier) + std::abs(U1) + n * std::abs(std::log(t0)) +
                          std::abs(std::log(t0 - 1.0));
  rep.checks.push_back(detail::identity_check(
      "barrier_recursion_equality",
      detail::relative_error(lhs_at(t0, U1), sol.barrier, eq_scale), opts.identity_tol));

  double slack = std::numeric_limits<double>::infinity();
  int tested = 0;
  SolverOptions sub = solver;
  sub.initial_dual.reset();
  for (double f : {0.8, 0.95, 1.05, 1.2}) {
    const double t = t0 * f;
    if (!(t > 1.0)) continue;
    const Vector y = sol.x * t;
    if (P1.chart().hull_residual(y) > 1e-9 * P1.diameter()) continue;
    try {
      const auto s1 = solve_weights(P1, P1.chart().to_chart(y), sub);
      slack = std::min(slack, detail::relative_slack(lhs_at(t, s1.barrier), sol.barrier));
      ++tested;
    } catch (const Error&) {
      // t x left P_1
    }
  }
  if (tested > 0)
    rep.checks.push_back(detail::bound_check("barrier_recursion_inequality", slack, opts.bound_tol,
                                             std::to_string(tested) + " scalings"));

  if (P1.dim() == P.dim()) {
    const Vector grad1 = P1.chart().basis * rec.reduced_solution->lambda;
    const Vector predicted = t0 * grad1;
    const double err = (predicted - sol.lambda).norm() /
                       std::max({1.0, predicted.norm(), sol.lambda.norm()});
    rep.checks.push_back(detail::identity_check("gradient_proportionality", err, opts.identity_tol));
  }
  return rep;
}

/// A point in the relative interior of facet g: a convex combination of the
/// facet's vertices with weights drawn from [1/2, 3/2].
inline Vector facet_interior_point(const Polytope& P, std::size_t g, std::mt19937_64& rng) {
  const std::size_t ids[] = {g};
  const auto on = P.vertices_on(ids);
  std::uniform_real_distribution<double> w(0.5, 1.5);
  Vector foot = Vector::Zero(P.dim());
  double total = 0.0;
  for (auto k : on) {
    const double wk = w(rng);
    foot += wk * P.chart_vertex(k);
    total += wk;
  }
  return foot / total;
}

/// Distance from a point of facet g to the nearest other facet hyperplane:
/// the length scale on which "close to facet g" is measured there.
inline double facet_local_scale(const Polytope& P, std::size_t g, const Vector& foot) {
  const auto d = P.facet_distances(foot);
  double scale = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < d.size(); ++j)
    if (j != g) scale = std::min(scale, d[j]);
  return std::isfinite(scale) ? scale : P.diameter();
}

struct BoundarySweep {
  std::vector<double> distances;  // d_G of each sampled point
  std::vector<double> ratios;     // sqrt_gradient_ratio at each point
};

/// Empirical constant of the square-root gradient bound along the inward
/// normal of facet g, starting from `foot` on the facet.
inline BoundarySweep boundary_ratio_sweep(const Polytope& P, std::size_t g, const Vector& foot,
                                          const std::vector<double>& distances,
                                          const SolverOptions& solver = {}) {
  BoundarySweep sweep;
  SolverOptions tight = solver;
  tight.boundary_eps = std::min(solver.boundary_eps, 1e-3 * distances.back() / P.diameter());
  for (double t : distances) {
    const Vector x = foot - t * P.facets()[g].normal;
    const auto sol = solve_weights(P, x, tight);
    sweep.distances.push_back(t);
    sweep.ratios.push_back(sqrt_gradient_ratio(P, differentiate(P, sol)));
  }
  return sweep;
}

struct VertexLimitReport {
  std::vector<double> path_parameters;
  std::vector<std::vector<double>> errors;  // [vertex][level] |U_(x - a_k) - (n - 1)|
  bool monotone = true;
  double worst_final = 0.0;
};

/// U_(x - a_k)(x) = n - 1/p_k(x) along x = a_k + t (centroid - a_k).
inline VertexLimitReport vertex_limit_check(const Polytope& P, const SolverOptions& opts = {},
                                            std::vector<double> levels = {1e-2, 1e-3, 1e-4}) {
  VertexLimitReport rep;
  rep.path_parameters = levels;
  const Vector c = P.centroid();
  const auto n = static_cast<double>(P.size());
  for (std::size_t k = 0; k < P.size(); ++k) {
    const Vector a = P.chart_vertex(k);
    std::vector<double> errs;
    for (double t : levels) {
      const Vector x = a + t * (c - a);
      const auto sol = solve_weights(P, x, opts);
      const double from_dual = sol.lambda.dot(x - a);
      const double from_weight = n - 1.0 / sol.weights(static_cast<Eigen::Index>(k));
      errs.push_back(std::max(std::abs(from_dual - (n - 1.0)), std::abs(from_weight - (n - 1.0))));
    }
    for (std::size_t i = 1; i < errs.size(); ++i)
      if (!(errs[i] < errs[i - 1])) rep.monotone = false;
    rep.worst_final = std::max(rep.worst_final, errs.back());
    rep.errors.push_back(std::move(errs));
  }
  return rep;
}

/// Samples of a map y -> u(y) on a 1-D or 2-D grid, row-major with the last
/// axis fastest. Values are in the ambient space of the polytope.
struct SampledField {
  std::vector<int> shape;
  std::vector<Vector> y;
  std::vector<Vector> u;
};

struct LipschitzEstimate {
  std::vector<double> per_vertex;          // max |sqrt p_k(u(y)) - sqrt p_k(u(y'))| / |y - y'|
  std::vector<double> coarse_per_vertex;   // same on the stride-2 subgrid
  double refinement_ratio = 1.0;           // worst max(fine/coarse, coarse/fine)
  bool stable = true;                      // refinement_ratio <= 1.05
  double second_difference_sup = 0.0;      // sup |second difference of u| / h^2
  double ceiling_shape = 0.0;              // sqrt of the above
};

namespace detail {

inline std::vector<double> grid_lipschitz(const std::vector<int>& shape, int stride,
                                          const std::vector<Vector>& y, const Matrix& roots) {
  std::vector<double> out(static_cast<std::size_t>(roots.cols()), 0.0);
  const int rows = shape[0];
  const int cols = shape.size() == 2 ? shape[1] : 1;
  auto idx = [&](int i, int j) { return static_cast<std::size_t>(i * cols + j); };
  auto visit = [&](std::size_t a, std::size_t b) {
    const double dy = (y[a] - y[b]).norm();
    if (!(dy > 0.0)) return;
    for (Eigen::Index k = 0; k < roots.cols(); ++k)
      out[static_cast<std::size_t>(k)] =
          std::max(out[static_cast<std::size_t>(k)],
                   std::abs(roots(static_cast<Eigen::Index>(a), k) -
                            roots(static_cast<Eigen::Index>(b), k)) / dy);
  };
  for (int i = 0; i < rows; i += stride)
    for (int j = 0; j < cols; j += (shape.size() == 2 ? stride : 1)) {
      if (i + stride < rows) visit(idx(i, j), idx(i + stride, j));
      if (shape.size() == 2 && j + stride < cols) visit(idx(i, j), idx(i, j + stride));
    }
  return out;
}

}  // namespace detail

/// Lipschitz constants of y -> p_k(u(y))^{1/2} on a sampled grid, with a
/// stride-2 refinement comparison and the sup of the field's second
/// differences (the quantity the Lipschitz ceiling scales with).
inline LipschitzEstimate estimate_sqrt_lipschitz(const Polytope& P, const SampledField& field,
                                                 const SolverOptions& opts = {}) {
  if (field.shape.empty() || field.shape.size() > 2)
    throw Error(ErrorKind::invalid_input, "estimate_sqrt_lipschitz: grid must be 1-D or 2-D");
  std::size_t total = 1;
  for (int s : field.shape) {
    if (s < 3) throw Error(ErrorKind::invalid_input, "estimate_sqrt_lipschitz: need >= 3 points per axis");
    total *= static_cast<std::size_t>(s);
  }
  if (field.y.size() != total || field.u.size() != total)
    throw Error(ErrorKind::invalid_input, "estimate_sqrt_lipschitz: sample count does not match grid");

  std::vector<Vector> chart_pts;
  chart_pts.reserve(total);
  for (std::size_t i = 0; i < total; ++i) {
    if (field.u[i].size() != P.ambient_dim())
      throw Error(ErrorKind::invalid_input, "estimate_sqrt_lipschitz: value has wrong dimension");
    if (P.chart().hull_residual(field.u[i]) > 1e-9 * std::max(1.0, P.diameter()))
      throw Error(ErrorKind::outside_polytope,
                  "estimate_sqrt_lipschitz: sample " + std::to_string(i) + " is off the affine hull");
    chart_pts.push_back(P.chart().to_chart(field.u[i]));
  }
  const auto solved = batch_solve(P, chart_pts, opts);
  Matrix roots(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(P.size()));
  for (std::size_t i = 0; i < total; ++i) {
    if (!solved[i].ok())
      throw Error(solved[i].error_kind.value_or(ErrorKind::outside_polytope),
                  "estimate_sqrt_lipschitz: sample " + std::to_string(i) + ": " + solved[i].error);
    roots.row(static_cast<Eigen::Index>(i)) =
        solved[i].solution->weights.cwiseMax(0.0).cwiseSqrt().transpose();
  }

  LipschitzEstimate est;
  est.per_vertex = detail::grid_lipschitz(field.shape, 1, field.y, roots);
  est.coarse_per_vertex = detail::grid_lipschitz(field.shape, 2, field.y, roots);
  const double floor = 1e-12;
  for (std::size_t k = 0; k < est.per_vertex.size(); ++k) {
    const double a = est.per_vertex[k], b = est.coarse_per_vertex[k];
    if (a <= floor && b <= floor) continue;
    const double r = std::max(a, b) / std::max(std::min(a, b), 1e-300);
    est.refinement_ratio = std::max(est.refinement_ratio, r);
  }
  est.stable = est.refinement_ratio <= 1.05;

  const int rows = field.shape[0];
  const int cols = field.shape.size() == 2 ? field.shape[1] : 1;
  auto at = [&](int i, int j) { return static_cast<std::size_t>(i * cols + j); };
  auto second = [&](std::size_t a, std::size_t b, std::size_t c) {
    const double h = 0.5 * ((field.y[b] - field.y[a]).norm() + (field.y[c] - field.y[b]).norm());
    if (!(h > 0.0)) return;
    const double v = (chart_pts[a] - 2.0 * chart_pts[b] + chart_pts[c]).norm() / (h * h);
    est.second_difference_sup = std::max(est.second_difference_sup, v);
  };
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) {
      if (i > 0 && i + 1 < rows) second(at(i - 1, j), at(i, j), at(i + 1, j));
      if (field.shape.size() == 2 && j > 0 && j + 1 < cols) second(at(i, j - 1), at(i, j), at(i, j + 1));
    }
  est.ceiling_shape = std::sqrt(est.second_difference_sup);
  return est;
}

}  // namespace sbary

#endif  // SBARY_CALCULUS_HPP_
