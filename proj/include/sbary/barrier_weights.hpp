#ifndef SBARY_BARRIER_WEIGHTS_HPP_
#define SBARY_BARRIER_WEIGHTS_HPP_

// Log-barrier barycentric weights. For x in the interior of P the weights
// p_k(x) maximize sum_k ln p_k subject to sum p_k = 1, sum p_k a_k = x. The
// maximizer is p_k = 1 / (n - (x - a_k, lambda)) where lambda solves the
// dual stationarity system
//
//   F(lambda, x) = sum_k p_k (x - a_k) = 0,
//   dF/dlambda   = sum_k p_k^2 (x - a_k)(x - a_k)^T.
//
// F is the gradient of the convex dual phi(lambda) = -sum_k ln(n - (x-a_k,
// lambda)), so Newton from lambda = 0 (where p_k = 1/n) with a
// fraction-to-boundary cap and residual backtracking converges.

#include "sbary/core.hpp"
#include "sbary/polytope.hpp"

#include <limits>
#include <algorithm>
#include <cstddef>
#include <future>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace sbary {

struct SolverOptions {
  double tol = 1e-12;               // multiplied by n and max(1, diameter)
  int max_iter = 100;
  double fraction_to_boundary = 0.99;
  double boundary_eps = 1e-9;       // relative to diameter
  double min_weight = 1e-12;        // below this an iterate is "effectively boundary"
  std::optional<Vector> initial_dual;

  void validate() const {
    if (!(fraction_to_boundary > 0.0 && fraction_to_boundary < 1.0))
      throw Error(ErrorKind::invalid_input, "SolverOptions: fraction_to_boundary must be in (0,1)");
    if (!(tol > 0.0)) throw Error(ErrorKind::invalid_input, "SolverOptions: tol must be positive");
    if (max_iter < 1) throw Error(ErrorKind::invalid_input, "SolverOptions: max_iter must be >= 1");
  }
};

struct WeightSolution {
  Vector x;        // chart coordinates
  Vector lambda;   // dual vector, equals grad U(x)
  Vector weights;  // p_1..p_n
  double barrier = 0.0;
  double residual = 0.0;
  int iterations = 0;
};

namespace detail {

struct DualState {
  Vector slack;    // n - (x - a_k, lambda)
  Vector weights;  // 1 / slack
  Vector F;
};

inline DualState eval_dual(const Matrix& offsets, const Vector& lambda) {
  // offsets: d x n, column k = x - a_k
  const auto n = static_cast<double>(offsets.cols());
  DualState s;
  s.slack = (Vector::Constant(offsets.cols(), n) - offsets.transpose() * lambda).eval();
  s.weights = s.slack.cwiseInverse();
  s.F = offsets * s.weights;
  return s;
}

inline Matrix dual_jacobian(const Matrix& offsets, const Vector& weights) {
  const Vector w2 = weights.cwiseAbs2();
  return offsets * w2.asDiagonal() * offsets.transpose();
}

inline Matrix offsets_from(const Polytope& P, const Vector& x) {
  return (-P.chart_vertices()).colwise() + x;
}

inline void check_chart_point(const Polytope& P, const Vector& x, const char* op) {
  if (x.size() != P.dim())
    throw Error(ErrorKind::invalid_input,
                std::string(op) + ": point has dimension " + std::to_string(x.size()) +
                    ", chart dimension is " + std::to_string(P.dim()));
  if (!x.allFinite()) throw Error(ErrorKind::invalid_input, std::string(op) + ": non-finite point");
}

}  // namespace detail

/// Interior solve. Throws boundary_point / outside_polytope when facets show
/// x is not strictly interior, and non_convergence when Newton cannot reach
/// a dual-feasible stationary point.
inline WeightSolution solve_weights(const Polytope& P, const Vector& x,
                                    const SolverOptions& opts = {}) {
  opts.validate();
  detail::check_chart_point(P, x, "solve_weights");
  const auto n = static_cast<Eigen::Index>(P.size());
  const int d = P.dim();
  const double scale = std::max(1.0, P.diameter());

  if (P.has_facets()) {
    const double gap = P.boundary_distance(x);
    if (gap < -P.facet_tolerance())
      throw Error(ErrorKind::outside_polytope, "solve_weights: point is outside the polytope");
    if (gap <= opts.boundary_eps * P.diameter())
      throw Error(ErrorKind::boundary_point,
                  "solve_weights: point is on the boundary (use weights_on_closure)");
  }

  const Matrix offsets = detail::offsets_from(P, x);
  const double tol = opts.tol * static_cast<double>(n) * scale;

  Vector lambda = Vector::Zero(d);
  if (opts.initial_dual) {
    if (opts.initial_dual->size() != d)
      throw Error(ErrorKind::invalid_input, "solve_weights: initial dual has wrong dimension");
    lambda = *opts.initial_dual;
  }
  auto state = detail::eval_dual(offsets, lambda);
  if ((state.slack.array() <= 0.0).any())
    throw Error(ErrorKind::invalid_input, "solve_weights: initial dual is infeasible");

  // sum p - 1 = (F, lambda) / n, so a large dual needs F tighter than tol
  // for the weights to sum to one.
  const double partition_tol = opts.tol * static_cast<double>(n);
  // Round-off floor on (F, lambda) grows with |lambda| near the boundary.
  const double eps = std::numeric_limits<double>::epsilon();
  auto converged = [&](double r) {
    const double floor = 64.0 * eps * static_cast<double>(n) * scale * lambda.norm();
    return r <= tol && std::abs(state.F.dot(lambda)) <= std::max(partition_tol, floor);
  };
  double res = state.F.norm();
  int iter = 0;
  while (!converged(res)) {
    if (iter >= opts.max_iter)
      throw Error(ErrorKind::non_convergence,
                  "solve_weights: no convergence in " + std::to_string(opts.max_iter) +
                      " iterations (residual " + std::to_string(res) +
                      "); point outside or too close to the boundary");
    ++iter;
    const Matrix J = detail::dual_jacobian(offsets, state.weights);
    Eigen::LDLT<Matrix> ldlt(J);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        !(ldlt.vectorD().minCoeff() > 0.0) || ldlt.rcond() < 1e-20)
      throw Error(ErrorKind::singular_jacobian,
                  "solve_weights: dual Jacobian is numerically singular");
    const Vector step = ldlt.solve(-state.F);
    if (!step.allFinite())
      throw Error(ErrorKind::singular_jacobian,
                  "solve_weights: dual Jacobian is numerically singular");

    // Per-vertex fraction-to-boundary cap on the slacks.
    const Vector rate = offsets.transpose() * step;  // slack decreases by alpha * rate
    double alpha = 1.0;
    for (Eigen::Index k = 0; k < n; ++k)
      if (rate(k) > 0.0)
        alpha = std::min(alpha, opts.fraction_to_boundary * state.slack(k) / rate(k));

    bool accepted = false;
    for (int halving = 0; halving < 60; ++halving) {
      const Vector trial = lambda + alpha * step;
      auto next = detail::eval_dual(offsets, trial);
      const double next_res = next.F.norm();
      if ((next.slack.array() > 0.0).all() && next_res < (1.0 - 1e-4 * alpha) * res) {
        lambda = trial;
        state = std::move(next);
        res = next_res;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      // Round-off floor: accept the current iterate if it is already tight.
      if (res <= 1e3 * tol) break;
      throw Error(ErrorKind::non_convergence,
                  "solve_weights: line search failed (residual " + std::to_string(res) + ")");
    }
    if (state.weights.minCoeff() < opts.min_weight)
      throw Error(ErrorKind::boundary_point,
                  "solve_weights: weights collapsed below " + std::to_string(opts.min_weight) +
                      "; point is effectively on the boundary or outside");
  }

  // One undamped polishing step; kept only if it lowers the residual.
  if (res > 0.0) {
    Eigen::LDLT<Matrix> ldlt(detail::dual_jacobian(offsets, state.weights));
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
      const Vector trial = lambda + ldlt.solve(-state.F);
      if (trial.allFinite()) {
        auto next = detail::eval_dual(offsets, trial);
        if ((next.slack.array() > 0.0).all() && next.F.norm() < res) {
          lambda = trial;
          state = std::move(next);
          res = state.F.norm();
        }
      }
    }
  }

  WeightSolution sol;
  sol.x = x;
  sol.lambda = lambda;
  sol.weights = state.weights;
  sol.barrier = state.weights.array().log().sum();
  sol.residual = res;
  sol.iterations = iter;
  return sol;
}

inline double barrier_value(const Polytope& P, const Vector& x, const SolverOptions& opts = {}) {
  return solve_weights(P, x, opts).barrier;
}

/// Weights on the closed polytope. Boundary points are solved on the
/// minimal face containing them; off-face vertices get weight zero.
inline WeightSolution weights_on_closure(const Polytope& P, const Vector& x,
                                         const SolverOptions& opts = {}) {
  detail::check_chart_point(P, x, "weights_on_closure");
  if (!P.has_facets()) return solve_weights(P, x, opts);

  const double gap = P.boundary_distance(x);
  const double eps = opts.boundary_eps * P.diameter();
  if (gap < -std::max(eps, P.facet_tolerance()))
    throw Error(ErrorKind::outside_polytope,
                "weights_on_closure: point is outside the polytope");
  if (gap > eps) return solve_weights(P, x, opts);

  const auto active = P.active_facets(x, eps);
  const auto face = P.vertices_on(active);
  const auto n = static_cast<Eigen::Index>(P.size());
  WeightSolution sol;
  sol.x = x;
  sol.weights = Vector::Zero(n);
  sol.lambda = Vector::Constant(P.dim(), std::numeric_limits<double>::quiet_NaN());
  sol.barrier = -std::numeric_limits<double>::infinity();
  if (face.empty())
    throw Error(ErrorKind::outside_polytope,
                "weights_on_closure: no face contains the point");
  if (face.size() == 1) {
    sol.weights(static_cast<Eigen::Index>(face[0])) = 1.0;
    sol.residual = (P.chart_vertex(face[0]) - x).norm();
    return sol;
  }
  const Polytope F = sub_polytope(P, face);
  SolverOptions face_opts = opts;
  face_opts.initial_dual.reset();
  const Vector y = F.chart().to_chart(x);
  const WeightSolution inner = solve_weights(F, y, face_opts);
  for (std::size_t i = 0; i < face.size(); ++i)
    sol.weights(static_cast<Eigen::Index>(face[i])) = inner.weights(static_cast<Eigen::Index>(i));
  sol.residual = inner.residual;
  sol.iterations = inner.iterations;
  return sol;
}

struct BatchEntry {
  std::optional<WeightSolution> solution;
  std::optional<ErrorKind> error_kind;
  std::string error;

  bool ok() const { return solution.has_value(); }
};

/// Independent per-point solves; errors are recorded per entry. Output is
/// aligned with the input and does not depend on the thread count.
inline std::vector<BatchEntry> batch_solve(const Polytope& P, std::span<const Vector> points,
                                           const SolverOptions& opts = {},
                                           unsigned threads = 0) {
  std::vector<BatchEntry> out(points.size());
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      try {
        out[i].solution = weights_on_closure(P, points[i], opts);
      } catch (const Error& e) {
        out[i].error_kind = e.kind();
        out[i].error = e.what();
      }
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, points.size()));
  if (threads <= 1) {
    work(0, points.size());
    return out;
  }
  std::vector<std::future<void>> jobs;
  const std::size_t chunk = (points.size() + threads - 1) / threads;
  for (std::size_t begin = 0; begin < points.size(); begin += chunk)
    jobs.push_back(std::async(std::launch::async, work, begin,
                              std::min(points.size(), begin + chunk)));
  for (auto& j : jobs) j.get();
  return out;
}

/// Residuals of the solution invariants: partition of unity, reproduction,
/// and the closed form p_k = 1/(n - (x - a_k, lambda)).
struct SolutionResiduals {
  double partition = 0.0;
  double reproduction = 0.0;
  double closed_form = 0.0;
};

inline SolutionResiduals solution_residuals(const Polytope& P, const WeightSolution& sol) {
  SolutionResiduals r;
  r.partition = std::abs(sol.weights.sum() - 1.0);
  r.reproduction = (P.chart_vertices() * sol.weights - sol.x).norm() / (1.0 + sol.x.norm());
  if (sol.lambda.allFinite()) {
    const auto s = detail::eval_dual(detail::offsets_from(P, sol.x), sol.lambda);
    r.closed_form = (s.weights - sol.weights).cwiseAbs().maxCoeff();
  }
  return r;
}

/// Removing the first vertex: with P1 the hull of a_2..a_n and pbar its
/// weights, p_k(x) = (1 - p_1(x)) pbar_k(x / (1 - p_1(x))) for k >= 2. The
/// chart origin is a_1, so x / (1 - p_1) is a chart-space scaling.
struct RecursionResult {
  double max_error = 0.0;
  Vector scaled_point;           // lambda(x) x, in chart coordinates of P
  std::optional<Polytope> reduced;
  std::optional<WeightSolution> reduced_solution;
};

inline RecursionResult check_recursion(const Polytope& P, const WeightSolution& sol,
                                       const SolverOptions& opts = {}) {
  RecursionResult r;
  const double p1 = sol.weights(0);
  r.scaled_point = sol.x / (1.0 - p1);
  const auto n = P.size();
  if (n == 2) {
    r.max_error = std::abs(sol.weights(1) - (1.0 - p1));
    return r;
  }
  std::vector<std::size_t> rest(n - 1);
  for (std::size_t k = 1; k < n; ++k) rest[k - 1] = k;
  r.reduced = sub_polytope(P, rest);
  SolverOptions sub_opts = opts;
  sub_opts.initial_dual.reset();
  r.reduced_solution = solve_weights(*r.reduced, r.reduced->chart().to_chart(r.scaled_point), sub_opts);
  for (std::size_t k = 1; k < n; ++k) {
    const double predicted =
        (1.0 - p1) * r.reduced_solution->weights(static_cast<Eigen::Index>(k - 1));
    r.max_error = std::max(r.max_error, std::abs(sol.weights(static_cast<Eigen::Index>(k)) - predicted));
  }
  return r;
}

}  // namespace sbary

#endif  // SBARY_BARRIER_WEIGHTS_HPP_
