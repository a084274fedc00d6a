#ifndef SBARY_VERIFICATION_HPP_
#define SBARY_VERIFICATION_HPP_

// Randomized verification suite over interior points of one polytope.

#include "sbary/barrier_weights.hpp"
#include "sbary/calculus.hpp"
#include "sbary/core.hpp"
#include "sbary/polytope.hpp"

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace sbary {

struct VerifyOptions {
  std::uint64_t seed = 20240607;
  int samples = 50;
  SolverOptions solver;
  // Boundary-approach distances in units of facet_local_scale at the foot.
  std::vector<double> sweep_levels = {1e-4, 1e-6};
  double sweep_tolerance = 0.05;
};

struct VerificationReport {
  std::string polytope;
  int samples = 0;
  CheckReport checks;  // worst case of each named check over all samples
  std::vector<std::string> skipped;
  std::vector<std::string> errors;  // per-sample solver failures

  bool passed() const { return errors.empty() && checks.passed(); }
};

/// Strictly positive random convex combination of the vertices (flat
/// Dirichlet), hence a relative-interior point.
inline Vector random_interior_point(const Polytope& P, std::mt19937_64& rng) {
  std::exponential_distribution<double> expo(1.0);
  Vector w(static_cast<Eigen::Index>(P.size()));
  for (Eigen::Index k = 0; k < w.size(); ++k) w(k) = expo(rng) + 1e-300;
  return P.chart_vertices() * (w / w.sum());
}

namespace detail {

inline void merge_worst(std::map<std::string, CheckResult>& acc, std::vector<std::string>& order,
                        const CheckResult& c) {
  auto it = acc.find(c.name);
  if (it == acc.end()) {
    acc.emplace(c.name, c);
    order.push_back(c.name);
    return;
  }
  CheckResult& cur = it->second;
  const bool worse = c.bound ? c.worst < cur.worst : c.worst > cur.worst;
  const bool passed = cur.passed && c.passed;
  if (worse || (!c.passed && cur.passed)) cur = c;
  cur.passed = passed;
}

}  // namespace detail

/// Checks at one interior point. `rng` supplies the random representation
/// coefficients and the perturbed starting dual.
inline CheckReport verify_point(const Polytope& P, const Vector& x, std::mt19937_64& rng,
                                const VerifyOptions& opts = {}) {
  CheckReport rep;
  const auto sol = solve_weights(P, x, opts.solver);
  const auto res = solution_residuals(P, sol);
  rep.checks.push_back(detail::identity_check("partition_of_unity", res.partition, 1e-10));
  rep.checks.push_back(detail::identity_check("reproduction", res.reproduction, 1e-10));
  rep.checks.push_back(detail::identity_check("closed_form_weights", res.closed_form, 1e-10));

  {
    // Uniqueness: restart from a random dual-feasible lambda.
    const Matrix R = detail::offsets_from(P, x);
    std::normal_distribution<double> normal;
    Vector lam(P.dim());
    for (Eigen::Index i = 0; i < lam.size(); ++i) lam(i) = normal(rng);
    const double reach = (R.transpose() * lam).cwiseAbs().maxCoeff();
    if (reach > 0.0) lam *= 0.5 / reach;
    SolverOptions alt = opts.solver;
    alt.initial_dual = lam;
    const auto other = solve_weights(P, x, alt);
    rep.checks.push_back(detail::identity_check(
        "uniqueness", (other.weights - sol.weights).cwiseAbs().maxCoeff(), 1e-9));
  }

  const auto der = differentiate(P, sol);
  rep.append(check_derivative_invariants(P, der));
  CheckOptions copts;
  copts.seed = rng();
  rep.checks.push_back(check_hessian_identity(P, der, copts));
  if (P.size() > static_cast<std::size_t>(P.dim()) + 1)
    rep.checks.push_back(check_representation_identity(P, sol, random_representation(P, sol, rng)));
  else
    rep.checks.push_back(check_representation_identity(P, sol, {sol.weights}));

  std::normal_distribution<double> normal;
  Vector q(static_cast<Eigen::Index>(P.size()));
  for (Eigen::Index k = 0; k < q.size(); ++k) q(k) = normal(rng);
  q.array() -= q.mean();
  rep.append(check_second_order_identities(P, sol, der, q, copts));
  rep.append(check_vertex_removal(P, sol, opts.solver, copts));
  if (P.has_facets()) rep.append(check_gradient_bounds(P, sol, der, copts));
  return rep;
}

inline VerificationReport run_verification(const Polytope& P, const VerifyOptions& opts = {}) {
  VerificationReport out;
  out.polytope = P.name();
  out.samples = opts.samples;
  std::mt19937_64 rng(opts.seed);
  std::map<std::string, CheckResult> acc;
  std::vector<std::string> order;

  for (int s = 0; s < opts.samples; ++s) {
    const Vector x = random_interior_point(P, rng);
    try {
      for (const auto& c : verify_point(P, x, rng, opts).checks) detail::merge_worst(acc, order, c);
    } catch (const Error& e) {
      out.errors.push_back("sample " + std::to_string(s) + ": " + e.what());
    }
  }

  try {
    const auto vl = vertex_limit_check(P, opts.solver);
    detail::merge_worst(acc, order,
                        {"vertex_limit", vl.worst_final, 0.0, vl.monotone,
                         "U_(x - a_k) -> n - 1; error monotone along inward paths"});
  } catch (const Error& e) {
    out.errors.push_back(std::string("vertex_limit: ") + e.what());
  }

  if (P.has_facets()) {
    double worst = 0.0;
    bool finite = true;
    for (std::size_t g = 0; g < P.facets().size(); ++g) {
      try {
        const Vector foot = facet_interior_point(P, g, rng);
        const double scale = facet_local_scale(P, g, foot);
        std::vector<double> dist;
        for (double level : opts.sweep_levels) dist.push_back(level * scale);
        const auto sweep = boundary_ratio_sweep(P, g, foot, dist, opts.solver);
        for (double r : sweep.ratios) finite = finite && std::isfinite(r) && r > 0.0;
        const double a = sweep.ratios.front(), b = sweep.ratios.back();
        worst = std::max(worst, std::abs(b - a) / a);
      } catch (const Error& e) {
        out.errors.push_back("boundary sweep, facet " + std::to_string(g) + ": " + e.what());
      }
    }
    detail::merge_worst(acc, order,
                        {"sqrt_ratio_boundary_stability", worst, opts.sweep_tolerance,
                         finite && worst <= opts.sweep_tolerance,
                         "relative change of the empirical constant between boundary distances (relative to the local facet scale)"});
  } else {
    out.skipped = {"lower_bound", "vertex_direction_gradient_bound", "weighted_gradient_bound",
                   "cross_gradient_bound", "hessian_lower_bound", "log_gradient_bound",
                   "sqrt_gradient_ratio", "sqrt_ratio_boundary_stability"};
  }

  for (const auto& name : order) out.checks.checks.push_back(acc.at(name));
  return out;
}

}  // namespace sbary

#endif  // SBARY_VERIFICATION_HPP_
