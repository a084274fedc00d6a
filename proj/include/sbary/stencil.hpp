#ifndef SBARY_STENCIL_HPP_
#define SBARY_STENCIL_HPP_

// Monotone finite-difference stencils for L f = sum_ij u_ij f_ij built from
// a fixed-direction factorization u = sum_g c_g g g^T:
//
//   L_h f(x) = sum_g c_g (f(x + h g) - 2 f(x) + f(x - h g)) / h^2.
//
// Directions are rescaled to integer lattice vectors when possible, with the
// coefficient divided by the squared scale so that c g g^T is unchanged.

#include "sbary/core.hpp"
#include "sbary/matrix_factorization.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace sbary {

struct StencilEntry {
  Vector offset;                 // lattice units; multiply by h for the spatial offset
  std::vector<long long> lattice;  // integer offset, empty when off-lattice
  double coeff = 0.0;            // >= 0
  std::size_t direction = 0;

  bool on_lattice() const { return !lattice.empty(); }
};

struct StencilSpec {
  double h = 0.0;
  std::vector<StencilEntry> entries;
  double center = 0.0;
  std::vector<Vector> directions;       // rescaled, one per model direction
  std::vector<double> direction_weights;  // c_g

  bool all_on_lattice() const {
    for (const auto& e : entries)
      if (!e.on_lattice()) return false;
    return true;
  }

  /// sum_g c_g g g^T, the matrix the stencil approximates.
  Matrix represented_matrix() const {
    const auto m = directions.empty() ? 0 : directions.front().size();
    Matrix u = Matrix::Zero(m, m);
    for (std::size_t g = 0; g < directions.size(); ++g)
      u += direction_weights[g] * directions[g] * directions[g].transpose();
    return u;
  }
};

/// Smallest integer multiple of gamma (found among multipliers 1..max_mult of
/// gamma / min |gamma_i|), or nothing when gamma is not lattice-aligned.
inline std::optional<std::vector<long long>> lattice_direction(const Vector& gamma, int max_mult = 16,
                                                               double tol = 1e-9) {
  double smallest = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < gamma.size(); ++i)
    if (std::abs(gamma(i)) > tol) smallest = std::min(smallest, std::abs(gamma(i)));
  if (!std::isfinite(smallest)) return std::nullopt;
  const Vector base = gamma / smallest;
  for (int t = 1; t <= max_mult; ++t) {
    const Vector v = base * t;
    bool ok = true;
    std::vector<long long> g(static_cast<std::size_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      const double r = std::round(v(i));
      if (std::abs(v(i) - r) > tol * std::max(1.0, std::abs(v(i)))) {
        ok = false;
        break;
      }
      g[static_cast<std::size_t>(i)] = static_cast<long long>(r);
    }
    if (ok) return g;
  }
  return std::nullopt;
}

/// Stencil from directions gamma_g (any length) and coefficients sigma_g^2
/// with u = sum sigma_g^2 gamma_g gamma_g^T.
inline StencilSpec build_stencil(const std::vector<Vector>& directions, const Vector& sigma2, double h) {
  if (!(h > 0.0)) throw Error(ErrorKind::invalid_input, "build_stencil: h must be positive");
  if (static_cast<Eigen::Index>(directions.size()) != sigma2.size())
    throw Error(ErrorKind::invalid_input, "build_stencil: one coefficient per direction required");
  StencilSpec spec;
  spec.h = h;
  const double inv_h2 = 1.0 / (h * h);
  double total = 0.0;
  for (std::size_t g = 0; g < directions.size(); ++g) {
    const Vector& gamma = directions[g];
    const double s2 = sigma2(static_cast<Eigen::Index>(g));
    if (s2 < 0.0) throw Error(ErrorKind::invalid_input, "build_stencil: negative coefficient");
    const auto lat = lattice_direction(gamma);
    Vector dir = gamma;
    if (lat) {
      for (std::size_t i = 0; i < lat->size(); ++i) dir(static_cast<Eigen::Index>(i)) = static_cast<double>((*lat)[i]);
    }
    const double c = s2 * gamma.squaredNorm() / dir.squaredNorm();
    spec.directions.push_back(dir);
    spec.direction_weights.push_back(c);
    total += c;
    for (double sign : {1.0, -1.0}) {
      StencilEntry e;
      e.offset = sign * dir;
      if (lat) {
        for (auto v : *lat) e.lattice.push_back(static_cast<long long>(sign) * v);
      }
      e.coeff = c * inv_h2;
      e.direction = g;
      spec.entries.push_back(std::move(e));
    }
  }
  spec.center = -2.0 * total * inv_h2;
  return spec;
}

inline StencilSpec build_stencil(const MatrixPolytopeModel& model, const SampleFactorization& sample,
                                 double h) {
  return build_stencil(model.directions, sample.direction_coefficients, h);
}

/// sum_y p_h(y) f(x + h y), center included.
template <class Fn>
double apply_stencil(const StencilSpec& spec, Fn&& f, const Vector& x) {
  double acc = spec.center * f(x);
  for (const auto& e : spec.entries) acc += e.coeff * f(Vector(x + spec.h * e.offset));
  return acc;
}

struct ConsistencyReport {
  std::vector<double> h;
  double quadratic_max_error = 0.0;   // relative to sum_ij |u_ij A_ij|
  std::vector<double> quadratic_errors;  // the same, per h; round-off grows like 1/h^2
  std::vector<double> smooth_errors;  // worst over samples, per h
  std::vector<double> observed_orders;
  double min_order = 0.0;
  double monotonicity_worst = 0.0;    // most negative L_h f for f minimized at x
  bool passed = false;
};

namespace detail {

// f(z) = sin(z_1) prod_{i>1} cos(z_i) and its Hessian.
inline double trig_product(const Vector& z) {
  double v = std::sin(z(0));
  for (Eigen::Index i = 1; i < z.size(); ++i) v *= std::cos(z(i));
  return v;
}

inline Matrix trig_product_hessian(const Vector& z) {
  const auto m = z.size();
  Vector f(m), df(m);
  f(0) = std::sin(z(0));
  df(0) = std::cos(z(0));
  for (Eigen::Index i = 1; i < m; ++i) {
    f(i) = std::cos(z(i));
    df(i) = -std::sin(z(i));
  }
  Matrix H(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) {
      double v = 1.0;
      for (Eigen::Index l = 0; l < m; ++l) {
        if (i == j && l == i) v *= -f(l);  // (sin)'' = -sin, (cos)'' = -cos
        else if (l == i || l == j) v *= df(l);
        else v *= f(l);
      }
      H(i, j) = v;
    }
  return H;
}

}  // namespace detail

/// Exactness on random quadratics, observed order on a trig product over the
/// h sequence, and monotonicity on random functions minimized at the center.
inline ConsistencyReport consistency_report(const MatrixPolytopeModel& model,
                                            const std::vector<SampleFactorization>& samples,
                                            std::vector<double> hs, std::uint64_t seed = 7,
                                            int quadratics = 20) {
  ConsistencyReport rep;
  rep.h = hs;
  rep.smooth_errors.assign(hs.size(), 0.0);
  rep.quadratic_errors.assign(hs.size(), 0.0);
  const auto m = model.embedding.matrix_dim();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  auto random_vector = [&](Eigen::Index len) {
    Vector v(len);
    for (Eigen::Index i = 0; i < len; ++i) v(i) = unit(rng);
    return v;
  };
  rep.monotonicity_worst = std::numeric_limits<double>::infinity();

  for (const auto& s : samples) {
    const Vector x0 = 0.5 * random_vector(m);
    for (std::size_t hi = 0; hi < hs.size(); ++hi) {
      const auto spec = build_stencil(model, s, hs[hi]);
      const Matrix ubar = spec.represented_matrix();
      for (int q = 0; q < quadratics; ++q) {
        Matrix A = Matrix::NullaryExpr(m, m, [&]() { return unit(rng); });
        A = 0.5 * (A + A.transpose()).eval();
        const Vector b = random_vector(m);
        const double c = unit(rng);
        auto f = [&](const Vector& z) { return z.dot(A * z) + b.dot(z) + c; };
        const double exact = 2.0 * (ubar.cwiseProduct(A)).sum();
        const double got = apply_stencil(spec, f, x0);
        const double scale = std::max(std::abs(exact), 2.0 * (ubar.cwiseAbs().cwiseProduct(A.cwiseAbs())).sum());
        const double err = std::abs(got - exact) / std::max(scale, 1e-300);
        rep.quadratic_errors[hi] = std::max(rep.quadratic_errors[hi], err);
        rep.quadratic_max_error = std::max(rep.quadratic_max_error, err);
      }
      const double exact = (ubar.cwiseProduct(detail::trig_product_hessian(x0))).sum();
      const double got = apply_stencil(spec, detail::trig_product, x0);
      rep.smooth_errors[hi] = std::max(rep.smooth_errors[hi], std::abs(got - exact));

      const Vector w = random_vector(m);
      const double kappa = 0.5 + 0.5 * unit(rng);
      auto bowl = [&](const Vector& z) {
        const Vector d = z - x0;
        return d.squaredNorm() * (1.0 + 0.5 * std::sin(w.dot(d))) + kappa * d.squaredNorm() * d.squaredNorm();
      };
      rep.monotonicity_worst = std::min(rep.monotonicity_worst, apply_stencil(spec, bowl, x0));
    }
  }
  rep.min_order = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < hs.size(); ++i) {
    const double order = std::log(rep.smooth_errors[i - 1] / rep.smooth_errors[i]) / std::log(hs[i - 1] / hs[i]);
    rep.observed_orders.push_back(order);
    rep.min_order = std::min(rep.min_order, order);
  }
  rep.passed = rep.quadratic_max_error <= 1e-12 && rep.min_order >= 1.9 &&
               rep.monotonicity_worst >= -1e-12;
  return rep;
}

}  // namespace sbary

#endif  // SBARY_STENCIL_HPP_
