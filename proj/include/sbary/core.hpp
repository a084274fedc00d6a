#ifndef SBARY_CORE_HPP_
#define SBARY_CORE_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace sbary {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class ErrorKind {
  invalid_input,
  outside_polytope,
  boundary_point,
  non_convergence,
  singular_jacobian,
  missing_facets,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_input: return "invalid_input";
    case ErrorKind::outside_polytope: return "outside_polytope";
    case ErrorKind::boundary_point: return "boundary_point";
    case ErrorKind::non_convergence: return "non_convergence";
    case ErrorKind::singular_jacobian: return "singular_jacobian";
    case ErrorKind::missing_facets: return "missing_facets";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Outcome of one numerical check: the worst observed deviation against a
/// pinned tolerance. For inequalities `worst` is the most negative slack and
/// the check passes when it is >= -tolerance; for identities `worst` is the
/// largest error and the check passes when it is <= tolerance.
struct CheckResult {
  std::string name;
  double worst = 0.0;
  double tolerance = 0.0;
  bool passed = true;
  std::string detail;
  bool bound = false;  // smaller `worst` is worse
};

struct CheckReport {
  std::vector<CheckResult> checks;

  bool passed() const {
    return std::all_of(checks.begin(), checks.end(),
                       [](const CheckResult& c) { return c.passed; });
  }

  const CheckResult* find(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }

  void append(const CheckReport& other) {
    checks.insert(checks.end(), other.checks.begin(), other.checks.end());
  }
};

namespace detail {

// |a - b| measured against the magnitude of the terms that produced a and b.
inline double relative_error(double a, double b, double scale) {
  return std::abs(a - b) / std::max(scale, 1e-300);
}

// Relative slack of `lhs <= rhs`; negative when violated.
inline double relative_slack(double lhs, double rhs) {
  return (rhs - lhs) / std::max({std::abs(lhs), std::abs(rhs), 1e-300});
}

inline CheckResult identity_check(std::string name, double worst_error,
                                  double tol, std::string detail = {}) {
  return {std::move(name), worst_error, tol,
          std::isfinite(worst_error) && worst_error <= tol, std::move(detail)};
}

inline CheckResult bound_check(std::string name, double worst_slack,
                               double tol, std::string detail = {}) {
  return {std::move(name), worst_slack, tol,
          std::isfinite(worst_slack) && worst_slack >= -tol,
          std::move(detail), true};
}

}  // namespace detail
}  // namespace sbary

#endif  // SBARY_CORE_HPP_
