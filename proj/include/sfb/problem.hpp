#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <utility>

#include "sfb/operators.hpp"
#include "sfb/point.hpp"

namespace sfb {

// Declared moduli for the pair (A, B): A is nu-strongly monotone, B is
// mu-strongly monotone. At least one must be positive for rate constants.
struct StrongMonotonicity {
  double nu = 0.0;
  double mu = 0.0;
};

// Monotone inclusion 0 in A(w) + B(w); A maximally monotone via its resolvent,
// B cocoercive with constant beta(). A known solution, when supplied, is
// validated against the fixed-point characterization w = J_{gamma A}(w - gamma B w).
class InclusionProblem {
 public:
  InclusionProblem(ResolventOperator a, CocoerciveOperator b,
                   std::optional<Point> known_solution = std::nullopt,
                   std::optional<StrongMonotonicity> sm = std::nullopt)
      : a_(std::move(a)), b_(std::move(b)), solution_(std::move(known_solution)) {
    if (a_.dim() != 0 && b_.dim() != 0 && a_.dim() != b_.dim())
      throw std::invalid_argument("InclusionProblem: operator dimension mismatch");
    if (sm) {
      if (!(sm->nu >= 0.0) || !(sm->mu >= 0.0) || !(sm->nu + sm->mu > 0.0))
        throw std::invalid_argument(
            "InclusionProblem: strong monotonicity moduli must be >= 0 with positive sum");
      sm_ = sm;
    } else {
      const double nu = a_.nu(), mu = b_.mu();
      if (nu + mu > 0.0) sm_ = StrongMonotonicity{nu, mu};
    }
    if (solution_) {
      validate_finite(*solution_, "known_solution");
      if (dim() != 0 && solution_->size() != dim())
        throw std::invalid_argument("InclusionProblem: known_solution dimension mismatch");
      double g = beta();
      if (!std::isfinite(g) || g <= 0.0) g = 1.0;
      const double r = residual_at(*solution_, g);
      if (!(r <= 1e-9))
        throw std::invalid_argument(
            "InclusionProblem: known_solution fails the fixed-point check (residual " +
            std::to_string(r) + ")");
    }
  }

  const ResolventOperator& A() const { return a_; }
  const CocoerciveOperator& B() const { return b_; }
  double beta() const { return b_.beta(); }
  std::size_t dim() const { return b_.dim() != 0 ? b_.dim() : a_.dim(); }
  const std::optional<Point>& known_solution() const { return solution_; }
  const std::optional<StrongMonotonicity>& strong_monotonicity() const { return sm_; }

  double residual_at(const Point& w, double gamma) const {
    const Point z = add_scaled(w, -gamma, b_.apply(w));
    return distance(w, a_.resolvent(gamma, z));
  }

 private:
  ResolventOperator a_;
  CocoerciveOperator b_;
  std::optional<Point> solution_;
  std::optional<StrongMonotonicity> sm_;
};

// ||w - J_{gamma A}(w - gamma B w)||; zero exactly at solutions for any gamma > 0.
inline double fixed_point_residual(const InclusionProblem& p, const Point& w, double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma))
    throw std::invalid_argument("fixed_point_residual: gamma must be > 0");
  validate_finite(w, "fixed_point_residual input");
  return p.residual_at(w, gamma);
}

}  // namespace sfb
