#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sfb/matrix.hpp"
#include "sfb/point.hpp"

namespace sfb {

/* Operator catalog.
 *
 * ResolventOperator models a maximally monotone A through its resolvent
 * J_{gamma A} = (I + gamma A)^{-1}; every catalog kind has a closed-form
 * resolvent. CocoerciveOperator models a single-valued B with a known
 * cocoercivity constant beta: <w - u, Bw - Bu> >= beta * ||Bw - Bu||^2.
 */

// One-coordinate convex penalty with 0 in its argmin and value 0 at 0.
struct ScalarPenalty {
  enum class Kind { zero, abs_weighted, square_weighted, indicator_interval };

  Kind kind = Kind::zero;
  double weight = 0.0;  // abs: weight*|t|;  square: (weight/2)*t^2
  double lo = 0.0, hi = 0.0;

  static ScalarPenalty zero() { return {}; }
  static ScalarPenalty abs(double w) {
    if (!(w >= 0.0) || !std::isfinite(w))
      throw std::invalid_argument("ScalarPenalty::abs: weight must be >= 0");
    return {Kind::abs_weighted, w, 0.0, 0.0};
  }
  static ScalarPenalty square(double w) {
    if (!(w >= 0.0) || !std::isfinite(w))
      throw std::invalid_argument("ScalarPenalty::square: weight must be >= 0");
    return {Kind::square_weighted, w, 0.0, 0.0};
  }
  static ScalarPenalty interval(double lo, double hi) {
    if (!(lo <= 0.0 && 0.0 <= hi))
      throw std::invalid_argument("ScalarPenalty::interval: must contain 0");
    return {Kind::indicator_interval, 0.0, lo, hi};
  }

  double value(double t) const {
    switch (kind) {
      case Kind::zero: return 0.0;
      case Kind::abs_weighted: return weight * std::fabs(t);
      case Kind::square_weighted: return 0.5 * weight * t * t;
      case Kind::indicator_interval:
        return (t >= lo && t <= hi) ? 0.0 : std::numeric_limits<double>::infinity();
    }
    return 0.0;
  }

  // argmin_v value(v) + (v - z)^2 / (2*step)
  double prox(double step, double z) const {
    switch (kind) {
      case Kind::zero: return z;
      case Kind::abs_weighted: {
        const double th = step * weight;
        if (z > th) return z - th;
        if (z < -th) return z + th;
        return 0.0;
      }
      case Kind::square_weighted: return z / (1.0 + step * weight);
      case Kind::indicator_interval: return std::clamp(z, lo, hi);
    }
    return z;
  }
};

// G(w) = sum_k phi_k(w_k) + (nu/2) ||w||^2 with each phi_k from the scalar
// catalog. nu is the strong-convexity modulus contributed by the quadratic.
class SeparablePenalty {
 public:
  SeparablePenalty(std::vector<ScalarPenalty> phis, double nu)
      : phis_(std::move(phis)), nu_(nu) {
    if (phis_.empty())
      throw std::invalid_argument("SeparablePenalty: at least one coordinate penalty");
    if (!(nu >= 0.0) || !std::isfinite(nu))
      throw std::invalid_argument("SeparablePenalty: nu must be >= 0");
  }

  std::size_t dim() const { return phis_.size(); }
  double nu() const { return nu_; }
  const std::vector<ScalarPenalty>& coordinates() const { return phis_; }

  double value(const Point& w) const {
    if (w.size() != phis_.size())
      throw std::invalid_argument("SeparablePenalty::value: dimension mismatch");
    double s = 0.5 * nu_ * norm_sq(w);
    for (std::size_t k = 0; k < w.size(); ++k) s += phis_[k].value(w[k]);
    return s;
  }

  // Resolvent of the subdifferential of G at step gamma. The quadratic part
  // folds into a rescaling: per coordinate, prox of phi_k at step
  // gamma/(1+nu*gamma) evaluated at z_k/(1+nu*gamma).
  Point prox_step(double gamma, const Point& z) const {
    if (z.size() != phis_.size())
      throw std::invalid_argument("SeparablePenalty::prox_step: dimension mismatch");
    if (!(gamma > 0.0) || !std::isfinite(gamma))
      throw std::invalid_argument("SeparablePenalty::prox_step: gamma must be > 0");
    const double scale = 1.0 + nu_ * gamma;
    const double step = gamma / scale;
    Point y(z.size());
    for (std::size_t k = 0; k < z.size(); ++k) y[k] = phis_[k].prox(step, z[k] / scale);
    return y;
  }

 private:
  std::vector<ScalarPenalty> phis_;
  double nu_;
};

inline Point separable_prox_step(const SeparablePenalty& p, double gamma, const Point& z) {
  return p.prox_step(gamma, z);
}

class ResolventOperator {
 public:
  enum class Kind {
    zero,
    normal_cone_box,
    normal_cone_ball,
    scaled_identity,
    subdifferential_l1,
    separable_penalty,
    custom
  };

  using CustomFn = std::function<Point(double, const Point&)>;

  static ResolventOperator zero() { return ResolventOperator(Kind::zero); }

  static ResolventOperator box(Point lo, Point hi) {
    check_same_dim(lo, hi, "ResolventOperator::box");
    if (lo.empty()) throw std::invalid_argument("ResolventOperator::box: empty bounds");
    validate_finite(lo, "box lower bound");
    validate_finite(hi, "box upper bound");
    for (std::size_t i = 0; i < lo.size(); ++i)
      if (!(lo[i] <= hi[i]))
        throw std::invalid_argument("ResolventOperator::box: empty box (lo > hi)");
    ResolventOperator r(Kind::normal_cone_box);
    r.lo_ = std::move(lo);
    r.hi_ = std::move(hi);
    return r;
  }

  static ResolventOperator ball(Point center, double radius) {
    if (center.empty()) throw std::invalid_argument("ResolventOperator::ball: empty center");
    validate_finite(center, "ball center");
    if (!(radius > 0.0) || !std::isfinite(radius))
      throw std::invalid_argument("ResolventOperator::ball: radius must be > 0");
    ResolventOperator r(Kind::normal_cone_ball);
    r.center_ = std::move(center);
    r.radius_ = radius;
    return r;
  }

  static ResolventOperator scaled_identity(double a) {
    if (!(a >= 0.0) || !std::isfinite(a))
      throw std::invalid_argument("ResolventOperator::scaled_identity: a must be >= 0");
    ResolventOperator r(Kind::scaled_identity);
    r.a_ = a;
    return r;
  }

  static ResolventOperator l1(double weight) {
    if (!(weight >= 0.0) || !std::isfinite(weight))
      throw std::invalid_argument("ResolventOperator::l1: weight must be >= 0");
    ResolventOperator r(Kind::subdifferential_l1);
    r.weight_ = weight;
    return r;
  }

  static ResolventOperator separable(SeparablePenalty p) {
    ResolventOperator r(Kind::separable_penalty);
    r.pen_.emplace(std::move(p));
    return r;
  }

  // nu: strong monotonicity modulus the caller vouches for (0 if unknown).
  static ResolventOperator custom(CustomFn f, double nu = 0.0) {
    if (!f) throw std::invalid_argument("ResolventOperator::custom: null function");
    if (!(nu >= 0.0)) throw std::invalid_argument("ResolventOperator::custom: nu must be >= 0");
    ResolventOperator r(Kind::custom);
    r.custom_ = std::move(f);
    r.a_ = nu;
    return r;
  }

  Kind kind() const { return kind_; }

  // 0 = any dimension accepted
  std::size_t dim() const {
    switch (kind_) {
      case Kind::normal_cone_box: return lo_.size();
      case Kind::normal_cone_ball: return center_.size();
      case Kind::separable_penalty: return pen_->dim();
      default: return 0;
    }
  }

  // strong monotonicity modulus
  double nu() const {
    switch (kind_) {
      case Kind::scaled_identity: return a_;
      case Kind::separable_penalty: return pen_->nu();
      case Kind::custom: return a_;
      default: return 0.0;
    }
  }

  Point resolvent(double gamma, const Point& z) const {
    if (!(gamma > 0.0) || !std::isfinite(gamma))
      throw std::invalid_argument("resolvent: gamma must be > 0 and finite");
    if (dim() != 0 && z.size() != dim())
      throw std::invalid_argument("resolvent: dimension mismatch");
    switch (kind_) {
      case Kind::zero:
        return z;
      case Kind::normal_cone_box: {
        Point y(z.size());
        for (std::size_t i = 0; i < z.size(); ++i) y[i] = std::clamp(z[i], lo_[i], hi_[i]);
        return y;
      }
      case Kind::normal_cone_ball: {
        Point d = subtract(z, center_);
        const double n = norm(d);
        if (n <= radius_) return z;
        return add_scaled(center_, radius_ / n, d);
      }
      case Kind::scaled_identity:
        return scaled(z, 1.0 / (1.0 + gamma * a_));
      case Kind::subdifferential_l1: {
        const double th = gamma * weight_;
        Point y(z.size());
        for (std::size_t i = 0; i < z.size(); ++i) {
          if (z[i] > th) y[i] = z[i] - th;
          else if (z[i] < -th) y[i] = z[i] + th;
          else y[i] = 0.0;
        }
        return y;
      }
      case Kind::separable_penalty:
        return pen_->prox_step(gamma, z);
      case Kind::custom: {
        Point y = custom_(gamma, z);
        validate_finite(y, "custom resolvent output");
        return y;
      }
    }
    return z;
  }

  // Metric projection; only normal-cone kinds describe a set.
  Point project(const Point& z) const {
    if (kind_ != Kind::normal_cone_box && kind_ != Kind::normal_cone_ball)
      throw std::invalid_argument("project: operator is not a normal cone of a set");
    return resolvent(1.0, z);
  }

  const std::optional<SeparablePenalty>& penalty() const { return pen_; }
  double l1_weight() const { return weight_; }

 private:
  explicit ResolventOperator(Kind k) : kind_(k) {}

  Kind kind_;
  Point lo_, hi_, center_;
  double a_ = 0.0, weight_ = 0.0, radius_ = 0.0;
  std::optional<SeparablePenalty> pen_;
  CustomFn custom_;
};

inline Point resolvent(const ResolventOperator& a, double gamma, const Point& z) {
  return a.resolvent(gamma, z);
}

inline Point project(const ResolventOperator& a, const Point& z) { return a.project(z); }

class CocoerciveOperator {
 public:
  enum class Kind {
    affine_spd,
    affine_monotone,
    gradient_quadratic,
    gradient_logistic,
    gradient_least_squares,
    custom
  };

  using ApplyFn = std::function<Point(const Point&)>;

  // B w = M w + offset, M symmetric positive semidefinite.
  static CocoerciveOperator affine_spd(Matrix m, Point offset) {
    if (!is_symmetric(m))
      throw std::invalid_argument("affine_spd: matrix must be symmetric");
    return make_affine(Kind::affine_spd, std::move(m), std::move(offset));
  }

  // B w = M w + offset, symmetric part of M positive semidefinite.
  static CocoerciveOperator affine_monotone(Matrix m, Point offset) {
    return make_affine(Kind::affine_monotone, std::move(m), std::move(offset));
  }

  // Gradient of (1/2)(w - center)^T Q (w - center), Q symmetric PSD.
  static CocoerciveOperator gradient_quadratic(Matrix q, Point center) {
    if (!q.square() || q.rows != center.size())
      throw std::invalid_argument("gradient_quadratic: dimension mismatch");
    if (!is_symmetric(q))
      throw std::invalid_argument("gradient_quadratic: matrix must be symmetric");
    validate_finite(center, "gradient_quadratic center");
    const double lmax = sym_eigen_max(q);
    const double lmin = sym_eigen_min(q);
    if (lmin < -1e-9 * std::max(1.0, lmax))
      throw std::invalid_argument("gradient_quadratic: matrix must be positive semidefinite");
    CocoerciveOperator b(Kind::gradient_quadratic);
    b.m_ = std::move(q);
    b.v_ = std::move(center);
    b.dim_ = b.v_.size();
    b.beta_ = lmax > 0.0 ? 1.0 / lmax : std::numeric_limits<double>::infinity();
    b.mu_ = std::max(0.0, lmin);
    return b;
  }

  // Gradient of (1/(2m)) ||X w - targets||^2.
  static CocoerciveOperator gradient_least_squares(Matrix design, Point targets) {
    if (design.rows == 0 || design.cols == 0)
      throw std::invalid_argument("gradient_least_squares: empty design");
    if (design.rows != targets.size())
      throw std::invalid_argument("gradient_least_squares: targets size mismatch");
    validate_finite(targets, "gradient_least_squares targets");
    Matrix g = design.transposed() * design;
    const double m = static_cast<double>(design.rows);
    for (auto& v : g.a) v /= m;
    const double lmax = sym_eigen_max(g);
    CocoerciveOperator b(Kind::gradient_least_squares);
    b.m_ = std::move(g);  // Hessian X^T X / m, reused by apply via the affine form
    b.design_ = std::move(design);
    b.v_ = std::move(targets);
    b.dim_ = b.design_.cols;
    b.beta_ = lmax > 0.0 ? 1.0 / lmax : std::numeric_limits<double>::infinity();
    b.mu_ = std::max(0.0, sym_eigen_min(b.m_));
    return b;
  }

  // Gradient of (1/m) sum_i log(1 + exp(-labels_i * <design_i, w>)).
  static CocoerciveOperator gradient_logistic(Matrix design, std::vector<double> labels) {
    if (design.rows == 0 || design.cols == 0)
      throw std::invalid_argument("gradient_logistic: empty design");
    if (design.rows != labels.size())
      throw std::invalid_argument("gradient_logistic: labels size mismatch");
    for (double l : labels)
      if (l != 1.0 && l != -1.0)
        throw std::invalid_argument("gradient_logistic: labels must be +1 or -1");
    Matrix g = design.transposed() * design;
    const double m = static_cast<double>(design.rows);
    const double lmax = sym_eigen_max(g) / m;
    CocoerciveOperator b(Kind::gradient_logistic);
    b.design_ = std::move(design);
    b.labels_ = std::move(labels);
    b.dim_ = b.design_.cols;
    // smoothness constant lmax/4, Baillon-Haddad gives beta = 4/lmax
    b.beta_ = lmax > 0.0 ? 4.0 / lmax : std::numeric_limits<double>::infinity();
    b.mu_ = 0.0;
    return b;
  }

  static CocoerciveOperator custom(ApplyFn f, double beta, std::size_t dim, double mu = 0.0) {
    if (!f) throw std::invalid_argument("CocoerciveOperator::custom: null function");
    if (!(beta > 0.0)) throw std::invalid_argument("CocoerciveOperator::custom: beta must be > 0");
    if (!(mu >= 0.0)) throw std::invalid_argument("CocoerciveOperator::custom: mu must be >= 0");
    CocoerciveOperator b(Kind::custom);
    b.custom_ = std::move(f);
    b.beta_ = beta;
    b.mu_ = mu;
    b.dim_ = dim;
    return b;
  }

  Kind kind() const { return kind_; }
  std::size_t dim() const { return dim_; }
  double beta() const { return beta_; }
  double mu() const { return mu_; }
  // all catalog kinds are continuous on finite-dimensional spaces
  bool weakly_continuous() const { return true; }

  Point apply(const Point& w) const {
    if (dim_ != 0 && w.size() != dim_)
      throw std::invalid_argument("CocoerciveOperator::apply: dimension mismatch");
    switch (kind_) {
      case Kind::affine_spd:
      case Kind::affine_monotone:
        return add_scaled(v_, 1.0, m_.apply(w));
      case Kind::gradient_quadratic:
        return m_.apply(subtract(w, v_));
      case Kind::gradient_least_squares: {
        Point r = design_.apply(w);
        for (std::size_t i = 0; i < r.size(); ++i) r[i] -= v_[i];
        Point g = design_.apply_transposed(r);
        const double m = static_cast<double>(design_.rows);
        for (auto& x : g) x /= m;
        return g;
      }
      case Kind::gradient_logistic: {
        Point g(dim_, 0.0);
        const double m = static_cast<double>(design_.rows);
        for (std::size_t i = 0; i < design_.rows; ++i) {
          double z = 0.0;
          for (std::size_t j = 0; j < dim_; ++j) z += design_.at(i, j) * w[j];
          const double s = 1.0 / (1.0 + std::exp(labels_[i] * z));
          const double coef = -labels_[i] * s / m;
          for (std::size_t j = 0; j < dim_; ++j) g[j] += coef * design_.at(i, j);
        }
        return g;
      }
      case Kind::custom: {
        Point y = custom_(w);
        validate_finite(y, "custom operator output");
        return y;
      }
    }
    return w;
  }

  Point operator()(const Point& w) const { return apply(w); }

  // (M, b) with B w = M w + b, when the operator is affine.
  std::optional<std::pair<Matrix, Point>> affine_form() const {
    switch (kind_) {
      case Kind::affine_spd:
      case Kind::affine_monotone:
        return std::make_pair(m_, v_);
      case Kind::gradient_quadratic:
        return std::make_pair(m_, scaled(m_.apply(v_), -1.0));
      case Kind::gradient_least_squares: {
        Point b = design_.apply_transposed(v_);
        const double m = static_cast<double>(design_.rows);
        for (auto& x : b) x /= -m;
        return std::make_pair(m_, b);
      }
      default:
        return std::nullopt;
    }
  }

 private:
  explicit CocoerciveOperator(Kind k) : kind_(k) {}

  static CocoerciveOperator make_affine(Kind kind, Matrix m, Point offset) {
    if (!m.square() || m.rows != offset.size())
      throw std::invalid_argument("affine operator: dimension mismatch");
    validate_finite(offset, "affine offset");
    const Matrix sym = symmetric_part(m);
    const double nrm = operator_norm(m);
    const double lmin = sym_eigen_min(sym);
    if (lmin < -1e-9 * std::max(1.0, nrm))
      throw std::invalid_argument("affine operator: symmetric part must be positive semidefinite");
    CocoerciveOperator b(kind);
    b.dim_ = m.rows;
    if (nrm == 0.0) {
      b.beta_ = std::numeric_limits<double>::infinity();  // constant map
    } else {
      const double lm = std::max(0.0, lmin);
      if (lm == 0.0)
        throw std::invalid_argument("affine operator: not cocoercive (symmetric part singular)");
      b.beta_ = lm / (nrm * nrm);
    }
    b.mu_ = std::max(0.0, lmin);
    b.m_ = std::move(m);
    b.v_ = std::move(offset);
    return b;
  }

  Kind kind_;
  Matrix m_;        // affine matrix / quadratic Hessian
  Point v_;         // affine offset / quadratic center / least-squares targets
  Matrix design_;   // least squares, logistic
  std::vector<double> labels_;
  ApplyFn custom_;
  double beta_ = 0.0, mu_ = 0.0;
  std::size_t dim_ = 0;
};

// Valid cocoercivity constant established at construction: affine kinds use
// lambda_min(sym part)/||M||^2, gradient kinds use 1/L of the smooth function.
inline double beta_of(const CocoerciveOperator& b) { return b.beta(); }

}  // namespace sfb
