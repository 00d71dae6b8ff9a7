#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "sfb/matrix.hpp"
#include "sfb/operators.hpp"
#include "sfb/oracle.hpp"
#include "sfb/point.hpp"
#include "sfb/random.hpp"
#include "sfb/schedule.hpp"
#include "sfb/trajectory.hpp"

namespace sfb {

/* Compact convex constraint sets with exact projections. */
class ConvexSet {
 public:
  enum class Kind { box, ball };

  static ConvexSet box(Point lo, Point hi) {
    if (lo.size() != hi.size() || lo.empty())
      throw std::invalid_argument("ConvexSet::box: bound size mismatch");
    for (std::size_t i = 0; i < lo.size(); ++i)
      if (!(lo[i] <= hi[i])) throw std::invalid_argument("ConvexSet::box: need lo <= hi");
    ConvexSet s;
    s.kind_ = Kind::box;
    s.lo_ = std::move(lo);
    s.hi_ = std::move(hi);
    return s;
  }

  static ConvexSet ball(Point center, double radius) {
    if (center.empty()) throw std::invalid_argument("ConvexSet::ball: empty center");
    if (!(radius > 0.0)) throw std::invalid_argument("ConvexSet::ball: radius must be > 0");
    ConvexSet s;
    s.kind_ = Kind::ball;
    s.lo_ = std::move(center);
    s.radius_ = radius;
    return s;
  }

  Kind kind() const { return kind_; }
  std::size_t dim() const { return lo_.size(); }
  double radius() const { return radius_; }
  const Point& box_lo() const { return lo_; }
  const Point& box_hi() const { return hi_; }
  const Point& center() const { return lo_; }

  Point project(const Point& z) const {
    check_same_dim(z.size(), dim(), "ConvexSet::project");
    if (kind_ == Kind::box) {
      Point y(z.size());
      for (std::size_t i = 0; i < z.size(); ++i) y[i] = std::min(hi_[i], std::max(lo_[i], z[i]));
      return y;
    }
    const double d = distance(z, lo_);
    if (d <= radius_) return z;
    return add_scaled(lo_, radius_ / d, subtract(z, lo_));
  }

  bool contains(const Point& z, double tol = 1e-9) const {
    check_same_dim(z.size(), dim(), "ConvexSet::contains");
    if (kind_ == Kind::box) {
      for (std::size_t i = 0; i < z.size(); ++i)
        if (z[i] < lo_[i] - tol || z[i] > hi_[i] + tol) return false;
      return true;
    }
    return distance(z, lo_) <= radius_ + tol;
  }

  double diameter() const {
    if (kind_ == Kind::ball) return 2.0 * radius_;
    return distance(lo_, hi_);
  }

  double max_norm() const {  // sup of ||w|| over the set
    if (kind_ == Kind::ball) return norm(lo_) + radius_;
    double s = 0.0;
    for (std::size_t i = 0; i < lo_.size(); ++i)
      s += std::max(lo_[i] * lo_[i], hi_[i] * hi_[i]);
    return std::sqrt(s);
  }

  // sup over the set of (1/2) ||w - u||^2, exact for both kinds
  double max_half_sq_dist(const Point& w) const {
    check_same_dim(w.size(), dim(), "ConvexSet::max_half_sq_dist");
    if (kind_ == Kind::ball) {
      const double d = distance(w, lo_) + radius_;
      return 0.5 * d * d;
    }
    double s = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double a = w[i] - lo_[i], b = w[i] - hi_[i];
      s += std::max(a * a, b * b);
    }
    return 0.5 * s;
  }

  // axis-aligned bounding interval of coordinate i
  void bounding_interval(std::size_t i, double& lo, double& hi) const {
    if (kind_ == Kind::box) {
      lo = lo_[i];
      hi = hi_[i];
    } else {
      lo = lo_[i] - radius_;
      hi = lo_[i] + radius_;
    }
  }

 private:
  Kind kind_ = Kind::box;
  Point lo_, hi_;  // ball: lo_ holds the center
  double radius_ = 0.0;
};

/* Variational inequality over a compact set: find w* in C with
 * <B w*, w - w*> >= 0 for all w in C.  Equivalent inclusion uses the normal
 * cone of C as the set-valued part, so the resolvent is the projection.
 */
struct VIProblem {
  CocoerciveOperator B;
  ConvexSet C;

  VIProblem(CocoerciveOperator b, ConvexSet c) : B(std::move(b)), C(std::move(c)) {
    if (B.dim() != 0 && B.dim() != C.dim())
      throw std::invalid_argument("VIProblem: operator/set dimension mismatch");
  }
};

struct ErgodicRun {
  Trajectory traj;
  std::vector<Point> averages;      // element n-1: weighted average of w_1..w_n
  std::vector<double> weight_sums;  // element n-1: sum of lambda_t gamma_t, t <= n
};

/* Projected stochastic forward step with weighted running averages of the
 * pre-step iterates. Requires lambda_n > 0 throughout so every weight sum is
 * positive.
 */
inline ErgodicRun run_ergodic(const VIProblem& vi, const StochasticOracle& o, const Schedule& s,
                              const Point& w1, int n_steps, SeedSpec seed) {
  if (n_steps < 1) throw std::invalid_argument("run_ergodic: n_steps must be >= 1");
  validate_finite(w1, "run_ergodic: w1");
  check_same_dim(w1.size(), vi.C.dim(), "run_ergodic: w1");
  RandomStream stream(seed);
  ErgodicRun out;
  out.traj.start(w1);
  out.averages.reserve(static_cast<std::size_t>(n_steps));
  out.weight_sums.reserve(static_cast<std::size_t>(n_steps));
  Point w = w1;
  Point accum(w1.size(), 0.0);
  double wsum = 0.0;
  for (int n = 1; n <= n_steps; ++n) {
    const double gamma = s.gamma(n), lambda = s.lambda(n);
    if (!(lambda > 0.0))
      throw std::invalid_argument("run_ergodic: lambda must be > 0 for ergodic averaging");
    const double weight = lambda * gamma;
    for (std::size_t k = 0; k < w.size(); ++k) accum[k] += weight * w[k];
    wsum += weight;

    StepRecord rec;
    rec.gamma = gamma;
    rec.lambda = lambda;
    const Point sample = o.sample(w, stream);
    rec.z = add_scaled(w, -gamma, sample);
    rec.y = vi.C.project(rec.z);
    w = combine(1.0 - lambda, w, lambda, rec.y);
    out.traj.append(w, std::move(rec));
    out.averages.push_back(scaled(accum, 1.0 / wsum));
    out.weight_sums.push_back(wsum);
  }
  return out;
}

/* Restricted merit value at u: sup over w in C of <B w, u - w>. Nonnegative
 * on C, zero exactly at solutions of the VI.
 *
 * Dimensions 1 and 2 use dense grid search over projected lattice points plus
 * three zoom refinements; higher dimensions require an affine operator, where
 * the objective is concave and projected gradient ascent from multiple fixed
 * starts applies.
 */
namespace detail {

inline double merit_objective(const CocoerciveOperator& B, const Point& u, const Point& w) {
  return dot(B.apply(w), subtract(u, w));
}

inline double merit_grid(const VIProblem& vi, const Point& u) {
  const std::size_t d = vi.C.dim();
  const int kCoarse = 2000;  // intervals per axis
  std::vector<double> lo(d), hi(d), h(d);
  for (std::size_t i = 0; i < d; ++i) {
    vi.C.bounding_interval(i, lo[i], hi[i]);
    h[i] = (hi[i] - lo[i]) / kCoarse;
  }
  double best = -std::numeric_limits<double>::infinity();
  Point best_w(d, 0.0);
  Point cand(d);

  // allocation-free path for affine operators; the grid visits millions of
  // points, so the generic apply/subtract/dot chain is too slow there
  const auto form = vi.B.affine_form();
  const bool is_ball = vi.C.kind() == ConvexSet::Kind::ball;
  double m00 = 0, m01 = 0, m10 = 0, m11 = 0, ob0 = 0, ob1 = 0;
  if (form) {
    m00 = form->first.at(0, 0);
    ob0 = form->second[0];
    if (d == 2) {
      m01 = form->first.at(0, 1);
      m10 = form->first.at(1, 0);
      m11 = form->first.at(1, 1);
      ob1 = form->second[1];
    }
  }
  const double u0 = u[0], u1 = d == 2 ? u[1] : 0.0;
  const double cx = is_ball ? vi.C.center()[0] : 0.0;
  const double cy = (is_ball && d == 2) ? vi.C.center()[1] : 0.0;
  const double rad = is_ball ? vi.C.radius() : 0.0;

  auto eval = [&](double x, double y) {
    if (form) {
      if (is_ball) {
        const double dx = x - cx, dy = d == 2 ? y - cy : 0.0;
        const double nn = std::sqrt(dx * dx + dy * dy);
        if (nn > rad) {
          const double s = rad / nn;
          x = cx + s * dx;
          if (d == 2) y = cy + s * dy;
        }
      } else {
        x = std::min(hi[0], std::max(lo[0], x));
        if (d == 2) y = std::min(hi[1], std::max(lo[1], y));
      }
      double v;
      if (d == 1)
        v = (m00 * x + ob0) * (u0 - x);
      else
        v = (m00 * x + m01 * y + ob0) * (u0 - x) + (m10 * x + m11 * y + ob1) * (u1 - y);
      if (v > best) {
        best = v;
        best_w[0] = x;
        if (d == 2) best_w[1] = y;
      }
      return;
    }
    cand[0] = x;
    if (d == 2) cand[1] = y;
    const Point w = vi.C.project(cand);
    const double v = merit_objective(vi.B, u, w);
    if (v > best) {
      best = v;
      best_w = w;
    }
  };

  if (d == 1) {
    for (int i = 0; i <= kCoarse; ++i) eval(lo[0] + h[0] * i, 0.0);
  } else {
    for (int i = 0; i <= kCoarse; ++i) {
      const double x = lo[0] + h[0] * i;
      for (int j = 0; j <= kCoarse; ++j) eval(x, lo[1] + h[1] * j);
    }
  }
  // three zoom rounds around the incumbent, 41 points per axis, window equal
  // to two coarse cells shrinking tenfold each round
  std::vector<double> half(d);
  for (std::size_t i = 0; i < d; ++i) half[i] = 2.0 * h[i];
  for (int round = 0; round < 3; ++round) {
    const Point center = best_w;
    if (d == 1) {
      for (int i = 0; i <= 40; ++i) eval(center[0] - half[0] + (2.0 * half[0] / 40.0) * i, 0.0);
    } else {
      for (int i = 0; i <= 40; ++i) {
        const double x = center[0] - half[0] + (2.0 * half[0] / 40.0) * i;
        for (int j = 0; j <= 40; ++j) eval(x, center[1] - half[1] + (2.0 * half[1] / 40.0) * j);
      }
    }
    for (auto& x : half) x *= 0.1;
  }
  return best;
}

inline double merit_affine_ascent(const VIProblem& vi, const Point& u) {
  const auto form = vi.B.affine_form();
  if (!form)
    throw std::invalid_argument(
        "merit: dimensions above 2 require an operator with affine structure");
  const Matrix& M = form->first;
  const Point& b = form->second;
  const std::size_t d = vi.C.dim();
  Matrix sym = symmetric_part(M);
  const double L = std::max(2.0 * operator_norm(sym), 1e-12);
  const double step_len = 1.0 / L;

  double best = -std::numeric_limits<double>::infinity();
  RandomStream st(SeedSpec{0x6D657269u, 16});  // fixed: merit evaluation must be deterministic
  std::vector<double> lo(d), hi(d);
  for (std::size_t i = 0; i < d; ++i) vi.C.bounding_interval(i, lo[i], hi[i]);

  for (int start = 0; start < 16; ++start) {
    Point w(d);
    if (start == 0) {
      w = u;
    } else if (start == 1) {
      for (std::size_t i = 0; i < d; ++i) w[i] = 0.5 * (lo[i] + hi[i]);
    } else {
      for (std::size_t i = 0; i < d; ++i) w[i] = lo[i] + (hi[i] - lo[i]) * st.uniform01();
    }
    w = vi.C.project(w);
    for (int it = 0; it < 400; ++it) {
      // gradient of <M w + b, u - w> in w
      Point g = M.apply_transposed(u);
      const Point sw = sym.apply(w);
      for (std::size_t i = 0; i < d; ++i) g[i] -= 2.0 * sw[i] + b[i];
      w = vi.C.project(add_scaled(w, step_len, g));
    }
    best = std::max(best, merit_objective(vi.B, u, w));
  }
  return best;
}

}  // namespace detail

inline double merit(const VIProblem& vi, const Point& u) {
  check_same_dim(u.size(), vi.C.dim(), "merit");
  if (vi.C.dim() <= 2) return detail::merit_grid(vi, u);
  return detail::merit_affine_ascent(vi, u);
}

/* Upper bound on the Lipschitz constant of the merit value: sup of ||B w||
 * over C. For affine operators, ||B c0|| + ||M|| rho where rho is the set's
 * radius around c0; otherwise a dense grid in dimensions 1-2.
 */
inline double merit_lipschitz(const VIProblem& vi) {
  const std::size_t d = vi.C.dim();
  if (const auto form = vi.B.affine_form()) {
    Point c0(d);
    double rho = 0.0;
    if (vi.C.kind() == ConvexSet::Kind::ball) {
      c0 = vi.C.center();
      rho = vi.C.radius();
    } else {
      for (std::size_t i = 0; i < d; ++i) {
        double lo, hi;
        vi.C.bounding_interval(i, lo, hi);
        c0[i] = 0.5 * (lo + hi);
        rho += 0.25 * (hi - lo) * (hi - lo);
      }
      rho = std::sqrt(rho);
    }
    return norm(vi.B.apply(c0)) + operator_norm(form->first) * rho;
  }
  if (d > 2)
    throw std::invalid_argument(
        "merit_lipschitz: dimensions above 2 require an operator with affine structure");
  std::vector<double> lo(d), hi(d);
  for (std::size_t i = 0; i < d; ++i) vi.C.bounding_interval(i, lo[i], hi[i]);
  double best = 0.0;
  const int N = 400;
  Point cand(d);
  for (int i = 0; i <= N; ++i) {
    cand[0] = lo[0] + (hi[0] - lo[0]) * i / N;
    if (d == 1) {
      best = std::max(best, norm(vi.B.apply(vi.C.project(cand))));
    } else {
      for (int j = 0; j <= N; ++j) {
        cand[1] = lo[1] + (hi[1] - lo[1]) * j / N;
        best = std::max(best, norm(vi.B.apply(vi.C.project(cand))));
      }
    }
  }
  return 1.05 * best;  // grid slack
}

/* Noise-and-step partial sums entering the ergodic merit bound: element n-1
 * holds (1/2) sum_{t<=n} lambda_t gamma_t^2 ((1 + sigma^2 alpha_t) m_t + sigma^2)
 * where m_t estimates the mean squared norm of B at the t-th pre-step iterate.
 */
inline std::vector<double> ergodic_noise_partial_sums(const Schedule& s, const OracleParams& p,
                                                      const std::vector<double>& mean_b_norm_sq) {
  std::vector<double> out;
  out.reserve(mean_b_norm_sq.size());
  const double s2 = p.sigma * p.sigma;
  double acc = 0.0;
  for (std::size_t t = 1; t <= mean_b_norm_sq.size(); ++t) {
    const double g = s.gamma(static_cast<int>(t));
    const double l = s.lambda(static_cast<int>(t));
    acc += 0.5 * l * g * g * ((1.0 + s2 * p.alpha(static_cast<int>(t))) * mean_b_norm_sq[t - 1] + s2);
    out.push_back(acc);
  }
  return out;
}

// Bound on the expected merit of the n-th ergodic average.
inline double ergodic_bound(double theta0, double theta1_partial, double weight_sum) {
  if (!(weight_sum > 0.0)) throw std::invalid_argument("ergodic_bound: weight_sum must be > 0");
  return (theta0 + theta1_partial) / weight_sum;
}

}  // namespace sfb
