#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace sfb {

/* (t^c - 1) / c, continuously extended to log t at c = 0. The expm1 form
 * keeps full precision where t^c is close to 1.
 */
inline double generalized_log(double c, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("generalized_log: t must be > 0");
  if (c == 1.0) return t - 1.0;
  const double lt = std::log(t);
  if (c == 0.0) return lt;
  return std::expm1(c * lt) / c;
}

/* Closed-form majorant for the extremal recursion
 *   s_{n+1} = (1 - eta_n) s_n + tau eta_n^2,   eta_n = c n^{-alpha},
 * started at s_{n0}. Both forms bound s_{n+1} and require n >= 2 n0 with
 * n0 >= max(2, c^{1/alpha}) so that eta_n <= 1 throughout.
 */
inline double chung_bound_sublinear(double alpha, double c, double tau, double s_n0,
                                    long long n0, long long n) {
  if (!(alpha > 0.0) || !(alpha < 1.0))
    throw std::invalid_argument("chung_bound_sublinear: alpha must lie in (0, 1)");
  if (!(c > 0.0)) throw std::invalid_argument("chung_bound_sublinear: c must be > 0");
  if (!(tau >= 0.0) || !(s_n0 >= 0.0))
    throw std::invalid_argument("chung_bound_sublinear: tau and s_n0 must be >= 0");
  if (n0 < 2) throw std::invalid_argument("chung_bound_sublinear: n0 must be >= 2");
  if (n < 2 * n0) throw std::invalid_argument("chung_bound_sublinear: need n >= 2 n0");

  const double t = 1.0 - std::exp2(alpha - 1.0);
  const double om = 1.0 - alpha;
  const double np1_pow = std::pow(static_cast<double>(n) + 1.0, om);
  double total = 0.0;
  if (tau > 0.0) {
    total += tau * c * c * generalized_log(1.0 - 2.0 * alpha, static_cast<double>(n)) *
             std::exp(-c * t * np1_pow / om);
    total += tau * std::exp2(alpha) * c / std::pow(static_cast<double>(n - 2), alpha);
  }
  if (s_n0 > 0.0) {
    // single combined exponent; the split form overflows long before the
    // difference does
    const double e = c * (std::pow(static_cast<double>(n0), om) - t * np1_pow) / om;
    total += s_n0 * std::exp(e);
  }
  return total;
}

inline double chung_bound_harmonic(double c, double tau, double s_n0, long long n0,
                                   long long n) {
  if (!(c > 0.0)) throw std::invalid_argument("chung_bound_harmonic: c must be > 0");
  if (!(tau >= 0.0) || !(s_n0 >= 0.0))
    throw std::invalid_argument("chung_bound_harmonic: tau and s_n0 must be >= 0");
  if (n0 < 2) throw std::invalid_argument("chung_bound_harmonic: n0 must be >= 2");
  if (n < 2 * n0) throw std::invalid_argument("chung_bound_harmonic: need n >= 2 n0");

  const double np1 = static_cast<double>(n) + 1.0;
  double total = 0.0;
  if (s_n0 > 0.0) total += s_n0 * std::pow(static_cast<double>(n0) / np1, c);
  if (tau > 0.0)
    total += tau * c * c * std::pow(1.0 + 1.0 / static_cast<double>(n0), c) *
             generalized_log(c - 1.0, static_cast<double>(n)) / std::pow(np1, c);
  return total;
}

/* Parameters of the extremal recursion itself. */
struct ChungParams {
  double alpha = 1.0;  // step exponent, in (0, 1]
  double c = 1.0;      // contraction scale, > 0
  double tau = 0.0;    // noise scale, >= 0
  double s_start = 0.0;

  long long n0() const {
    const double v = std::pow(c, 1.0 / alpha);
    return std::max<long long>(2, static_cast<long long>(std::ceil(v)));
  }

  void validate() const {
    if (!(alpha > 0.0) || !(alpha <= 1.0))
      throw std::invalid_argument("ChungParams: alpha must lie in (0, 1]");
    if (!(c > 0.0)) throw std::invalid_argument("ChungParams: c must be > 0");
    if (!(tau >= 0.0)) throw std::invalid_argument("ChungParams: tau must be >= 0");
    if (!(s_start >= 0.0)) throw std::invalid_argument("ChungParams: s_start must be >= 0");
  }
};

/* Runs the recursion at equality from s_{n0} = s_start; element k of the
 * result is s_{n0 + k}, up to s_{n_max}. This is the worst case over every
 * sequence satisfying the recursion as an inequality, so the closed-form
 * majorants above must dominate it pointwise.
 */
inline std::vector<double> chung_recursion_worst_case(const ChungParams& p, long long n_max) {
  p.validate();
  const long long n0 = p.n0();
  if (n_max < n0) throw std::invalid_argument("chung_recursion_worst_case: n_max < n0");
  std::vector<double> s;
  s.reserve(static_cast<std::size_t>(n_max - n0 + 1));
  s.push_back(p.s_start);
  for (long long n = n0; n < n_max; ++n) {
    const double eta = p.c * std::pow(static_cast<double>(n), -p.alpha);
    s.push_back((1.0 - eta) * s.back() + p.tau * eta * eta);
  }
  return s;
}

/* Constants entering the mean-squared-distance bound for a power-law
 * schedule gamma_n = c1 n^{-theta}, lambda_n >= lambda_lower, applied to a
 * problem whose operators are strongly monotone with moduli (nu, mu).
 *
 * The two flags select between published variants of the same constants:
 * the contraction coefficient either counts the resolvent modulus twice or
 * once, and the noise constant either squares the driving-operator norm at
 * the solution or uses its first power. Defaults: double count, squared.
 */
struct RateConstants {
  double theta = 1.0;
  double c1 = 1.0;
  double lambda_lower = 1.0;
  double nu = 0.0;
  double mu = 0.0;
  double epsilon = 0.5;
  double sigma = 0.0;
  double alpha_bar = 0.0;
  double b_norm_at_solution = 0.0;
  bool c_uses_double_nu = true;
  bool tau_uses_sq_norm = true;

  void validate() const {
    if (!(theta > 0.0) || !(theta <= 1.0))
      throw std::invalid_argument("RateConstants: theta must lie in (0, 1]");
    if (!(c1 > 0.0)) throw std::invalid_argument("RateConstants: c1 must be > 0");
    if (!(lambda_lower > 0.0) || !(lambda_lower <= 1.0))
      throw std::invalid_argument("RateConstants: lambda_lower must lie in (0, 1]");
    if (!(nu >= 0.0) || !(mu >= 0.0))
      throw std::invalid_argument("RateConstants: nu and mu must be >= 0");
    if (!(epsilon > 0.0) || !(epsilon < 2.0))
      throw std::invalid_argument("RateConstants: epsilon must lie in (0, 2)");
    if (!(sigma >= 0.0)) throw std::invalid_argument("RateConstants: sigma must be >= 0");
    if (!(alpha_bar >= 0.0)) throw std::invalid_argument("RateConstants: alpha_bar must be >= 0");
    if (!(b_norm_at_solution >= 0.0))
      throw std::invalid_argument("RateConstants: b_norm_at_solution must be >= 0");
    if (!(c() > 0.0))
      throw std::invalid_argument("RateConstants: contraction constant is zero; need nu > 0 or mu > 0");
  }

  double t() const { return 1.0 - std::exp2(theta - 1.0); }

  double c() const {
    const double num = c_uses_double_nu ? (2.0 * nu + mu * epsilon) : (nu + mu * epsilon);
    return c1 * lambda_lower * num / ((1.0 + nu) * (1.0 + nu));
  }

  double tau() const {
    const double b = tau_uses_sq_norm ? b_norm_at_solution * b_norm_at_solution
                                      : b_norm_at_solution;
    const double cc = c();
    return 2.0 * sigma * sigma * c1 * c1 * (1.0 + alpha_bar * b) / (cc * cc);
  }

  long long n0() const {
    const double v = std::pow(std::max(c(), c1), 1.0 / theta);
    return std::max<long long>(2, static_cast<long long>(std::ceil(v)));
  }
};

/* Bound on E||w_{n+1} - w*||^2 given the empirical (or assumed) value at
 * n0. Valid for n >= 2 n0.
 */
inline double mse_bound(const RateConstants& k, double s_n0, long long n) {
  k.validate();
  if (k.theta < 1.0) return chung_bound_sublinear(k.theta, k.c(), k.tau(), s_n0, k.n0(), n);
  return chung_bound_harmonic(k.c(), k.tau(), s_n0, k.n0(), n);
}

/* Indexed so that eval_at(n) bounds the n-th iterate: the closed forms bound
 * s_{m+1} in terms of m, hence eval_at(n) = mse_bound(k, s_n0, n - 1) and the
 * first valid iterate index is 2 n0 + 1.
 */
struct BoundCurve {
  RateConstants constants;
  double s_n0 = 0.0;

  long long first_valid_index() const { return 2 * constants.n0() + 1; }

  double eval_at(long long n) const {
    if (n < first_valid_index())
      throw std::invalid_argument("BoundCurve: index below first_valid_index");
    return mse_bound(constants, s_n0, n - 1);
  }
};

enum class RateClass { power_theta, power_c, harmonic_log, harmonic };

struct AsymptoticRate {
  RateClass cls;
  double power;     // decay is n^{-power} ...
  bool log_factor;  // ... times log n when set
};

inline AsymptoticRate asymptotic_rate_class(double theta, double c) {
  if (!(theta > 0.0) || !(theta <= 1.0))
    throw std::invalid_argument("asymptotic_rate_class: theta must lie in (0, 1]");
  if (!(c > 0.0)) throw std::invalid_argument("asymptotic_rate_class: c must be > 0");
  if (theta < 1.0) return {RateClass::power_theta, theta, false};
  if (c < 1.0) return {RateClass::power_c, c, false};
  if (c == 1.0) return {RateClass::harmonic_log, 1.0, true};
  return {RateClass::harmonic, 1.0, false};
}

inline std::string rate_class_name(RateClass c) {
  switch (c) {
    case RateClass::power_theta: return "power_theta";
    case RateClass::power_c: return "power_c";
    case RateClass::harmonic_log: return "harmonic_log";
    case RateClass::harmonic: return "harmonic";
  }
  return "unknown";
}

}  // namespace sfb
