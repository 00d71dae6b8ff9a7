#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sfb {

// Step sizes gamma_n and relaxation weights lambda_n, n >= 1.
//   power_law: gamma_n = c1 * n^(-theta), theta in (0, 1]
//   constant:  gamma_n = c1
//   explicit_list: caller-supplied positive values (finite horizon)
// lambda is constant in [0,1] or an explicit list; lambda_lower is the
// declared infimum used by rate constants (0 = undeclared).
class Schedule {
 public:
  enum class GammaKind { power_law, constant, explicit_list };
  enum class LambdaKind { constant, explicit_list };

  static Schedule power_law(double c1, double theta, double lambda = 1.0) {
    Schedule s;
    s.gamma_kind_ = GammaKind::power_law;
    if (!(c1 > 0.0) || !std::isfinite(c1))
      throw std::invalid_argument("Schedule: c1 must be > 0");
    if (!(theta > 0.0) || !(theta <= 1.0))
      throw std::invalid_argument("Schedule: theta must lie in (0, 1]");
    s.c1_ = c1;
    s.theta_ = theta;
    s.set_constant_lambda(lambda);
    return s;
  }

  static Schedule constant(double gamma, double lambda = 1.0) {
    Schedule s;
    s.gamma_kind_ = GammaKind::constant;
    if (!(gamma > 0.0) || !std::isfinite(gamma))
      throw std::invalid_argument("Schedule: constant gamma must be > 0");
    s.c1_ = gamma;
    s.theta_ = 0.0;
    s.set_constant_lambda(lambda);
    return s;
  }

  static Schedule explicit_lists(std::vector<double> gammas, std::vector<double> lambdas) {
    Schedule s;
    s.gamma_kind_ = GammaKind::explicit_list;
    s.lambda_kind_ = LambdaKind::explicit_list;
    if (gammas.empty()) throw std::invalid_argument("Schedule: empty gamma list");
    if (gammas.size() != lambdas.size())
      throw std::invalid_argument("Schedule: gamma/lambda list length mismatch");
    for (double g : gammas)
      if (!(g > 0.0) || !std::isfinite(g))
        throw std::invalid_argument("Schedule: gamma entries must be > 0");
    double lower = 1.0;
    for (double l : lambdas) {
      if (!(l >= 0.0) || !(l <= 1.0))
        throw std::invalid_argument("Schedule: lambda entries must lie in [0, 1]");
      lower = std::min(lower, l);
    }
    s.gamma_list_ = std::move(gammas);
    s.lambda_list_ = std::move(lambdas);
    s.lambda_lower_ = lower > 0.0 ? lower : 0.0;
    return s;
  }

  double gamma(int n) const {
    require_index(n);
    switch (gamma_kind_) {
      case GammaKind::power_law: return c1_ * std::pow(static_cast<double>(n), -theta_);
      case GammaKind::constant: return c1_;
      case GammaKind::explicit_list:
        if (static_cast<std::size_t>(n) > gamma_list_.size())
          throw std::out_of_range("Schedule::gamma: index beyond explicit list");
        return gamma_list_[static_cast<std::size_t>(n) - 1];
    }
    return c1_;
  }

  double lambda(int n) const {
    require_index(n);
    if (lambda_kind_ == LambdaKind::constant) return lambda_value_;
    if (static_cast<std::size_t>(n) > lambda_list_.size())
      throw std::out_of_range("Schedule::lambda: index beyond explicit list");
    return lambda_list_[static_cast<std::size_t>(n) - 1];
  }

  GammaKind gamma_kind() const { return gamma_kind_; }
  LambdaKind lambda_kind() const { return lambda_kind_; }
  double c1() const { return c1_; }
  double theta() const { return theta_; }
  double lambda_lower() const { return lambda_lower_; }
  std::size_t horizon_limit() const {
    return gamma_kind_ == GammaKind::explicit_list ? gamma_list_.size() : 0;
  }

 private:
  static void require_index(int n) {
    if (n < 1) throw std::invalid_argument("Schedule: index n must be >= 1");
  }

  void set_constant_lambda(double lambda) {
    if (!(lambda >= 0.0) || !(lambda <= 1.0))
      throw std::invalid_argument("Schedule: lambda must lie in [0, 1]");
    lambda_kind_ = LambdaKind::constant;
    lambda_value_ = lambda;
    lambda_lower_ = lambda;
  }

  GammaKind gamma_kind_ = GammaKind::constant;
  LambdaKind lambda_kind_ = LambdaKind::constant;
  double c1_ = 1.0, theta_ = 0.0;
  double lambda_value_ = 1.0, lambda_lower_ = 1.0;
  std::vector<double> gamma_list_, lambda_list_;
};

}  // namespace sfb
