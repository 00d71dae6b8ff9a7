#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sfb/operators.hpp"
#include "sfb/point.hpp"
#include "sfb/random.hpp"

namespace sfb {

/* Stochastic first-order oracle for a cocoercive B.
 *
 * A sample at w is an unbiased estimate of B w whose conditional second moment
 * is declared to satisfy E||sample - Bw||^2 <= sigma^2 (1 + alpha_n ||Bw||^2).
 * The declaration is a contract: verify_moments checks it empirically.
 *
 * Noise models:
 *   exact              sample = Bw, consumes no randomness
 *   additive_gaussian  isotropic Gaussian noise with total variance sigma^2
 *   relative_gaussian  total variance sigma^2 (1 + alpha_bar ||Bw||^2), tight
 *   finite_sum_sampling one uniformly drawn affine component b_i(w)
 */

struct OracleParams {
  double sigma = 1.0;
  double alpha_bar = 0.0;
  // optional per-step alpha_n for assumption checks; entries must not exceed
  // alpha_bar, indices beyond the list fall back to alpha_bar
  std::vector<double> alpha_list;
  // actual noise scale = noise_scale * sigma; values != 1 deliberately
  // misdeclare the oracle (negative controls for verify_moments)
  double noise_scale = 1.0;

  double alpha(int n) const {
    if (n < 1) throw std::invalid_argument("OracleParams::alpha: n must be >= 1");
    if (static_cast<std::size_t>(n) <= alpha_list.size())
      return alpha_list[static_cast<std::size_t>(n) - 1];
    return alpha_bar;
  }

  void validate() const {
    if (!(sigma > 0.0) || !std::isfinite(sigma))
      throw std::invalid_argument("OracleParams: sigma must be > 0");
    if (!(alpha_bar >= 0.0) || !std::isfinite(alpha_bar))
      throw std::invalid_argument("OracleParams: alpha_bar must be >= 0");
    for (double a : alpha_list)
      if (!(a >= 0.0) || a > alpha_bar)
        throw std::invalid_argument("OracleParams: alpha_list entries must lie in [0, alpha_bar]");
    if (!(noise_scale >= 0.0) || !std::isfinite(noise_scale))
      throw std::invalid_argument("OracleParams: noise_scale must be >= 0");
  }
};

class StochasticOracle {
 public:
  enum class NoiseModel { exact, additive_gaussian, relative_gaussian, finite_sum_sampling };

  static StochasticOracle exact(CocoerciveOperator b) {
    StochasticOracle o(NoiseModel::exact, std::move(b), OracleParams{});
    return o;
  }

  static StochasticOracle additive_gaussian(CocoerciveOperator b, OracleParams p) {
    p.validate();
    return StochasticOracle(NoiseModel::additive_gaussian, std::move(b), std::move(p));
  }

  static StochasticOracle relative_gaussian(CocoerciveOperator b, OracleParams p) {
    p.validate();
    return StochasticOracle(NoiseModel::relative_gaussian, std::move(b), std::move(p));
  }

  // Components must be affine-representable; the mean operator is the affine
  // average, so beta/mu of the averaged operator come from the usual formulas.
  static StochasticOracle finite_sum(std::vector<CocoerciveOperator> components, OracleParams p) {
    p.validate();
    if (components.empty())
      throw std::invalid_argument("StochasticOracle::finite_sum: needs at least one component");
    const std::size_t d = components.front().dim();
    Matrix msum(d, d);
    Point bsum(d, 0.0);
    for (const auto& c : components) {
      auto af = c.affine_form();
      if (!af)
        throw std::invalid_argument(
            "StochasticOracle::finite_sum: components must be affine-representable");
      if (af->first.rows != d)
        throw std::invalid_argument("StochasticOracle::finite_sum: component dimension mismatch");
      for (std::size_t i = 0; i < msum.a.size(); ++i) msum.a[i] += af->first.a[i];
      for (std::size_t i = 0; i < d; ++i) bsum[i] += af->second[i];
    }
    const double inv = 1.0 / static_cast<double>(components.size());
    for (auto& v : msum.a) v *= inv;
    for (auto& v : bsum) v *= inv;
    StochasticOracle o(NoiseModel::finite_sum_sampling,
                       CocoerciveOperator::affine_monotone(std::move(msum), std::move(bsum)),
                       std::move(p));
    o.components_ = std::move(components);
    return o;
  }

  NoiseModel model() const { return model_; }
  const OracleParams& params() const { return params_; }
  const CocoerciveOperator& base() const { return base_; }
  const std::vector<CocoerciveOperator>& components() const { return components_; }
  std::size_t dim() const { return base_.dim(); }

  // sigma entering bounds and assumption checks; the exact model is noiseless
  double effective_sigma() const { return model_ == NoiseModel::exact ? 0.0 : params_.sigma; }

  Point mean(const Point& w) const { return base_.apply(w); }

  Point sample(const Point& w, RandomStream& stream) const {
    switch (model_) {
      case NoiseModel::exact:
        return base_.apply(w);
      case NoiseModel::additive_gaussian: {
        Point y = base_.apply(w);
        const double s =
            params_.noise_scale * params_.sigma / std::sqrt(static_cast<double>(y.size()));
        for (auto& x : y) x += s * stream.normal();
        return y;
      }
      case NoiseModel::relative_gaussian: {
        Point y = base_.apply(w);
        const double s = params_.noise_scale * params_.sigma *
                         std::sqrt((1.0 + params_.alpha_bar * norm_sq(y)) /
                                   static_cast<double>(y.size()));
        for (auto& x : y) x += s * stream.normal();
        return y;
      }
      case NoiseModel::finite_sum_sampling: {
        const std::size_t i = stream.uniform_index(components_.size());
        return components_[i].apply(w);
      }
    }
    return base_.apply(w);
  }

 private:
  StochasticOracle(NoiseModel m, CocoerciveOperator b, OracleParams p)
      : model_(m), base_(std::move(b)), params_(std::move(p)) {}

  NoiseModel model_;
  CocoerciveOperator base_;
  OracleParams params_;
  std::vector<CocoerciveOperator> components_;
};

struct ProbeMoment {
  double bias_norm = 0.0;
  double bias_tol = 0.0;
  double second_moment = 0.0;   // empirical E||sample - Bw||^2
  double declared_bound = 0.0;  // sigma^2 (1 + alpha_bar ||Bw||^2)
  double variance_ratio = 0.0;
  bool bias_ok = false;
  bool variance_ok = false;
};

struct MomentReport {
  std::vector<ProbeMoment> probes;
  bool bias_ok = true;
  bool variance_ok = true;
  bool ok = false;
};

// Empirical check of the declared oracle moments at the probe points.
// Bias passes when ||mean - Bw|| <= 5 sigma (1 + ||Bw||) / sqrt(n_draws)
// (with a tiny floor so noiseless oracles pass despite accumulation rounding);
// the second moment passes when empirical/declared <= 1 + 5/sqrt(n_draws).
inline MomentReport verify_moments(const StochasticOracle& o, const std::vector<Point>& probes,
                                   int n_draws, RandomStream& stream) {
  if (probes.empty()) throw std::invalid_argument("verify_moments: no probe points");
  if (n_draws < 2) throw std::invalid_argument("verify_moments: n_draws must be >= 2");
  MomentReport rep;
  const double sigma = o.effective_sigma();
  const double root_n = std::sqrt(static_cast<double>(n_draws));
  for (const auto& w : probes) {
    validate_finite(w, "verify_moments probe");
    const Point bw = o.mean(w);
    const double bnorm = norm(bw);
    Point sum(bw.size(), 0.0);
    double sum_sq = 0.0;
    for (int i = 0; i < n_draws; ++i) {
      const Point s = o.sample(w, stream);
      for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += s[k];
      sum_sq += distance_sq(s, bw);
    }
    ProbeMoment pm;
    for (auto& x : sum) x /= static_cast<double>(n_draws);
    pm.bias_norm = distance(sum, bw);
    pm.bias_tol = std::max(5.0 * sigma * (1.0 + bnorm) / root_n, 1e-12 * (1.0 + bnorm));
    pm.second_moment = sum_sq / static_cast<double>(n_draws);
    pm.declared_bound = sigma * sigma * (1.0 + o.params().alpha_bar * bnorm * bnorm);
    pm.variance_ratio = pm.declared_bound > 0.0 ? pm.second_moment / pm.declared_bound : 0.0;
    pm.bias_ok = pm.bias_norm <= pm.bias_tol;
    pm.variance_ok = pm.declared_bound > 0.0
                         ? pm.variance_ratio <= 1.0 + 5.0 / root_n
                         : pm.second_moment <= 1e-20;
    rep.bias_ok = rep.bias_ok && pm.bias_ok;
    rep.variance_ok = rep.variance_ok && pm.variance_ok;
    rep.probes.push_back(pm);
  }
  rep.ok = rep.bias_ok && rep.variance_ok;
  return rep;
}

}  // namespace sfb
