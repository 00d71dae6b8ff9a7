#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sfb/oracle.hpp"
#include "sfb/problem.hpp"
#include "sfb/random.hpp"
#include "sfb/schedule.hpp"
#include "sfb/trajectory.hpp"

namespace sfb {

/* Relaxed stochastic forward-backward iteration:
 *   z_n = w_n - gamma_n * sample_n
 *   y_n = J_{gamma_n A}(z_n)
 *   w_{n+1} = (1 - lambda_n) w_n + lambda_n y_n
 * Exactly one oracle sample per step, also when lambda = 0, so seeded streams
 * stay aligned across schedules that differ only in lambda.
 */

struct StepResult {
  Point w_next;
  StepRecord record;
};

inline StepResult step(const InclusionProblem& p, const StochasticOracle& o, const Point& w,
                       double gamma, double lambda, RandomStream& stream) {
  if (!(gamma > 0.0) || !std::isfinite(gamma))
    throw std::invalid_argument("step: gamma must be > 0");
  if (!(lambda >= 0.0) || !(lambda <= 1.0))
    throw std::invalid_argument("step: lambda must lie in [0, 1]");
  const Point sample = o.sample(w, stream);
  StepResult r;
  r.record.gamma = gamma;
  r.record.lambda = lambda;
  r.record.z = add_scaled(w, -gamma, sample);
  r.record.y = p.A().resolvent(gamma, r.record.z);
  r.w_next = combine(1.0 - lambda, w, lambda, r.record.y);
  return r;
}

inline Trajectory run(const InclusionProblem& p, const StochasticOracle& o, const Schedule& s,
                      const Point& w1, int n_steps, SeedSpec seed) {
  if (n_steps < 0) throw std::invalid_argument("run: n_steps must be >= 0");
  validate_finite(w1, "run: w1");
  if (p.dim() != 0 && w1.size() != p.dim())
    throw std::invalid_argument("run: w1 dimension mismatch");
  RandomStream stream(seed);
  Trajectory traj;
  traj.start(w1);
  Point w = w1;
  for (int n = 1; n <= n_steps; ++n) {
    StepResult r = step(p, o, w, s.gamma(n), s.lambda(n), stream);
    for (double x : r.w_next)
      if (!std::isfinite(x))
        throw std::runtime_error("run: non-finite iterate at step " + std::to_string(n) +
                                 " (diverged)");
    w = r.w_next;
    traj.append(w, std::move(r.record));
  }
  if (p.known_solution()) {
    std::vector<double> d(static_cast<std::size_t>(n_steps) + 1);
    for (std::size_t i = 0; i < d.size(); ++i)
      d[i] = distance_sq(traj.iterate(i + 1), *p.known_solution());
    traj.set_sq_dist(std::move(d));
  }
  return traj;
}

/* Assumption report for a (problem, oracle, schedule, epsilon) quadruple.
 *
 *  step_size_ok         gamma_n <= (2 - epsilon) beta / (1 + 2 sigma^2 alpha_n)
 *                       for every n up to the horizon
 *  perturbation_seq     chi^2_n = lambda_n gamma_n^2 (1 + 2 alpha_n ||B w*||^2),
 *                       filled when the solution is known (first entries only)
 *  weight_sum_diverges  sum lambda_n gamma_n = +inf
 *  perturbations_summable  sum chi^2_n < +inf
 * Divergence/summability is decided analytically for power-law and constant
 * schedules; explicit lists fall back to a partial-sum growth heuristic.
 */
struct AssumptionReport {
  double epsilon = 0.0;
  bool step_size_ok = false;
  std::vector<int> step_size_violations;  // first few offending indices
  std::vector<double> perturbation_seq;
  bool weight_sum_diverges = false;
  bool perturbations_summable = false;
  bool analytic = false;
  std::string notes;

  bool all_ok() const { return step_size_ok && weight_sum_diverges && perturbations_summable; }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["epsilon"] = epsilon;
    j["step_size_ok"] = step_size_ok;
    j["step_size_violations"] = step_size_violations;
    j["weight_sum_diverges"] = weight_sum_diverges;
    j["perturbations_summable"] = perturbations_summable;
    j["analytic"] = analytic;
    j["notes"] = notes;
    if (!perturbation_seq.empty()) j["perturbation_seq"] = perturbation_seq;
    return j;
  }
};

inline AssumptionReport check_assumptions(const InclusionProblem& p, const StochasticOracle& o,
                                          const Schedule& s, double epsilon, int horizon) {
  if (!(epsilon > 0.0) || !(epsilon < 2.0))
    throw std::invalid_argument("check_assumptions: epsilon must lie in (0, 2)");
  if (horizon < 1) throw std::invalid_argument("check_assumptions: horizon must be >= 1");
  if (s.horizon_limit() != 0)
    horizon = std::min<int>(horizon, static_cast<int>(s.horizon_limit()));

  AssumptionReport rep;
  rep.epsilon = epsilon;
  const double sigma = o.effective_sigma();
  const double beta = p.beta();

  rep.step_size_ok = true;
  for (int n = 1; n <= horizon; ++n) {
    const double cap = (2.0 - epsilon) * beta / (1.0 + 2.0 * sigma * sigma * o.params().alpha(n));
    if (s.gamma(n) > cap * (1.0 + 1e-12)) {
      rep.step_size_ok = false;
      if (rep.step_size_violations.size() < 16) rep.step_size_violations.push_back(n);
    }
  }

  double bnorm_sq = 0.0;
  bool have_solution = p.known_solution().has_value();
  if (have_solution) bnorm_sq = norm_sq(p.B().apply(*p.known_solution()));
  const int keep = std::min(horizon, 4096);
  if (have_solution) {
    rep.perturbation_seq.reserve(static_cast<std::size_t>(keep));
    for (int n = 1; n <= keep; ++n) {
      const double g = s.gamma(n);
      rep.perturbation_seq.push_back(s.lambda(n) * g * g *
                                     (1.0 + 2.0 * o.params().alpha(n) * bnorm_sq));
    }
  }

  const bool const_alpha = o.params().alpha_list.empty();
  if (s.gamma_kind() != Schedule::GammaKind::explicit_list &&
      s.lambda_kind() == Schedule::LambdaKind::constant && const_alpha) {
    rep.analytic = true;
    const double lam = s.lambda(1);
    if (s.gamma_kind() == Schedule::GammaKind::power_law) {
      // theta <= 1 by construction, so the weight sum diverges whenever lam > 0
      rep.weight_sum_diverges = lam > 0.0;
      rep.perturbations_summable = lam == 0.0 || s.theta() > 0.5;
      rep.notes = "power-law schedule classified analytically";
    } else {
      rep.weight_sum_diverges = lam > 0.0;
      rep.perturbations_summable = lam == 0.0;
      rep.notes = "constant schedule classified analytically";
    }
  } else {
    // Partial-sum growth heuristic: compare the second half's contribution
    // against the total. Horizon 10^6 or the explicit list length.
    rep.analytic = false;
    long long T = 1000000;
    if (s.horizon_limit() != 0) T = static_cast<long long>(s.horizon_limit());
    const double alpha_term = 2.0 * bnorm_sq;
    double wsum = 0.0, whalf = 0.0, csum = 0.0, chalf = 0.0;
    for (long long n = 1; n <= T; ++n) {
      const int ni = static_cast<int>(n);
      const double g = s.gamma(ni), l = s.lambda(ni);
      const double chi = l * g * g * (1.0 + o.params().alpha(ni) * alpha_term);
      wsum += l * g;
      csum += chi;
      if (2 * n <= T) {
        whalf = wsum;
        chalf = csum;
      }
    }
    rep.weight_sum_diverges = wsum > 0.0 && (wsum - whalf) > 0.05 * wsum;
    rep.perturbations_summable = csum == 0.0 || (csum - chalf) < 0.01 * csum;
    rep.notes = "partial-sum heuristic over horizon " + std::to_string(T);
  }
  return rep;
}

/* Monte Carlo diagnostics of the almost-sure convergence mechanism: for each
 * n, the mean squared distance to the solution, the running weighted inner
 * product sum S_n = sum lambda_t gamma_t <w_t - w*, B w_t - B w*>, the
 * relaxation residual sum U_n = sum lambda_t ||w_t - y_t||^2, and the sum of
 * ||w_t - y_t - gamma_t (sample_t - B w*)||^2. Mean-decrease violations are
 * counted against the per-step allowance 2 sigma^2 chi^2_n plus 5 standard
 * errors.
 */
struct FejerDiagnostics {
  std::vector<double> mean_sq_dist;      // index n-1 -> iterate n
  std::vector<double> stderr_sq_dist;
  std::vector<double> mean_inner_sum;    // index n-1 -> S_n
  std::vector<double> mean_residual_sum; // index n-1 -> U_n
  std::vector<double> mean_u_sum;
  bool inner_sum_bounded = false;
  bool residual_sum_bounded = false;
  int monotonicity_violations = 0;
};

inline FejerDiagnostics fejer_diagnostics(const std::vector<Trajectory>& trajs,
                                          const InclusionProblem& p, const Schedule& s,
                                          const StochasticOracle& o) {
  if (trajs.empty()) throw std::invalid_argument("fejer_diagnostics: no trajectories");
  if (!p.known_solution())
    throw std::invalid_argument("fejer_diagnostics: known solution required");
  const Point& wbar = *p.known_solution();
  const Point b_at_sol = p.B().apply(wbar);
  const double bnorm_sq = norm_sq(b_at_sol);
  std::size_t n_steps = trajs.front().steps();
  for (const auto& t : trajs) n_steps = std::min(n_steps, t.steps());
  if (n_steps == 0) throw std::invalid_argument("fejer_diagnostics: empty trajectories");
  const std::size_t R = trajs.size();

  FejerDiagnostics d;
  const std::size_t N = n_steps + 1;
  d.mean_sq_dist.assign(N, 0.0);
  d.stderr_sq_dist.assign(N, 0.0);
  d.mean_inner_sum.assign(n_steps, 0.0);
  d.mean_residual_sum.assign(n_steps, 0.0);
  d.mean_u_sum.assign(n_steps, 0.0);
  std::vector<double> sq_sum(N, 0.0), sq_sumsq(N, 0.0);

  for (const auto& t : trajs) {
    double S = 0.0, U = 0.0, Usol = 0.0;
    for (std::size_t n = 1; n <= N; ++n) {
      const double sq = distance_sq(t.iterate(n), wbar);
      sq_sum[n - 1] += sq;
      sq_sumsq[n - 1] += sq * sq;
      if (n > n_steps) break;
      const auto& rec = t.step_record(n);
      const Point& w = t.iterate(n);
      const Point bw = p.B().apply(w);
      S += rec.lambda * rec.gamma * dot(subtract(w, wbar), subtract(bw, b_at_sol));
      U += rec.lambda * distance_sq(w, rec.y);
      // sample_n = (w_n - z_n)/gamma_n
      Point u = subtract(w, rec.y);
      for (std::size_t k = 0; k < u.size(); ++k) {
        const double samp = (w[k] - rec.z[k]) / rec.gamma;
        u[k] -= rec.gamma * (samp - b_at_sol[k]);
      }
      Usol += rec.lambda * norm_sq(u);
      d.mean_inner_sum[n - 1] += S;
      d.mean_residual_sum[n - 1] += U;
      d.mean_u_sum[n - 1] += Usol;
    }
  }
  const double invR = 1.0 / static_cast<double>(R);
  for (std::size_t i = 0; i < N; ++i) {
    d.mean_sq_dist[i] = sq_sum[i] * invR;
    if (R > 1) {
      const double var =
          std::max(0.0, (sq_sumsq[i] - sq_sum[i] * sq_sum[i] * invR) / (static_cast<double>(R) - 1.0));
      d.stderr_sq_dist[i] = std::sqrt(var * invR);
    }
  }
  for (auto& x : d.mean_inner_sum) x *= invR;
  for (auto& x : d.mean_residual_sum) x *= invR;
  for (auto& x : d.mean_u_sum) x *= invR;

  // bounded verdict: the last quartile contributes < 5% of the total
  auto bounded = [&](const std::vector<double>& v) {
    const double last = v.back();
    const double at34 = v[(v.size() * 3) / 4 - (v.size() >= 4 ? 1 : 0)];
    return (last - at34) <= 0.05 * std::fabs(last) + 1e-12;
  };
  d.inner_sum_bounded = bounded(d.mean_inner_sum);
  d.residual_sum_bounded = bounded(d.mean_residual_sum);

  const double sigma = o.effective_sigma();
  for (std::size_t n = 1; n <= n_steps; ++n) {
    const double g = s.gamma(static_cast<int>(n));
    const double chi =
        s.lambda(static_cast<int>(n)) * g * g *
        (1.0 + 2.0 * o.params().alpha(static_cast<int>(n)) * bnorm_sq);
    const double allowance = 2.0 * sigma * sigma * chi + 5.0 * d.stderr_sq_dist[n];
    if (d.mean_sq_dist[n] > d.mean_sq_dist[n - 1] + allowance) ++d.monotonicity_violations;
  }
  return d;
}

}  // namespace sfb
