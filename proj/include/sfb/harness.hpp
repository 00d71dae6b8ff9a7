#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sfb/bounds.hpp"
#include "sfb/ergodic.hpp"
#include "sfb/format.hpp"
#include "sfb/operators.hpp"
#include "sfb/oracle.hpp"
#include "sfb/point.hpp"
#include "sfb/problem.hpp"
#include "sfb/random.hpp"
#include "sfb/schedule.hpp"
#include "sfb/solver.hpp"
#include "sfb/version.hpp"

namespace sfb {

/* ---------- JSON -> library object builders ---------- */

namespace detail {

inline const nlohmann::json& require_field(const nlohmann::json& j, const char* key,
                                           const char* where) {
  if (!j.is_object() || !j.contains(key))
    throw std::invalid_argument(std::string(where) + ": missing field '" + key + "'");
  return j.at(key);
}

inline double number_field(const nlohmann::json& j, const char* key, const char* where) {
  const auto& v = require_field(j, key, where);
  if (!v.is_number()) throw std::invalid_argument(std::string(where) + ": field '" + key +
                                                  "' must be a number");
  return v.get<double>();
}

inline double number_or(const nlohmann::json& j, const char* key, double fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  return j.at(key).get<double>();
}

inline Point point_field(const nlohmann::json& j, const char* key, const char* where) {
  const auto& v = require_field(j, key, where);
  if (!v.is_array()) throw std::invalid_argument(std::string(where) + ": field '" + key +
                                                 "' must be an array of numbers");
  Point p;
  p.reserve(v.size());
  for (const auto& x : v) {
    if (!x.is_number()) throw std::invalid_argument(std::string(where) + ": field '" + key +
                                                    "' must be an array of numbers");
    p.push_back(x.get<double>());
  }
  return p;
}

inline Matrix matrix_field(const nlohmann::json& j, const char* key, const char* where) {
  const auto& v = require_field(j, key, where);
  if (!v.is_array() || v.empty())
    throw std::invalid_argument(std::string(where) + ": field '" + key +
                                "' must be a non-empty array of rows");
  const std::size_t rows = v.size();
  std::size_t cols = 0;
  Matrix m;
  for (std::size_t i = 0; i < rows; ++i) {
    if (!v.at(i).is_array())
      throw std::invalid_argument(std::string(where) + ": field '" + key +
                                  "' rows must be arrays");
    if (i == 0) {
      cols = v.at(i).size();
      m = Matrix(rows, cols);
    } else if (v.at(i).size() != cols) {
      throw std::invalid_argument(std::string(where) + ": field '" + key +
                                  "' rows have unequal length");
    }
    for (std::size_t k = 0; k < cols; ++k) m.at(i, k) = v.at(i).at(k).get<double>();
  }
  return m;
}

inline std::string string_field(const nlohmann::json& j, const char* key, const char* where) {
  const auto& v = require_field(j, key, where);
  if (!v.is_string()) throw std::invalid_argument(std::string(where) + ": field '" + key +
                                                  "' must be a string");
  return v.get<std::string>();
}

}  // namespace detail

inline ScalarPenalty scalar_penalty_from_json(const nlohmann::json& j) {
  const std::string kind = detail::string_field(j, "kind", "penalty");
  if (kind == "zero") return ScalarPenalty::zero();
  if (kind == "abs") return ScalarPenalty::abs(detail::number_field(j, "weight", "penalty"));
  if (kind == "square") return ScalarPenalty::square(detail::number_field(j, "weight", "penalty"));
  if (kind == "interval")
    return ScalarPenalty::interval(detail::number_field(j, "lo", "penalty"),
                                   detail::number_field(j, "hi", "penalty"));
  throw std::invalid_argument("penalty: unknown kind '" + kind + "'");
}

inline ResolventOperator resolvent_from_json(const nlohmann::json& j) {
  const std::string kind = detail::string_field(j, "kind", "A");
  if (kind == "zero") return ResolventOperator::zero();
  if (kind == "normal_cone_box")
    return ResolventOperator::box(detail::point_field(j, "lo", "A"),
                                  detail::point_field(j, "hi", "A"));
  if (kind == "normal_cone_ball")
    return ResolventOperator::ball(detail::point_field(j, "center", "A"),
                                   detail::number_field(j, "radius", "A"));
  if (kind == "scaled_identity")
    return ResolventOperator::scaled_identity(detail::number_field(j, "a", "A"));
  if (kind == "subdifferential_l1")
    return ResolventOperator::l1(detail::number_field(j, "weight", "A"));
  if (kind == "separable_penalty") {
    const auto& phis = detail::require_field(j, "phis", "A");
    if (!phis.is_array() || phis.empty())
      throw std::invalid_argument("A: 'phis' must be a non-empty array");
    std::vector<ScalarPenalty> ps;
    ps.reserve(phis.size());
    for (const auto& pj : phis) ps.push_back(scalar_penalty_from_json(pj));
    return ResolventOperator::separable(
        SeparablePenalty(std::move(ps), detail::number_or(j, "nu", 0.0)));
  }
  throw std::invalid_argument("A: unknown kind '" + kind + "'");
}

inline CocoerciveOperator cocoercive_from_json(const nlohmann::json& j) {
  const std::string kind = detail::string_field(j, "kind", "B");
  if (kind == "affine")
    return CocoerciveOperator::affine_monotone(detail::matrix_field(j, "matrix", "B"),
                                               detail::point_field(j, "offset", "B"));
  if (kind == "affine_spd")
    return CocoerciveOperator::affine_spd(detail::matrix_field(j, "matrix", "B"),
                                          detail::point_field(j, "offset", "B"));
  if (kind == "gradient_quadratic")
    return CocoerciveOperator::gradient_quadratic(detail::matrix_field(j, "q", "B"),
                                                  detail::point_field(j, "center", "B"));
  if (kind == "gradient_least_squares")
    return CocoerciveOperator::gradient_least_squares(detail::matrix_field(j, "design", "B"),
                                                      detail::point_field(j, "targets", "B"));
  if (kind == "gradient_logistic") {
    const Point lab = detail::point_field(j, "labels", "B");
    return CocoerciveOperator::gradient_logistic(detail::matrix_field(j, "design", "B"),
                                                 std::vector<double>(lab.begin(), lab.end()));
  }
  throw std::invalid_argument("B: unknown kind '" + kind + "'");
}

inline Schedule schedule_from_json(const nlohmann::json& j) {
  const std::string kind = detail::string_field(j, "kind", "schedule");
  if (kind == "power_law")
    return Schedule::power_law(detail::number_field(j, "c1", "schedule"),
                               detail::number_field(j, "theta", "schedule"),
                               detail::number_or(j, "lambda", 1.0));
  if (kind == "constant")
    return Schedule::constant(detail::number_field(j, "gamma", "schedule"),
                              detail::number_or(j, "lambda", 1.0));
  if (kind == "explicit") {
    const Point g = detail::point_field(j, "gammas", "schedule");
    const Point l = detail::point_field(j, "lambdas", "schedule");
    return Schedule::explicit_lists(std::vector<double>(g.begin(), g.end()),
                                    std::vector<double>(l.begin(), l.end()));
  }
  throw std::invalid_argument("schedule: unknown kind '" + kind + "'");
}

inline ConvexSet convex_set_from_json(const nlohmann::json& j) {
  const std::string kind = detail::string_field(j, "kind", "C");
  if (kind == "box")
    return ConvexSet::box(detail::point_field(j, "lo", "C"), detail::point_field(j, "hi", "C"));
  if (kind == "ball")
    return ConvexSet::ball(detail::point_field(j, "center", "C"),
                           detail::number_field(j, "radius", "C"));
  throw std::invalid_argument("C: unknown kind '" + kind + "'");
}

inline OracleParams oracle_params_from_json(const nlohmann::json& j) {
  OracleParams p;
  p.sigma = detail::number_or(j, "sigma", 1.0);
  p.alpha_bar = detail::number_or(j, "alpha_bar", 0.0);
  p.noise_scale = detail::number_or(j, "noise_scale", 1.0);
  if (j.contains("alpha_list")) {
    const Point a = detail::point_field(j, "alpha_list", "oracle");
    p.alpha_list.assign(a.begin(), a.end());
  }
  return p;
}

/* base comes from the experiment's B spec for the pointwise-noise models and
 * from the listed components for finite-sum sampling.
 */
inline StochasticOracle oracle_from_json(const nlohmann::json& j,
                                         std::optional<CocoerciveOperator> base) {
  const std::string model = detail::string_field(j, "model", "oracle");
  if (model == "finite_sum") {
    const auto& comps = detail::require_field(j, "components", "oracle");
    if (!comps.is_array() || comps.empty())
      throw std::invalid_argument("oracle: 'components' must be a non-empty array");
    std::vector<CocoerciveOperator> cs;
    cs.reserve(comps.size());
    for (const auto& cj : comps) cs.push_back(cocoercive_from_json(cj));
    return StochasticOracle::finite_sum(std::move(cs), oracle_params_from_json(j));
  }
  if (!base) throw std::invalid_argument("oracle: model '" + model + "' requires a B spec");
  if (model == "exact") return StochasticOracle::exact(std::move(*base));
  if (model == "additive_gaussian")
    return StochasticOracle::additive_gaussian(std::move(*base), oracle_params_from_json(j));
  if (model == "relative_gaussian")
    return StochasticOracle::relative_gaussian(std::move(*base), oracle_params_from_json(j));
  throw std::invalid_argument("oracle: unknown model '" + model + "'");
}

/* ---------- Experiment configuration ---------- */

struct ExperimentConfig {
  std::string name = "experiment";
  std::string mode = "rates";  // rates | ergodic | solve
  std::size_t dim = 0;
  std::uint64_t master_seed = 1;
  int replications = 1;
  int n_steps = 1000;
  int workers = 1;
  double epsilon = 0.5;
  Point w1;
  nlohmann::json a_spec;
  nlohmann::json b_spec;
  nlohmann::json set_spec;
  nlohmann::json oracle_spec;
  nlohmann::json schedule_spec;
  std::optional<Point> known_solution;
  std::optional<StrongMonotonicity> strong_monotonicity;
  std::vector<long long> record_points;  // explicit iterate indices; empty -> log spaced
  int record_count = 30;
  std::optional<std::pair<long long, long long>> slope_window;

  static ExperimentConfig from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    c.name = j.contains("name") ? detail::string_field(j, "name", "config") : "experiment";
    c.mode = detail::string_field(j, "mode", "config");
    if (c.mode != "rates" && c.mode != "ergodic" && c.mode != "solve")
      throw std::invalid_argument("config: mode must be 'rates', 'ergodic', or 'solve'");
    c.dim = static_cast<std::size_t>(detail::number_field(j, "dim", "config"));
    if (c.dim == 0) throw std::invalid_argument("config: dim must be >= 1");
    if (j.contains("master_seed")) c.master_seed = j.at("master_seed").get<std::uint64_t>();
    c.replications = static_cast<int>(detail::number_or(j, "replications", 1));
    if (c.replications < 1) throw std::invalid_argument("config: replications must be >= 1");
    c.n_steps = static_cast<int>(detail::number_field(j, "n_steps", "config"));
    if (c.n_steps < 1) throw std::invalid_argument("config: n_steps must be >= 1");
    c.workers = static_cast<int>(detail::number_or(j, "workers", 1));
    if (c.workers < 1 || c.workers > 256)
      throw std::invalid_argument("config: workers must lie in [1, 256]");
    c.epsilon = detail::number_or(j, "epsilon", 0.5);
    if (!(c.epsilon > 0.0) || !(c.epsilon < 2.0))
      throw std::invalid_argument("config: epsilon must lie in (0, 2)");

    const auto& w1j = detail::require_field(j, "w1", "config");
    if (w1j.is_number()) {
      c.w1.assign(c.dim, w1j.get<double>());
    } else {
      c.w1 = detail::point_field(j, "w1", "config");
      if (c.w1.size() != c.dim) throw std::invalid_argument("config: w1 size must equal dim");
    }

    c.schedule_spec = detail::require_field(j, "schedule", "config");
    c.oracle_spec = detail::require_field(j, "oracle", "config");
    const bool finite_sum = c.oracle_spec.contains("model") &&
                            c.oracle_spec.at("model") == "finite_sum";
    if (j.contains("B"))
      c.b_spec = j.at("B");
    else if (!finite_sum)
      throw std::invalid_argument("config: missing field 'B'");
    if (c.mode == "ergodic") {
      c.set_spec = detail::require_field(j, "C", "config");
    } else {
      c.a_spec = detail::require_field(j, "A", "config");
    }
    if (j.contains("known_solution")) {
      Point s = detail::point_field(j, "known_solution", "config");
      if (s.size() != c.dim)
        throw std::invalid_argument("config: known_solution size must equal dim");
      c.known_solution = std::move(s);
    }
    if (j.contains("strong_monotonicity")) {
      const auto& smj = j.at("strong_monotonicity");
      c.strong_monotonicity =
          StrongMonotonicity{detail::number_or(smj, "nu", 0.0), detail::number_or(smj, "mu", 0.0)};
    }
    if (j.contains("record_points")) {
      const Point rp = detail::point_field(j, "record_points", "config");
      for (double v : rp) c.record_points.push_back(static_cast<long long>(v));
    }
    c.record_count = static_cast<int>(detail::number_or(j, "record_count", 30));
    if (c.record_count < 2) throw std::invalid_argument("config: record_count must be >= 2");
    if (j.contains("slope_window")) {
      const Point w = detail::point_field(j, "slope_window", "config");
      if (w.size() != 2 || !(w[0] >= 1) || !(w[1] > w[0]))
        throw std::invalid_argument("config: slope_window must be [lo, hi] with 1 <= lo < hi");
      c.slope_window = std::make_pair(static_cast<long long>(w[0]), static_cast<long long>(w[1]));
    }
    return c;
  }

  static ExperimentConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
    nlohmann::json j;
    in >> j;
    return from_json(j);
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["name"] = name;
    j["mode"] = mode;
    j["dim"] = dim;
    j["master_seed"] = master_seed;
    j["replications"] = replications;
    j["n_steps"] = n_steps;
    j["workers"] = workers;
    j["epsilon"] = epsilon;
    j["w1"] = w1;
    j["schedule"] = schedule_spec;
    j["oracle"] = oracle_spec;
    if (!b_spec.is_null()) j["B"] = b_spec;
    if (mode == "ergodic")
      j["C"] = set_spec;
    else
      j["A"] = a_spec;
    if (known_solution) j["known_solution"] = *known_solution;
    if (strong_monotonicity) {
      j["strong_monotonicity"] =
          nlohmann::json{{"nu", strong_monotonicity->nu}, {"mu", strong_monotonicity->mu}};
    }
    if (!record_points.empty()) j["record_points"] = record_points;
    j["record_count"] = record_count;
    if (slope_window)
      j["slope_window"] = nlohmann::json::array({slope_window->first, slope_window->second});
    return j;
  }
};

/* ---------- Instances assembled from a config ---------- */

struct RatesInstance {
  InclusionProblem problem;
  StochasticOracle oracle;
  Schedule schedule;
  Point w1;
};

inline RatesInstance make_rates_instance(const ExperimentConfig& cfg) {
  if (cfg.mode == "ergodic")
    throw std::invalid_argument("make_rates_instance: config has mode 'ergodic'");
  std::optional<CocoerciveOperator> base;
  if (!cfg.b_spec.is_null()) base = cocoercive_from_json(cfg.b_spec);
  StochasticOracle oracle = oracle_from_json(cfg.oracle_spec, std::move(base));
  CocoerciveOperator b = oracle.base();
  ResolventOperator a = resolvent_from_json(cfg.a_spec);
  InclusionProblem problem(std::move(a), std::move(b), cfg.known_solution,
                           cfg.strong_monotonicity);
  if (problem.dim() != 0 && problem.dim() != cfg.dim)
    throw std::invalid_argument("config: operator dimension disagrees with dim");
  return RatesInstance{std::move(problem), std::move(oracle), schedule_from_json(cfg.schedule_spec),
                       cfg.w1};
}

struct ErgodicInstance {
  VIProblem vi;
  StochasticOracle oracle;
  Schedule schedule;
  Point w1;
};

inline ErgodicInstance make_ergodic_instance(const ExperimentConfig& cfg) {
  if (cfg.mode != "ergodic")
    throw std::invalid_argument("make_ergodic_instance: config mode must be 'ergodic'");
  std::optional<CocoerciveOperator> base;
  if (!cfg.b_spec.is_null()) base = cocoercive_from_json(cfg.b_spec);
  StochasticOracle oracle = oracle_from_json(cfg.oracle_spec, std::move(base));
  CocoerciveOperator b = oracle.base();
  ConvexSet set = convex_set_from_json(cfg.set_spec);
  if (set.dim() != cfg.dim)
    throw std::invalid_argument("config: constraint set dimension disagrees with dim");
  VIProblem vi(std::move(b), std::move(set));
  return ErgodicInstance{std::move(vi), std::move(oracle),
                         schedule_from_json(cfg.schedule_spec), cfg.w1};
}

/* ---------- Report types ---------- */

struct GridRow {
  long long n = 0;
  double mean_sq_dist = 0.0;
  double se = 0.0;
  std::optional<double> bound;
};

struct MeritRow {
  long long n = 0;
  double merit_of_mean = 0.0;
  double bound = 0.0;
  double weight_sum = 0.0;
  double merit_se = 0.0;
};

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double half_width = 0.0;  // 1.96 standard errors of the slope
  long long window_lo = 0, window_hi = 0;
  int n_points = 0;
};

struct BoundCompare {
  int n_checked = 0;
  int n_ok = 0;
  double fraction = 0.0;
  bool ok = false;
};

/* Log-log least squares over grid rows with positive means inside the index
 * window. Returns nothing when fewer than five usable points fall in the
 * window.
 */
inline std::optional<RateFit> fit_rate(const std::vector<GridRow>& rows, long long window_lo,
                                       long long window_hi) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& r : rows)
    if (r.n >= window_lo && r.n <= window_hi && r.mean_sq_dist > 0.0)
      pts.emplace_back(std::log(static_cast<double>(r.n)), std::log(r.mean_sq_dist));
  if (pts.size() < 5) return std::nullopt;
  const double m = static_cast<double>(pts.size());
  double sx = 0.0, sy = 0.0;
  for (const auto& [x, y] : pts) {
    sx += x;
    sy += y;
  }
  const double mx = sx / m, my = sy / m;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : pts) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  if (!(sxx > 0.0)) return std::nullopt;
  RateFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ssr = 0.0;
  for (const auto& [x, y] : pts) {
    const double e = y - (f.intercept + f.slope * x);
    ssr += e * e;
  }
  const double dof = std::max(1.0, m - 2.0);
  f.half_width = 1.96 * std::sqrt(ssr / dof / sxx);
  f.window_lo = window_lo;
  f.window_hi = window_hi;
  f.n_points = static_cast<int>(pts.size());
  return f;
}

/* Pointwise empirical-vs-theory comparison: a row passes when its mean lies
 * under the bound plus five standard errors; the aggregate passes at >= 95%.
 */
inline BoundCompare compare_to_bound(const std::vector<GridRow>& rows) {
  BoundCompare c;
  for (const auto& r : rows) {
    if (!r.bound) continue;
    ++c.n_checked;
    if (r.mean_sq_dist <= *r.bound + 5.0 * r.se) ++c.n_ok;
  }
  if (c.n_checked > 0) c.fraction = static_cast<double>(c.n_ok) / c.n_checked;
  c.ok = c.n_checked > 0 && c.fraction >= 0.95 - 1e-12;
  return c;
}

inline std::optional<RateConstants> derive_rate_constants(const InclusionProblem& p,
                                                          const StochasticOracle& o,
                                                          const Schedule& s, double epsilon) {
  if (s.gamma_kind() != Schedule::GammaKind::power_law) return std::nullopt;
  if (!p.known_solution()) return std::nullopt;
  if (!(s.lambda_lower() > 0.0)) return std::nullopt;
  if (!p.strong_monotonicity()) return std::nullopt;
  RateConstants k;
  k.theta = s.theta();
  k.c1 = s.c1();
  k.lambda_lower = s.lambda_lower();
  k.nu = p.strong_monotonicity()->nu;
  k.mu = p.strong_monotonicity()->mu;
  k.epsilon = epsilon;
  k.sigma = o.effective_sigma();
  k.alpha_bar = o.params().alpha_bar;
  k.b_norm_at_solution = norm(o.mean(*p.known_solution()));
  if (!(k.c() > 0.0)) return std::nullopt;
  return k;
}

struct MonteCarloReport {
  std::string name;
  std::string mode;
  std::string version_tag = kVersionTag;
  nlohmann::json config_echo;
  int replications = 0;
  int n_steps = 0;
  std::vector<GridRow> rows;
  std::vector<MeritRow> merit_rows;
  std::optional<AssumptionReport> assumptions;
  std::optional<RateFit> fit;
  std::optional<BoundCompare> bound_compare;
  nlohmann::json constants;  // derived rate constants, when available

  std::string rate_csv() const {
    std::string out = "n,mean_sq_dist,stderr,bound\n";
    for (const auto& r : rows) {
      out += std::to_string(r.n) + ',' + format_double(r.mean_sq_dist) + ',' +
             format_double(r.se) + ',';
      if (r.bound) out += format_double(*r.bound);
      out += '\n';
    }
    return out;
  }

  std::string merit_csv() const {
    std::string out = "n,merit_of_mean,bound,weight_sum\n";
    for (const auto& r : merit_rows)
      out += std::to_string(r.n) + ',' + format_double(r.merit_of_mean) + ',' +
             format_double(r.bound) + ',' + format_double(r.weight_sum) + '\n';
    return out;
  }

  std::string bound_csv() const {
    std::string out = "n,bound\n";
    for (const auto& r : rows)
      if (r.bound) out += std::to_string(r.n) + ',' + format_double(*r.bound) + '\n';
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["name"] = name;
    j["mode"] = mode;
    j["version"] = version_tag;
    j["config"] = config_echo;
    j["replications"] = replications;
    j["n_steps"] = n_steps;
    j["constants"] = constants;
    if (assumptions)
      j["assumptions"] = assumptions->to_json();
    else
      j["assumptions"] = nullptr;
    if (fit) {
      j["fit"] = nlohmann::json{{"slope", fit->slope},
                                {"intercept", fit->intercept},
                                {"half_width", fit->half_width},
                                {"window", {fit->window_lo, fit->window_hi}},
                                {"points", fit->n_points}};
    } else {
      j["fit"] = nullptr;
    }
    if (bound_compare) {
      j["bound_compare"] = nlohmann::json{{"checked", bound_compare->n_checked},
                                          {"ok_count", bound_compare->n_ok},
                                          {"fraction", bound_compare->fraction},
                                          {"ok", bound_compare->ok}};
    } else {
      j["bound_compare"] = nullptr;
    }
    nlohmann::json rj = nlohmann::json::array();
    for (const auto& r : rows) {
      nlohmann::json e{{"n", r.n}, {"mean_sq_dist", r.mean_sq_dist}, {"stderr", r.se}};
      if (r.bound)
        e["bound"] = *r.bound;
      else
        e["bound"] = nullptr;
      rj.push_back(std::move(e));
    }
    j["rows"] = std::move(rj);
    nlohmann::json mj = nlohmann::json::array();
    for (const auto& r : merit_rows)
      mj.push_back(nlohmann::json{{"n", r.n},
                                  {"merit_of_mean", r.merit_of_mean},
                                  {"bound", r.bound},
                                  {"weight_sum", r.weight_sum},
                                  {"merit_stderr", r.merit_se}});
    j["merit_rows"] = std::move(mj);
    return j;
  }
};

/* ---------- Experiment runner ---------- */

namespace detail {

// Recording grid in iterate indices (1 = the start point). Rate studies add
// the successor of every point (consecutive-pair diagnostics) and the index
// where the bound curve anchors.
inline std::vector<long long> build_record_grid(const ExperimentConfig& cfg, long long last,
                                                bool add_pairs,
                                                std::optional<long long> anchor) {
  std::set<long long> g;
  if (!cfg.record_points.empty()) {
    for (long long p : cfg.record_points) g.insert(std::min(std::max<long long>(1, p), last));
  } else {
    const int m = cfg.record_count;
    const double logl = std::log(static_cast<double>(last));
    for (int i = 0; i < m; ++i) {
      const double v = std::exp(logl * i / (m - 1));
      g.insert(std::min<long long>(last, std::max<long long>(1, llround(v))));
    }
  }
  g.insert(1);
  g.insert(last);
  if (anchor && *anchor <= last) g.insert(*anchor);
  if (add_pairs) {
    std::set<long long> with_pairs = g;
    for (long long p : g)
      if (p < last) with_pairs.insert(p + 1);
    g.swap(with_pairs);
  }
  return std::vector<long long>(g.begin(), g.end());
}

template <class Fn>
inline void parallel_replications(int replications, int workers, Fn per_rep) {
  std::atomic<int> next{0};
  auto drain = [&] {
    for (;;) {
      const int r = next.fetch_add(1);
      if (r >= replications) break;
      per_rep(r);
    }
  };
  if (workers <= 1) {
    drain();
    return;
  }
  std::vector<std::thread> pool;
  const int k = std::min(workers, replications);
  pool.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) pool.emplace_back(drain);
  for (auto& t : pool) t.join();
}

}  // namespace detail

inline MonteCarloReport run_rates_experiment(const ExperimentConfig& cfg) {
  RatesInstance inst = make_rates_instance(cfg);
  if (!inst.problem.known_solution())
    throw std::invalid_argument("rates experiment: known_solution is required");
  const Point& wbar = *inst.problem.known_solution();
  const long long last = cfg.n_steps + 1;

  const auto constants =
      derive_rate_constants(inst.problem, inst.oracle, inst.schedule, cfg.epsilon);
  std::optional<long long> anchor;
  if (constants) anchor = constants->n0();
  const std::vector<long long> grid = detail::build_record_grid(cfg, last, true, anchor);

  // one slot per replication, reduced in replication order afterwards so the
  // report is bit-identical for any worker count
  std::vector<std::vector<double>> per_rep(static_cast<std::size_t>(cfg.replications));
  detail::parallel_replications(cfg.replications, cfg.workers, [&](int r) {
    RandomStream stream = derive_stream(cfg.master_seed, static_cast<std::uint64_t>(r));
    Point w = inst.w1;
    std::vector<double> vals(grid.size(), 0.0);
    std::size_t gi = 0;
    auto record = [&](long long idx) {
      while (gi < grid.size() && grid[gi] == idx) vals[gi++] = distance_sq(w, wbar);
    };
    record(1);
    for (int n = 1; n <= cfg.n_steps; ++n) {
      w = step(inst.problem, inst.oracle, w, inst.schedule.gamma(n), inst.schedule.lambda(n),
               stream)
              .w_next;
      record(n + 1);
    }
    per_rep[static_cast<std::size_t>(r)] = std::move(vals);
  });

  std::vector<double> sum(grid.size(), 0.0), sumsq(grid.size(), 0.0);
  for (const auto& vals : per_rep)
    for (std::size_t i = 0; i < grid.size(); ++i) {
      sum[i] += vals[i];
      sumsq[i] += vals[i] * vals[i];
    }

  MonteCarloReport rep;
  rep.name = cfg.name;
  rep.mode = "rates";
  rep.config_echo = cfg.to_json();
  rep.config_echo.erase("workers");  // execution detail, not part of the experiment identity
  rep.replications = cfg.replications;
  rep.n_steps = cfg.n_steps;

  const double R = static_cast<double>(cfg.replications);
  rep.rows.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    GridRow row;
    row.n = grid[i];
    row.mean_sq_dist = sum[i] / R;
    if (cfg.replications > 1) {
      const double var =
          std::max(0.0, (sumsq[i] - sum[i] * sum[i] / R) / (R - 1.0));
      row.se = std::sqrt(var / R);
    }
    rep.rows.push_back(row);
  }

  rep.assumptions =
      check_assumptions(inst.problem, inst.oracle, inst.schedule, cfg.epsilon, cfg.n_steps);

  if (constants) {
    double s_n0 = -1.0;
    for (const auto& row : rep.rows)
      if (row.n == constants->n0()) s_n0 = row.mean_sq_dist;
    if (s_n0 >= 0.0) {
      BoundCurve curve{*constants, s_n0};
      for (auto& row : rep.rows)
        if (row.n >= curve.first_valid_index()) row.bound = curve.eval_at(row.n);
      rep.constants = nlohmann::json{{"theta", constants->theta},
                                     {"c1", constants->c1},
                                     {"lambda_lower", constants->lambda_lower},
                                     {"nu", constants->nu},
                                     {"mu", constants->mu},
                                     {"epsilon", constants->epsilon},
                                     {"sigma", constants->sigma},
                                     {"alpha_bar", constants->alpha_bar},
                                     {"b_norm_at_solution", constants->b_norm_at_solution},
                                     {"t", constants->t()},
                                     {"c", constants->c()},
                                     {"tau", constants->tau()},
                                     {"n0", constants->n0()},
                                     {"s_n0_empirical", s_n0},
                                     {"first_valid_index", curve.first_valid_index()}};
      rep.bound_compare = compare_to_bound(rep.rows);
    }
  }

  long long wlo = std::max<long long>(10, last / 10), whi = last;
  if (cfg.slope_window) {
    wlo = cfg.slope_window->first;
    whi = cfg.slope_window->second;
  }
  rep.fit = fit_rate(rep.rows, wlo, whi);
  return rep;
}

inline MonteCarloReport run_ergodic_experiment(const ExperimentConfig& cfg) {
  ErgodicInstance inst = make_ergodic_instance(cfg);
  const long long last = cfg.n_steps;  // averages exist after each of the n_steps steps
  const std::vector<long long> grid = detail::build_record_grid(cfg, last, false, std::nullopt);
  const std::size_t d = cfg.dim;

  struct RepPayload {
    std::vector<Point> avg_at_grid;
    std::vector<double> b_sq;  // ||B w_t||^2 at each pre-step iterate
  };
  std::vector<RepPayload> per_rep(static_cast<std::size_t>(cfg.replications));

  detail::parallel_replications(cfg.replications, cfg.workers, [&](int r) {
    RandomStream stream = derive_stream(cfg.master_seed, static_cast<std::uint64_t>(r));
    RepPayload out;
    out.avg_at_grid.assign(grid.size(), Point(d, 0.0));
    out.b_sq.assign(static_cast<std::size_t>(cfg.n_steps), 0.0);
    Point w = inst.w1;
    Point accum(d, 0.0);
    double wsum = 0.0;
    std::size_t gi = 0;
    for (int n = 1; n <= cfg.n_steps; ++n) {
      const double gamma = inst.schedule.gamma(n), lambda = inst.schedule.lambda(n);
      if (!(lambda > 0.0))
        throw std::invalid_argument("ergodic experiment: lambda must be > 0 throughout");
      for (std::size_t k = 0; k < d; ++k) accum[k] += lambda * gamma * w[k];
      wsum += lambda * gamma;
      out.b_sq[static_cast<std::size_t>(n - 1)] = norm_sq(inst.vi.B.apply(w));
      const Point sample = inst.oracle.sample(w, stream);
      const Point y = inst.vi.C.project(add_scaled(w, -gamma, sample));
      w = combine(1.0 - lambda, w, lambda, y);
      while (gi < grid.size() && grid[gi] == n) {
        out.avg_at_grid[gi] = scaled(accum, 1.0 / wsum);
        ++gi;
      }
    }
    per_rep[static_cast<std::size_t>(r)] = std::move(out);
  });

  const double R = static_cast<double>(cfg.replications);
  std::vector<Point> mean_avg(grid.size(), Point(d, 0.0));
  std::vector<Point> sumsq(grid.size(), Point(d, 0.0));
  std::vector<double> mean_b_sq(static_cast<std::size_t>(cfg.n_steps), 0.0);
  for (const auto& p : per_rep) {
    for (std::size_t i = 0; i < grid.size(); ++i)
      for (std::size_t k = 0; k < d; ++k) {
        mean_avg[i][k] += p.avg_at_grid[i][k];
        sumsq[i][k] += p.avg_at_grid[i][k] * p.avg_at_grid[i][k];
      }
    for (std::size_t t = 0; t < mean_b_sq.size(); ++t) mean_b_sq[t] += p.b_sq[t];
  }
  for (auto& v : mean_avg)
    for (auto& x : v) x /= R;
  for (auto& x : mean_b_sq) x /= R;

  std::vector<double> weight_sums(static_cast<std::size_t>(cfg.n_steps), 0.0);
  {
    double acc = 0.0;
    for (int n = 1; n <= cfg.n_steps; ++n) {
      acc += inst.schedule.lambda(n) * inst.schedule.gamma(n);
      weight_sums[static_cast<std::size_t>(n - 1)] = acc;
    }
  }
  const std::vector<double> theta1 =
      ergodic_noise_partial_sums(inst.schedule, inst.oracle.params(), mean_b_sq);
  const double theta0 = inst.vi.C.max_half_sq_dist(inst.w1);
  const double lip = merit_lipschitz(inst.vi);

  MonteCarloReport rep;
  rep.name = cfg.name;
  rep.mode = "ergodic";
  rep.config_echo = cfg.to_json();
  rep.config_echo.erase("workers");
  rep.replications = cfg.replications;
  rep.n_steps = cfg.n_steps;
  rep.constants = nlohmann::json{{"theta0", theta0}, {"merit_lipschitz", lip}};

  rep.merit_rows.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    MeritRow row;
    row.n = grid[i];
    const std::size_t t = static_cast<std::size_t>(grid[i] - 1);
    row.weight_sum = weight_sums[t];
    row.bound = ergodic_bound(theta0, theta1[t], weight_sums[t]);
    row.merit_of_mean = merit(inst.vi, inst.vi.C.project(mean_avg[i]));
    double se_sq = 0.0;
    if (cfg.replications > 1)
      for (std::size_t k = 0; k < d; ++k) {
        const double var = std::max(
            0.0, (sumsq[i][k] - mean_avg[i][k] * mean_avg[i][k] * R) / (R - 1.0));
        se_sq += var / R;
      }
    row.merit_se = lip * std::sqrt(se_sq);
    rep.merit_rows.push_back(row);
  }
  return rep;
}

inline MonteCarloReport run_experiment(const ExperimentConfig& cfg) {
  if (cfg.mode == "rates") return run_rates_experiment(cfg);
  if (cfg.mode == "ergodic") return run_ergodic_experiment(cfg);
  throw std::invalid_argument("run_experiment: mode must be 'rates' or 'ergodic'");
}

}  // namespace sfb
