#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>

#include <CLI11.hpp>

#include <sfb/sfb.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::pair<long long, long long> parse_window(const std::string& s) {
  const auto pos = s.find(':');
  if (pos == std::string::npos || pos == 0 || pos + 1 >= s.size())
    throw std::invalid_argument("--window expects lo:hi");
  return {std::stoll(s.substr(0, pos)), std::stoll(s.substr(pos + 1))};
}

struct GridSpec {
  long long lo = 0, hi = 0;
  int count = 0;
};

GridSpec parse_grid(const std::string& s) {
  const auto p1 = s.find(':');
  const auto p2 = s.find(':', p1 == std::string::npos ? p1 : p1 + 1);
  if (p1 == std::string::npos || p2 == std::string::npos)
    throw std::invalid_argument("--grid expects lo:hi:count");
  GridSpec g;
  g.lo = std::stoll(s.substr(0, p1));
  g.hi = std::stoll(s.substr(p1 + 1, p2 - p1 - 1));
  g.count = std::stoi(s.substr(p2 + 1));
  if (g.lo < 1 || g.hi < g.lo || g.count < 1)
    throw std::invalid_argument("--grid expects 1 <= lo <= hi and count >= 1");
  return g;
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << content;
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j;
  in >> j;
  return j;
}

sfb::RateConstants constants_from_json(const json& j) {
  sfb::RateConstants k;
  k.theta = sfb::detail::number_field(j, "theta", "constants");
  k.c1 = sfb::detail::number_field(j, "c1", "constants");
  k.lambda_lower = sfb::detail::number_or(j, "lambda_lower", 1.0);
  k.nu = sfb::detail::number_or(j, "nu", 0.0);
  k.mu = sfb::detail::number_or(j, "mu", 0.0);
  k.epsilon = sfb::detail::number_or(j, "epsilon", 0.5);
  k.sigma = sfb::detail::number_or(j, "sigma", 0.0);
  k.alpha_bar = sfb::detail::number_or(j, "alpha_bar", 0.0);
  k.b_norm_at_solution = sfb::detail::number_or(j, "b_norm_at_solution", 0.0);
  if (j.contains("c_uses_double_nu")) k.c_uses_double_nu = j.at("c_uses_double_nu").get<bool>();
  if (j.contains("tau_uses_sq_norm")) k.tau_uses_sq_norm = j.at("tau_uses_sq_norm").get<bool>();
  k.validate();
  return k;
}

int cmd_solve(const std::string& config_path, const std::string& out_dir, int steps_override) {
  auto cfg = sfb::ExperimentConfig::load(config_path);
  if (cfg.mode == "ergodic")
    throw std::invalid_argument("solve: config mode must be 'solve' or 'rates'");
  auto inst = sfb::make_rates_instance(cfg);
  const int n = steps_override > 0 ? steps_override : cfg.n_steps;
  auto traj = sfb::run(inst.problem, inst.oracle, inst.schedule, inst.w1, n,
                       sfb::SeedSpec{cfg.master_seed, 0});
  const sfb::Point& w = traj.iterate(traj.steps() + 1);
  const double gamma_r = std::isfinite(inst.problem.beta()) ? inst.problem.beta() : 1.0;
  const double resid = sfb::fixed_point_residual(inst.problem, w, gamma_r);
  json out{{"name", cfg.name},         {"version", sfb::kVersionTag},
           {"steps", n},               {"residual_gamma", gamma_r},
           {"final_residual", resid},  {"final_iterate", w}};
  if (traj.sq_dist()) out["final_sq_dist"] = traj.sq_dist()->back();
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_file(fs::path(out_dir) / "trajectory.csv", traj.to_csv());
    write_file(fs::path(out_dir) / "solve.json", out.dump(2) + "\n");
  }
  std::cout << "solve: " << n << " steps, fixed-point residual " << sfb::format_double(resid);
  if (traj.sq_dist())
    std::cout << ", squared distance to solution " << sfb::format_double(traj.sq_dist()->back());
  std::cout << "\n";
  return 0;
}

int cmd_rates(const std::string& config_path, const std::string& out_dir, int workers,
              const std::string& window) {
  auto cfg = sfb::ExperimentConfig::load(config_path);
  if (cfg.mode != "rates") throw std::invalid_argument("rates: config mode must be 'rates'");
  if (workers > 0) cfg.workers = workers;
  if (!window.empty()) cfg.slope_window = parse_window(window);
  auto rep = sfb::run_rates_experiment(cfg);
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_file(fs::path(out_dir) / "rate.csv", rep.rate_csv());
    write_file(fs::path(out_dir) / "bound.csv", rep.bound_csv());
    write_file(fs::path(out_dir) / "report.json", rep.to_json().dump(2) + "\n");
  }
  std::cout << "rates: " << cfg.name << ", " << cfg.replications << " replications x "
            << cfg.n_steps << " steps, " << rep.rows.size() << " grid points\n";
  if (rep.fit)
    std::cout << "slope " << sfb::format_double(rep.fit->slope) << " +/- "
              << sfb::format_double(rep.fit->half_width) << " over [" << rep.fit->window_lo
              << ", " << rep.fit->window_hi << "]\n";
  else
    std::cout << "slope: not enough usable grid points in the window\n";
  if (rep.bound_compare)
    std::cout << "bound: " << rep.bound_compare->n_ok << "/" << rep.bound_compare->n_checked
              << " grid points under the curve ("
              << (rep.bound_compare->ok ? "ok" : "violated") << ")\n";
  else
    std::cout << "bound: unavailable (needs power-law schedule, known solution, and moduli)\n";
  if (rep.assumptions)
    std::cout << "assumptions: " << (rep.assumptions->all_ok() ? "ok" : "violated") << "\n";
  return 0;
}

int cmd_merit(const std::string& config_path, const std::string& out_dir, int workers) {
  auto cfg = sfb::ExperimentConfig::load(config_path);
  if (cfg.mode != "ergodic") throw std::invalid_argument("merit: config mode must be 'ergodic'");
  if (workers > 0) cfg.workers = workers;
  auto rep = sfb::run_ergodic_experiment(cfg);
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_file(fs::path(out_dir) / "merit.csv", rep.merit_csv());
    write_file(fs::path(out_dir) / "report.json", rep.to_json().dump(2) + "\n");
  }
  std::cout << "merit: " << cfg.name << ", " << cfg.replications << " replications x "
            << cfg.n_steps << " steps\n";
  if (!rep.merit_rows.empty()) {
    const auto& r = rep.merit_rows.back();
    std::cout << "at n = " << r.n << ": merit of averaged iterate "
              << sfb::format_double(r.merit_of_mean) << ", bound " << sfb::format_double(r.bound)
              << "\n";
  }
  return 0;
}

int cmd_bound(const std::string& constants_path, const std::string& grid_str, double s_n0,
              bool s_n0_set, const std::string& out_dir) {
  const json j = load_json(constants_path);
  const sfb::RateConstants k = constants_from_json(j);
  const double anchor = s_n0_set ? s_n0 : sfb::detail::number_or(j, "s_n0", 0.0);
  if (!(anchor >= 0.0)) throw std::invalid_argument("bound: s_n0 must be >= 0");
  sfb::BoundCurve curve{k, anchor};
  const GridSpec g = parse_grid(grid_str);
  const long long lo = std::max(g.lo, curve.first_valid_index());
  if (g.hi < lo) throw std::invalid_argument("bound: grid ends before the first valid index");
  std::set<long long> pts;
  for (int i = 0; i < g.count; ++i) {
    const double f = g.count == 1 ? 0.0 : static_cast<double>(i) / (g.count - 1);
    pts.insert(llround(lo * std::pow(static_cast<double>(g.hi) / lo, f)));
  }
  std::string csv = "n,bound\n";
  for (long long n : pts)
    csv += std::to_string(n) + ',' + sfb::format_double(curve.eval_at(n)) + '\n';
  std::cout << csv;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_file(fs::path(out_dir) / "bound.csv", csv);
  }
  return 0;
}

int cmd_check(const std::string& config_path, int horizon, double epsilon) {
  auto cfg = sfb::ExperimentConfig::load(config_path);
  if (cfg.mode == "ergodic")
    throw std::invalid_argument("check: config mode must be 'solve' or 'rates'");
  if (epsilon > 0.0) cfg.epsilon = epsilon;
  auto inst = sfb::make_rates_instance(cfg);
  const int h = horizon > 0 ? horizon : cfg.n_steps;
  const auto rep =
      sfb::check_assumptions(inst.problem, inst.oracle, inst.schedule, cfg.epsilon, h);
  std::cout << rep.to_json().dump(2) << "\n";
  return rep.all_ok() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "stochastic forward-backward splitting: single runs, Monte Carlo rate and merit-gap "
      "studies, closed-form bound curves, and step-size/summability checks"};
  app.require_subcommand(1);

  std::string config, out_dir, window, grid_str, constants_path;
  int workers = 0, steps = 0, horizon = 0;
  double epsilon = 0.0, s_n0 = 0.0;

  auto* solve = app.add_subcommand("solve", "run one trajectory and write it out");
  solve->add_option("--config", config, "experiment config (json)")->required();
  solve->add_option("--out", out_dir, "output directory");
  solve->add_option("--steps", steps, "override the configured step count");

  auto* rates = app.add_subcommand("rates", "Monte Carlo mean-squared-distance study");
  rates->add_option("--config", config, "experiment config (json)")->required();
  rates->add_option("--out", out_dir, "output directory");
  rates->add_option("--workers", workers, "worker threads (report is identical for any count)");
  rates->add_option("--window", window, "slope-fit window as lo:hi iterate indices");

  auto* merit = app.add_subcommand("merit", "Monte Carlo ergodic merit-gap study");
  merit->add_option("--config", config, "experiment config (json)")->required();
  merit->add_option("--out", out_dir, "output directory");
  merit->add_option("--workers", workers, "worker threads (report is identical for any count)");

  auto* bound = app.add_subcommand("bound", "evaluate the closed-form bound curve");
  bound->add_option("--constants", constants_path, "rate constants (json)")->required();
  bound->add_option("--grid", grid_str, "evaluation grid as lo:hi:count")->required();
  auto* s_n0_opt = bound->add_option("--s-n0", s_n0, "anchor value at index n0");
  bound->add_option("--out", out_dir, "output directory");

  auto* check = app.add_subcommand("check", "verify step sizes and summability conditions");
  check->add_option("--config", config, "experiment config (json)")->required();
  check->add_option("--horizon", horizon, "indices to check (default: configured n_steps)");
  check->add_option("--epsilon", epsilon, "override the configured slack parameter");

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) return cmd_solve(config, out_dir, steps);
    if (rates->parsed()) return cmd_rates(config, out_dir, workers, window);
    if (merit->parsed()) return cmd_merit(config, out_dir, workers);
    if (bound->parsed())
      return cmd_bound(constants_path, grid_str, s_n0, s_n0_opt->count() > 0, out_dir);
    if (check->parsed()) return cmd_check(config, horizon, epsilon);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
