#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <sfb/sfb.hpp>

using namespace sfb;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

nlohmann::json tiny_rates_config() {
  return nlohmann::json{
      {"name", "tiny"},
      {"mode", "rates"},
      {"dim", 2},
      {"master_seed", 11},
      {"replications", 8},
      {"n_steps", 60},
      {"workers", 1},
      {"epsilon", 0.5},
      {"w1", {1.0, -1.0}},
      {"A", {{"kind", "zero"}}},
      {"B",
       {{"kind", "gradient_quadratic"},
        {"q", {{1.0, 0.0}, {0.0, 1.0}}},
        {"center", {0.0, 0.0}}}},
      {"oracle", {{"model", "additive_gaussian"}, {"sigma", 0.5}}},
      {"schedule", {{"kind", "power_law"}, {"c1", 1.0}, {"theta", 1.0}, {"lambda", 1.0}}},
      {"known_solution", {0.0, 0.0}},
      {"strong_monotonicity", {{"nu", 0.0}, {"mu", 1.0}}},
      {"record_count", 10}};
}

nlohmann::json tiny_ergodic_config() {
  return nlohmann::json{
      {"name", "tiny-ergodic"},
      {"mode", "ergodic"},
      {"dim", 2},
      {"master_seed", 17},
      {"replications", 1},
      {"n_steps", 50},
      {"workers", 1},
      {"epsilon", 0.5},
      {"w1", {0.5, 0.0}},
      {"C", {{"kind", "ball"}, {"center", {0.0, 0.0}}, {"radius", 1.0}}},
      {"B",
       {{"kind", "affine"},
        {"matrix", {{1.0, -2.0}, {2.0, 1.0}}},
        {"offset", {0.0, 0.0}}}},
      {"oracle", {{"model", "additive_gaussian"}, {"sigma", 0.5}}},
      {"schedule", {{"kind", "power_law"}, {"c1", 0.3}, {"theta", 0.75}, {"lambda", 1.0}}},
      {"record_points", {1, 5, 20, 50}}};
}

}  // namespace

TEST_CASE("config parses and round-trips through json") {
  const nlohmann::json j = tiny_rates_config();
  const ExperimentConfig c = ExperimentConfig::from_json(j);
  CHECK(c.name == "tiny");
  CHECK(c.mode == "rates");
  CHECK(c.dim == 2);
  CHECK(c.master_seed == 11);
  CHECK(c.replications == 8);
  CHECK(c.n_steps == 60);
  CHECK(c.epsilon == 0.5);
  CHECK(c.w1 == Point{1.0, -1.0});
  REQUIRE(c.known_solution.has_value());
  CHECK(c.known_solution->size() == 2);
  REQUIRE(c.strong_monotonicity.has_value());
  CHECK(c.strong_monotonicity->mu == 1.0);
  CHECK(c.record_count == 10);
  CHECK_FALSE(c.slope_window.has_value());

  // to_json -> from_json -> to_json is a fixed point
  const nlohmann::json echoed = c.to_json();
  const ExperimentConfig c2 = ExperimentConfig::from_json(echoed);
  CHECK(c2.to_json().dump() == echoed.dump());
}

TEST_CASE("scalar w1 fills the whole vector") {
  nlohmann::json j = tiny_rates_config();
  j["dim"] = 4;
  j["w1"] = 0.25;
  j["B"]["q"] = {{1.0, 0, 0, 0}, {0, 1.0, 0, 0}, {0, 0, 1.0, 0}, {0, 0, 0, 1.0}};
  j["B"]["center"] = {0.0, 0.0, 0.0, 0.0};
  j["known_solution"] = {0.0, 0.0, 0.0, 0.0};
  const ExperimentConfig c = ExperimentConfig::from_json(j);
  CHECK(c.w1 == Point(4, 0.25));
}

TEST_CASE("config validation errors carry exact messages") {
  auto expect_message = [](nlohmann::json j, const std::string& msg) {
    try {
      (void)ExperimentConfig::from_json(j);
      FAIL("expected invalid_argument for: " << msg);
    } catch (const std::invalid_argument& e) {
      CHECK(std::string(e.what()) == msg);
    }
  };

  {
    nlohmann::json j = tiny_rates_config();
    j["mode"] = "walk";
    expect_message(j, "config: mode must be 'rates', 'ergodic', or 'solve'");
  }
  {
    nlohmann::json j = tiny_rates_config();
    j["w1"] = {1.0, 2.0, 3.0};
    expect_message(j, "config: w1 size must equal dim");
  }
  {
    nlohmann::json j = tiny_rates_config();
    j.erase("B");
    expect_message(j, "config: missing field 'B'");
  }
  {
    nlohmann::json j = tiny_ergodic_config();
    j.erase("C");
    expect_message(j, "config: missing field 'C'");
  }
  {
    nlohmann::json j = tiny_rates_config();
    j.erase("schedule");
    expect_message(j, "config: missing field 'schedule'");
  }
  {
    nlohmann::json j = tiny_rates_config();
    j.erase("oracle");
    expect_message(j, "config: missing field 'oracle'");
  }
}

TEST_CASE("finite-sum oracle configs need no separate B") {
  nlohmann::json j = tiny_rates_config();
  j.erase("B");
  j["oracle"] = {
      {"model", "finite_sum"},
      {"components",
       {{{"kind", "gradient_quadratic"},
         {"q", {{1.0, 0.0}, {0.0, 1.0}}},
         {"center", {0.5, 0.0}}},
        {{"kind", "gradient_quadratic"},
         {"q", {{1.0, 0.0}, {0.0, 1.0}}},
         {"center", {-0.5, 0.0}}}}},
      {"sigma", 1.0}};
  const ExperimentConfig c = ExperimentConfig::from_json(j);
  const RatesInstance inst = make_rates_instance(c);
  CHECK(inst.oracle.model() == StochasticOracle::NoiseModel::finite_sum_sampling);
  CHECK(inst.problem.dim() == 2);
}

TEST_CASE("shipped configs load") {
  const std::string root = SFB_SOURCE_DIR "/configs/";
  for (const char* name : {"smoke", "exp1_strong_theta1", "exp2_theta07", "ergodic_rotation",
                           "lasso_noiseless", "determinism"}) {
    INFO("config: " << name);
    const ExperimentConfig c = ExperimentConfig::load(root + name + ".json");
    CHECK(!c.name.empty());
    CHECK(c.dim >= 1);
    CHECK(c.w1.size() == c.dim);
    if (c.mode == "ergodic") {
      const ErgodicInstance inst = make_ergodic_instance(c);
      CHECK(inst.vi.C.dim() == c.dim);
    } else {
      const RatesInstance inst = make_rates_instance(c);
      CHECK(inst.oracle.dim() == c.dim);
    }
  }
  CHECK_THROWS_AS(ExperimentConfig::load(root + "no_such_file.json"), std::runtime_error);
}

TEST_CASE("instance builders enforce the mode") {
  const ExperimentConfig rates = ExperimentConfig::from_json(tiny_rates_config());
  const ExperimentConfig erg = ExperimentConfig::from_json(tiny_ergodic_config());
  CHECK_THROWS_AS(make_rates_instance(erg), std::invalid_argument);
  CHECK_THROWS_AS(make_ergodic_instance(rates), std::invalid_argument);
}

TEST_CASE("json builders reject unknown kinds") {
  CHECK_THROWS_AS(resolvent_from_json({{"kind", "mystery"}, {"dim", 1}}), std::invalid_argument);
  CHECK_THROWS_AS(cocoercive_from_json({{"kind", "mystery"}}), std::invalid_argument);
  CHECK_THROWS_AS(schedule_from_json({{"kind", "mystery"}}), std::invalid_argument);
  CHECK_THROWS_AS(convex_set_from_json({{"kind", "simplex"}, {"dim", 2}}), std::invalid_argument);
  try {
    (void)oracle_from_json({{"model", "additive_gaussian"}, {"sigma", 1.0}}, std::nullopt);
    FAIL("expected a missing-B error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()) == "oracle: model 'additive_gaussian' requires a B spec");
  }
}

TEST_CASE("power-law fit recovers an exact log-log line") {
  std::vector<GridRow> rows;
  for (long long n : {10, 20, 40, 80, 160, 320, 640}) {
    GridRow r;
    r.n = n;
    r.mean_sq_dist = 7.0 * std::pow(static_cast<double>(n), -0.7);
    rows.push_back(r);
  }
  const auto fit = fit_rate(rows, 10, 640);
  REQUIRE(fit.has_value());
  CHECK_THAT(fit->slope, WithinAbs(-0.7, 1e-12));
  CHECK_THAT(fit->intercept, WithinAbs(std::log(7.0), 1e-12));
  CHECK_THAT(fit->half_width, WithinAbs(0.0, 1e-10));
  CHECK(fit->n_points == 7);
  CHECK(fit->window_lo == 10);
  CHECK(fit->window_hi == 640);

  // flat data fits slope zero
  for (auto& r : rows) r.mean_sq_dist = 3.0;
  const auto flat = fit_rate(rows, 10, 640);
  REQUIRE(flat.has_value());
  CHECK_THAT(flat->slope, WithinAbs(0.0, 1e-12));

  // fewer than five usable points -> no fit
  CHECK_FALSE(fit_rate(rows, 100, 640).has_value());
  std::vector<GridRow> zeros(6);
  for (std::size_t i = 0; i < zeros.size(); ++i) zeros[i].n = static_cast<long long>(i + 10);
  CHECK_FALSE(fit_rate(zeros, 1, 1000).has_value());
}

TEST_CASE("bound comparison counts only rows that carry a bound") {
  std::vector<GridRow> rows(4);
  rows[0].n = 1;
  rows[0].mean_sq_dist = 9.0;  // no bound -> skipped
  rows[1].n = 5;
  rows[1].mean_sq_dist = 1.0;
  rows[1].bound = 2.0;  // pass
  rows[2].n = 6;
  rows[2].mean_sq_dist = 3.0;
  rows[2].se = 0.5;
  rows[2].bound = 1.0;  // pass through the 5 se allowance: 1 + 2.5 >= 3
  rows[3].n = 7;
  rows[3].mean_sq_dist = 3.0;
  rows[3].bound = 1.0;  // fail
  const BoundCompare c = compare_to_bound(rows);
  CHECK(c.n_checked == 3);
  CHECK(c.n_ok == 2);
  CHECK_THAT(c.fraction, WithinRel(2.0 / 3.0, 1e-15));
  CHECK_FALSE(c.ok);

  const BoundCompare empty = compare_to_bound({});
  CHECK(empty.n_checked == 0);
  CHECK_FALSE(empty.ok);
}

TEST_CASE("rate constants derive from a fully specified strongly monotone run") {
  const ExperimentConfig cfg = ExperimentConfig::from_json(tiny_rates_config());
  const RatesInstance inst = make_rates_instance(cfg);
  const auto k = derive_rate_constants(inst.problem, inst.oracle, inst.schedule, cfg.epsilon);
  REQUIRE(k.has_value());
  CHECK(k->theta == 1.0);
  CHECK(k->c1 == 1.0);
  CHECK(k->lambda_lower == 1.0);
  CHECK(k->mu == 1.0);
  CHECK(k->sigma == 0.5);
  CHECK(k->b_norm_at_solution == 0.0);
  CHECK_THAT(k->c(), WithinRel(0.5, 1e-15));  // c1 * lambda * mu * eps/2 at nu = 0
  CHECK(k->n0() == 2);

  // each missing ingredient suppresses the constants
  InclusionProblem no_sol(inst.problem.A(), inst.problem.B());
  CHECK_FALSE(derive_rate_constants(no_sol, inst.oracle, inst.schedule, 0.5).has_value());
  // moduli are taken from the operators when not supplied, and a generic
  // custom field carries none
  CocoerciveOperator flat = CocoerciveOperator::custom([](const Point& w) { return w; }, 1.0, 2);
  StochasticOracle flat_oracle = StochasticOracle::exact(flat);
  InclusionProblem no_sm(ResolventOperator::zero(), flat, Point{0.0, 0.0});
  CHECK_FALSE(derive_rate_constants(no_sm, flat_oracle, inst.schedule, 0.5).has_value());
  CHECK_FALSE(derive_rate_constants(inst.problem, inst.oracle, Schedule::constant(0.5), 0.5)
                  .has_value());
  CHECK_FALSE(derive_rate_constants(inst.problem, inst.oracle,
                                    Schedule::power_law(1.0, 1.0, 0.0), 0.5)
                  .has_value());
}

TEST_CASE("rates experiment report has the advertised shape") {
  const ExperimentConfig cfg = ExperimentConfig::from_json(tiny_rates_config());
  const MonteCarloReport rep = run_rates_experiment(cfg);

  CHECK(rep.name == "tiny");
  CHECK(rep.mode == "rates");
  CHECK(rep.version_tag == kVersionTag);
  CHECK(rep.replications == 8);
  CHECK(rep.n_steps == 60);
  CHECK_FALSE(rep.config_echo.contains("workers"));
  REQUIRE(rep.assumptions.has_value());
  CHECK(rep.assumptions->all_ok());

  REQUIRE(!rep.rows.empty());
  CHECK(rep.rows.front().n == 1);
  CHECK(rep.rows.back().n == 61);  // start point plus one slot per step
  CHECK_THAT(rep.rows.front().mean_sq_dist, WithinRel(2.0, 1e-15));  // deterministic start

  // the recorded indices are exactly the log-spaced points plus the start,
  // the final index, the bound anchor, and every point's successor
  long long n0 = rep.constants.at("n0").get<long long>();
  CHECK(n0 == 2);
  std::set<long long> expect;
  for (int i = 0; i < 10; ++i) {
    const double v = std::exp(std::log(61.0) * i / 9.0);
    expect.insert(std::min<long long>(61, std::max<long long>(1, llround(v))));
  }
  expect.insert(1);
  expect.insert(61);
  expect.insert(n0);
  for (long long g : std::vector<long long>(expect.begin(), expect.end()))
    if (g < 61) expect.insert(g + 1);
  REQUIRE(rep.rows.size() == expect.size());
  {
    std::size_t idx = 0;
    for (long long g : expect) CHECK(rep.rows[idx++].n == g);
  }

  // bound column starts exactly at the first valid index
  const long long first_valid = rep.constants.at("first_valid_index").get<long long>();
  CHECK(first_valid == 2 * n0 + 1);
  for (const auto& row : rep.rows) {
    INFO("row n = " << row.n);
    CHECK(row.bound.has_value() == (row.n >= first_valid));
  }
  REQUIRE(rep.bound_compare.has_value());
  CHECK(rep.bound_compare->n_checked > 0);

  // csv shapes
  const std::string csv = rep.rate_csv();
  CHECK(csv.substr(0, csv.find('\n')) == "n,mean_sq_dist,stderr,bound");
  {
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    std::size_t data_lines = 0;
    while (std::getline(in, line)) {
      ++data_lines;
      CHECK(std::count(line.begin(), line.end(), ',') == 3);
    }
    CHECK(data_lines == rep.rows.size());
  }
  const std::string bcsv = rep.bound_csv();
  CHECK(bcsv.substr(0, bcsv.find('\n')) == "n,bound");

  // json report round-trips numerically through the csv formatter's precision
  const nlohmann::json jr = rep.to_json();
  CHECK(jr.at("version") == kVersionTag);
  CHECK(jr.at("rows").size() == rep.rows.size());
  CHECK_FALSE(jr.at("config").contains("workers"));
}

TEST_CASE("worker count never changes the rates report") {
  nlohmann::json j = tiny_rates_config();
  const MonteCarloReport serial = run_rates_experiment(ExperimentConfig::from_json(j));
  j["workers"] = 2;
  const MonteCarloReport pooled = run_rates_experiment(ExperimentConfig::from_json(j));
  CHECK(serial.rate_csv() == pooled.rate_csv());
  CHECK(serial.to_json().dump() == pooled.to_json().dump());
}

TEST_CASE("ergodic experiment matches a direct single run") {
  const ExperimentConfig cfg = ExperimentConfig::from_json(tiny_ergodic_config());
  const MonteCarloReport rep = run_ergodic_experiment(cfg);
  CHECK(rep.mode == "ergodic");
  REQUIRE(rep.merit_rows.size() == 4);  // the explicit record points

  const ErgodicInstance inst = make_ergodic_instance(cfg);
  const ErgodicRun direct = run_ergodic(inst.vi, inst.oracle, inst.schedule, inst.w1,
                                        cfg.n_steps, SeedSpec{cfg.master_seed, 0});

  const double theta0 = inst.vi.C.max_half_sq_dist(inst.w1);
  CHECK_THAT(rep.constants.at("theta0").get<double>(), WithinRel(theta0, 1e-15));
  CHECK_THAT(rep.constants.at("merit_lipschitz").get<double>(),
             WithinRel(merit_lipschitz(inst.vi), 1e-15));

  std::vector<double> b_sq;
  for (int n = 1; n <= cfg.n_steps; ++n)
    b_sq.push_back(norm_sq(inst.vi.B.apply(direct.traj.iterate(n))));
  const std::vector<double> theta1 =
      ergodic_noise_partial_sums(inst.schedule, inst.oracle.params(), b_sq);

  for (const auto& row : rep.merit_rows) {
    INFO("row n = " << row.n);
    const std::size_t t = static_cast<std::size_t>(row.n - 1);
    CHECK_THAT(row.weight_sum, WithinRel(direct.weight_sums[t], 1e-15));
    CHECK_THAT(row.bound, WithinRel(ergodic_bound(theta0, theta1[t], direct.weight_sums[t]),
                                    1e-13));
    // one replication: the mean average IS the run's average
    const double m = merit(inst.vi, inst.vi.C.project(direct.averages[t]));
    CHECK_THAT(row.merit_of_mean, WithinAbs(m, 1e-9));
    CHECK(row.merit_se == 0.0);
  }

  const std::string csv = rep.merit_csv();
  CHECK(csv.substr(0, csv.find('\n')) == "n,merit_of_mean,bound,weight_sum");

  // dispatcher picks the right runner
  const MonteCarloReport via_dispatch = run_experiment(cfg);
  CHECK(via_dispatch.merit_csv() == csv);
}
