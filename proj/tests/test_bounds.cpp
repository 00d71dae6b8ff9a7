#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sfb/bounds.hpp>
#include <sfb/random.hpp>

using namespace sfb;

TEST_CASE("sublinear closed form matches a pinned high-precision value") {
    // alpha = 0.5, c = 1, tau = 1, s_n0 = 1, n0 = 2, n = 8; reference value
    // evaluated independently in arbitrary-precision arithmetic
    double v = chung_bound_sublinear(0.5, 1.0, 1.0, 1.0, 2, 8);
    CHECK_THAT(v, Catch::Matchers::WithinRel(3.854547718924691387, 1e-12));
}

TEST_CASE("harmonic closed form matches exact rational arithmetic") {
    // c = 2, tau = 1, s_n0 = 1, n0 = 2, n = 10:
    // 1*(2/11)^2 + 1*4*(3/2)^2*phi_1(10)/11^2 = (4 + 81)/121
    double v = chung_bound_harmonic(2.0, 1.0, 1.0, 2, 10);
    CHECK_THAT(v, Catch::Matchers::WithinRel(85.0 / 121.0, 1e-15));
}

TEST_CASE("noiseless zero-start bound is identically zero") {
    for (long long n : {4, 10, 100, 10000}) {
        CHECK(chung_bound_sublinear(0.7, 1.0, 0.0, 0.0, 2, n) == 0.0);
        CHECK(chung_bound_harmonic(1.5, 0.0, 0.0, 2, n) == 0.0);
    }
}

TEST_CASE("harmonic noiseless term is the exact decay factor") {
    double v = chung_bound_harmonic(3.0, 0.0, 2.0, 4, 9);
    CHECK_THAT(v, Catch::Matchers::WithinRel(2.0 * std::pow(0.4, 3.0), 1e-15));
}

TEST_CASE("sublinear bound is eventually dominated by its polynomial tail") {
    struct Window {
        double theta, c;
        long long n0, lo, hi;
    };
    // the start-value and log-factor transients die off later for theta near 1,
    // so each exponent gets its own comparison window
    const Window cases[] = {{0.3, 0.8, 2, 1000, 1000000},
                            {0.55, 0.8, 2, 10000, 10000000},
                            {0.9, 4.0, 5, 1000000000000000LL, 1000000000000000000LL}};
    for (const Window& k : cases) {
        const double b_lo = chung_bound_sublinear(k.theta, k.c, 1.0, 2.0, k.n0, k.lo);
        const double b_hi = chung_bound_sublinear(k.theta, k.c, 1.0, 2.0, k.n0, k.hi);
        const double expected =
            std::pow(static_cast<double>(k.lo - 2) / static_cast<double>(k.hi - 2), k.theta);
        INFO("theta = " << k.theta);
        CHECK(std::fabs(b_hi / b_lo - expected) <= 0.05 * expected);
    }
}

TEST_CASE("bound formulas reject out-of-domain arguments") {
    CHECK_THROWS_AS(chung_bound_sublinear(0.0, 1.0, 1.0, 1.0, 2, 8), std::invalid_argument);
    CHECK_THROWS_AS(chung_bound_sublinear(1.0, 1.0, 1.0, 1.0, 2, 8), std::invalid_argument);
    CHECK_THROWS_AS(chung_bound_sublinear(0.5, 0.0, 1.0, 1.0, 2, 8), std::invalid_argument);
    CHECK_THROWS_AS(chung_bound_sublinear(0.5, 1.0, -1.0, 1.0, 2, 8), std::invalid_argument);
    CHECK_THROWS_AS(chung_bound_sublinear(0.5, 1.0, 1.0, 1.0, 1, 8), std::invalid_argument);
    CHECK_THROWS_AS(chung_bound_sublinear(0.5, 1.0, 1.0, 1.0, 2, 3), std::invalid_argument);
    CHECK_THROWS_AS(chung_bound_harmonic(0.0, 1.0, 1.0, 2, 8), std::invalid_argument);
    CHECK_THROWS_AS(chung_bound_harmonic(1.0, 1.0, 1.0, 2, 3), std::invalid_argument);
}

TEST_CASE("worst-case recursion single-step arithmetic") {
    ChungParams p;
    p.alpha = 1.0;
    p.c = 1.0;
    p.tau = 1.0;
    p.s_start = 0.0;
    CHECK(p.n0() == 2);
    std::vector<double> s = chung_recursion_worst_case(p, 3);
    REQUIRE(s.size() == 2);
    CHECK(s[0] == 0.0);
    CHECK(s[1] == 0.25);  // (1 - 1/2)*0 + (1/2)^2
}

TEST_CASE("noiseless recursion is a strictly decreasing product") {
    ChungParams p;
    p.alpha = 0.6;
    p.c = 0.9;
    p.tau = 0.0;
    p.s_start = 3.0;
    std::vector<double> s = chung_recursion_worst_case(p, 50);
    double prod = 3.0;
    long long n = p.n0();
    for (std::size_t k = 0; k < s.size(); ++k) {
        CHECK_THAT(s[k], Catch::Matchers::WithinRel(prod, 1e-14));
        if (k > 0) CHECK(s[k] < s[k - 1]);
        prod *= 1.0 - p.c * std::pow(static_cast<double>(n + static_cast<long long>(k)), -p.alpha);
    }
}

TEST_CASE("closed forms dominate the equality recursion pointwise") {
    RandomStream st(SeedSpec{51, 0});
    int checked = 0;
    for (int draw = 0; draw < 25; ++draw) {
        ChungParams p;
        p.alpha = draw % 4 == 0 ? 1.0 : 0.3 + 0.7 * st.uniform01();
        p.c = 0.1 + 2.9 * st.uniform01();
        p.tau = st.uniform01() < 0.2 ? 0.0 : 3.0 * st.uniform01();
        p.s_start = st.uniform01() < 0.2 ? 0.0 : 5.0 * st.uniform01();
        const long long n0 = p.n0();
        const long long n_hi = 2000;
        std::vector<double> s = chung_recursion_worst_case(p, n_hi + 1);
        for (long long n = 2 * n0; n <= n_hi; ++n) {
            double bound = p.alpha < 1.0
                               ? chung_bound_sublinear(p.alpha, p.c, p.tau, p.s_start, n0, n)
                               : chung_bound_harmonic(p.c, p.tau, p.s_start, n0, n);
            double rec = s[static_cast<std::size_t>(n + 1 - n0)];
            if (rec > bound) {
                INFO("draw " << draw << " alpha " << p.alpha << " c " << p.c << " tau " << p.tau
                             << " s0 " << p.s_start << " n " << n);
                REQUIRE(rec <= bound);
            }
            ++checked;
        }
    }
    CHECK(checked > 25000);
}

TEST_CASE("rate constants derived from schedule and moduli") {
    RateConstants k;
    k.theta = 1.0;
    k.c1 = 4.0;
    k.lambda_lower = 1.0;
    k.nu = 0.0;
    k.mu = 1.0;
    k.epsilon = 0.5;
    k.sigma = 1.0;
    k.alpha_bar = 0.0;
    k.b_norm_at_solution = 0.0;
    CHECK(k.t() == 0.0);
    CHECK(k.c() == 2.0);
    CHECK(k.tau() == 8.0);
    CHECK(k.n0() == 4);
    CHECK_NOTHROW(k.validate());

    RateConstants sub = k;
    sub.theta = 0.7;
    sub.c1 = 1.4;
    CHECK_THAT(sub.t(), Catch::Matchers::WithinRel(1.0 - std::exp2(-0.3), 1e-15));
    CHECK_THAT(sub.c(), Catch::Matchers::WithinRel(0.7, 1e-15));
    CHECK(sub.n0() == 2);

    RateConstants bad = k;
    bad.nu = 0.0;
    bad.mu = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = k;
    bad.theta = 1.5;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = k;
    bad.epsilon = 2.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("constant variant flags select the alternative published forms") {
    RateConstants k;
    k.theta = 1.0;
    k.c1 = 1.0;
    k.lambda_lower = 1.0;
    k.nu = 1.0;
    k.mu = 1.0;
    k.epsilon = 0.5;
    k.sigma = 1.0;
    k.alpha_bar = 1.0;
    k.b_norm_at_solution = 2.0;

    CHECK_THAT(k.c(), Catch::Matchers::WithinRel(2.5 / 4.0, 1e-15));
    RateConstants single = k;
    single.c_uses_double_nu = false;
    CHECK_THAT(single.c(), Catch::Matchers::WithinRel(1.5 / 4.0, 1e-15));

    // squared norm: 2*(1 + 4)/c^2; first power: 2*(1 + 2)/c^2
    CHECK_THAT(k.tau() * k.c() * k.c(), Catch::Matchers::WithinRel(10.0, 1e-15));
    RateConstants first = k;
    first.tau_uses_sq_norm = false;
    CHECK_THAT(first.tau() * first.c() * first.c(), Catch::Matchers::WithinRel(6.0, 1e-15));
}

TEST_CASE("bound curve indexing shifts by one iterate") {
    RateConstants k;
    k.theta = 0.7;
    k.c1 = 1.4;
    k.lambda_lower = 1.0;
    k.nu = 0.0;
    k.mu = 1.0;
    k.epsilon = 0.5;
    k.sigma = 1.0;
    BoundCurve curve{k, 1.5};
    const long long first = curve.first_valid_index();
    CHECK(first == 2 * k.n0() + 1);
    CHECK(curve.eval_at(first) == mse_bound(k, 1.5, first - 1));
    CHECK(curve.eval_at(100) == mse_bound(k, 1.5, 99));
    CHECK_THROWS_AS(curve.eval_at(first - 1), std::invalid_argument);

    // dispatcher picks the harmonic form at theta = 1
    RateConstants h = k;
    h.theta = 1.0;
    h.c1 = 4.0;
    CHECK(mse_bound(h, 1.0, 10) ==
          chung_bound_harmonic(h.c(), h.tau(), 1.0, h.n0(), 10));
    CHECK(mse_bound(k, 1.0, 10) ==
          chung_bound_sublinear(0.7, k.c(), k.tau(), 1.0, k.n0(), 10));
}

TEST_CASE("asymptotic classes follow the theta-c taxonomy") {
    AsymptoticRate a = asymptotic_rate_class(0.7, 5.0);
    CHECK(a.cls == RateClass::power_theta);
    CHECK(a.power == 0.7);
    CHECK_FALSE(a.log_factor);

    AsymptoticRate b = asymptotic_rate_class(1.0, 0.5);
    CHECK(b.cls == RateClass::power_c);
    CHECK(b.power == 0.5);

    AsymptoticRate c = asymptotic_rate_class(1.0, 1.0);
    CHECK(c.cls == RateClass::harmonic_log);
    CHECK(c.log_factor);

    AsymptoticRate d = asymptotic_rate_class(1.0, 2.0);
    CHECK(d.cls == RateClass::harmonic);
    CHECK(d.power == 1.0);

    CHECK(rate_class_name(RateClass::power_theta) == "power_theta");
    CHECK(rate_class_name(RateClass::harmonic_log) == "harmonic_log");
    CHECK_THROWS_AS(asymptotic_rate_class(0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(asymptotic_rate_class(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("harmonic bound with unit contraction decays like log n over n") {
    // c = 1: the noise term carries phi_0(n) = log n
    RateConstants k;
    k.theta = 1.0;
    k.c1 = 1.0;
    k.lambda_lower = 1.0;
    k.nu = 0.0;
    k.mu = 2.0;
    k.epsilon = 0.5;
    k.sigma = 1.0;
    CHECK(k.c() == 1.0);
    // slope of log(bound * (n+1) / log n) over a dyadic grid should vanish
    double lo = mse_bound(k, 1.0, 10000) * 10001.0 / std::log(10000.0);
    double hi = mse_bound(k, 1.0, 10000000) * 10000001.0 / std::log(10000000.0);
    CHECK(std::fabs(hi / lo - 1.0) < 0.05);
}
