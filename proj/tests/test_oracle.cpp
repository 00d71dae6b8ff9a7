#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sfb/oracle.hpp>

using namespace sfb;

namespace {

CocoerciveOperator shifted_identity(std::size_t d, double shift) {
    Point c(d, shift);
    return CocoerciveOperator::gradient_quadratic(Matrix::identity(d), c);
}

}  // namespace

TEST_CASE("exact oracle returns the mean field") {
    StochasticOracle o = StochasticOracle::exact(shifted_identity(3, 0.0));
    RandomStream st(SeedSpec{31, 0});
    Point w{1.0, -2.0, 0.5};
    CHECK(o.sample(w, st) == o.mean(w));
    CHECK(o.sample(w, st) == w);
    CHECK(o.effective_sigma() == 0.0);
    CHECK(st.position() == 0);  // exact mode consumes no randomness
}

TEST_CASE("additive noise is unbiased with total variance sigma^2") {
    const std::size_t d = 4;
    OracleParams p;
    p.sigma = 1.0;
    StochasticOracle o = StochasticOracle::additive_gaussian(shifted_identity(d, 0.0), p);
    RandomStream st(SeedSpec{32, 0});
    Point w{0.5, -1.0, 2.0, 0.0};
    Point bw = o.mean(w);
    const int n = 1000000;
    Point sum(d, 0.0);
    double sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
        Point s = o.sample(w, st);
        for (std::size_t k = 0; k < d; ++k) sum[k] += s[k];
        sum_sq += distance_sq(s, bw);
    }
    for (auto& x : sum) x /= n;
    CHECK(distance(sum, bw) <= 0.005 * std::sqrt(static_cast<double>(d)));
    // declared bound is on the total squared deviation, so the per-coordinate
    // noise must scale like sigma/sqrt(d)
    CHECK_THAT(sum_sq / n, Catch::Matchers::WithinAbs(1.0, 0.01));
}

TEST_CASE("relative noise tracks the declared second-moment curve") {
    OracleParams p;
    p.sigma = 0.8;
    p.alpha_bar = 0.5;
    StochasticOracle o = StochasticOracle::relative_gaussian(shifted_identity(2, 0.0), p);
    RandomStream st(SeedSpec{33, 0});
    // probe points with ||Bw|| = 0, 1, 10
    std::vector<Point> probes = {{0.0, 0.0}, {1.0, 0.0}, {10.0, 0.0}};
    for (const auto& w : probes) {
        Point bw = o.mean(w);
        double declared = p.sigma * p.sigma * (1.0 + p.alpha_bar * norm_sq(bw));
        const int n = 200000;
        double sum_sq = 0.0;
        for (int i = 0; i < n; ++i) sum_sq += distance_sq(o.sample(w, st), bw);
        double ratio = sum_sq / n / declared;
        CHECK(std::fabs(ratio - 1.0) <= 5.0 / std::sqrt(static_cast<double>(n)));
    }
}

TEST_CASE("finite-sum oracle averages its components") {
    Matrix id = Matrix::identity(1);
    std::vector<CocoerciveOperator> comps;
    comps.push_back(CocoerciveOperator::gradient_quadratic(id, {0.0}));
    comps.push_back(CocoerciveOperator::gradient_quadratic(id, {2.0}));
    OracleParams p;
    p.sigma = 1.0;
    StochasticOracle o = StochasticOracle::finite_sum(comps, p);

    // mean field is w - 1, the average of w - 0 and w - 2
    CHECK(o.mean({0.0}) == Point{-1.0});
    CHECK(o.mean({3.0}) == Point{2.0});

    RandomStream st(SeedSpec{34, 0});
    Point w{0.5};
    int hits[2] = {0, 0};
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        Point s = o.sample(w, st);
        sum += s[0];
        // sample must be one of the two component values w or w-2
        if (s[0] == 0.5)
            hits[0]++;
        else if (s[0] == -1.5)
            hits[1]++;
    }
    CHECK(hits[0] + hits[1] == n);
    CHECK(hits[0] > 48000);
    CHECK(hits[1] > 48000);
    CHECK_THAT(sum / n, Catch::Matchers::WithinAbs(-0.5, 0.02));

    CHECK_THROWS_AS(StochasticOracle::finite_sum({}, p), std::invalid_argument);
}

TEST_CASE("oracle params validate and interpolate alpha") {
    OracleParams p;
    p.sigma = 1.0;
    p.alpha_bar = 2.0;
    p.alpha_list = {0.5, 1.0, 2.0};
    CHECK(p.alpha(1) == 0.5);
    CHECK(p.alpha(3) == 2.0);
    CHECK(p.alpha(4) == 2.0);  // past the list: fall back to the bound
    CHECK_THROWS_AS(p.alpha(0), std::invalid_argument);

    OracleParams bad = p;
    bad.alpha_list = {3.0};  // exceeds alpha_bar
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    OracleParams neg;
    neg.sigma = -1.0;
    CHECK_THROWS_AS(neg.validate(), std::invalid_argument);
}

TEST_CASE("moment verification passes the catalog at declared parameters") {
    std::vector<Point> probes = {{0.0, 0.0}, {1.0, -1.0}, {3.0, 0.5}, {-2.0, 2.0}, {0.1, 0.1}};
    OracleParams add;
    add.sigma = 1.0;
    OracleParams rel;
    rel.sigma = 0.5;
    rel.alpha_bar = 1.0;

    std::vector<StochasticOracle> oracles;
    oracles.push_back(StochasticOracle::exact(shifted_identity(2, 0.5)));
    oracles.push_back(StochasticOracle::additive_gaussian(shifted_identity(2, 0.5), add));
    oracles.push_back(StochasticOracle::relative_gaussian(shifted_identity(2, 0.5), rel));
    {
        std::vector<CocoerciveOperator> comps;
        comps.push_back(shifted_identity(2, 0.0));
        comps.push_back(shifted_identity(2, 1.0));
        OracleParams fs;
        fs.sigma = 1.0;
        oracles.push_back(StochasticOracle::finite_sum(comps, fs));
    }

    int idx = 0;
    for (const auto& o : oracles) {
        RandomStream st(SeedSpec{35, static_cast<std::uint64_t>(idx++)});
        MomentReport rep = verify_moments(o, probes, 40000, st);
        INFO("oracle " << idx);
        CHECK(rep.bias_ok);
        CHECK(rep.variance_ok);
        CHECK(rep.ok);
    }
}

TEST_CASE("misdeclared noise level fails the variance check") {
    OracleParams lied;
    lied.sigma = 1.0;       // declared
    lied.noise_scale = 2.0; // actual noise is twice the declaration
    StochasticOracle o = StochasticOracle::additive_gaussian(shifted_identity(2, 0.0), lied);
    RandomStream st(SeedSpec{36, 0});
    MomentReport rep = verify_moments(o, {{1.0, 1.0}, {0.0, 0.0}}, 40000, st);
    CHECK_FALSE(rep.ok);
    CHECK_FALSE(rep.variance_ok);
    CHECK(rep.bias_ok);  // still unbiased, only the variance is understated
    for (const auto& pm : rep.probes) {
        CHECK(pm.variance_ratio > 3.0);
        CHECK(pm.variance_ratio < 5.0);
    }
}

TEST_CASE("moment verification input validation") {
    StochasticOracle o = StochasticOracle::exact(shifted_identity(2, 0.0));
    RandomStream st(SeedSpec{37, 0});
    CHECK_THROWS_AS(verify_moments(o, {}, 100, st), std::invalid_argument);
    CHECK_THROWS_AS(verify_moments(o, {{0.0, 0.0}}, 1, st), std::invalid_argument);
}
