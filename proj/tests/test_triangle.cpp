#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "ipwres/rng.hpp"
#include "ipwres/simulate.hpp"
#include "ipwres/triangle.hpp"
#include "test_support.hpp"

using namespace ipwres;
using Catch::Approx;
using test_support::TempDir;

namespace {

Portfolio single_payment_portfolio() {
    Portfolio p;
    p.max_settlement = 3.0;
    p.claims.push_back({"A", 0.5, 0.5, {}});
    p.payments.push_back({0, 1.5, 100.0});
    p.validate();
    return p;
}

}  // namespace

TEST_CASE("build_triangle bins payments by development cut") {
    const Portfolio p = single_payment_portfolio();
    const ObservedSnapshot s = snapshot(p, 3.0);
    const RunoffTriangle tri = build_triangle(s, 1.0, 1.0, TriangleMeasure::amount);

    REQUIRE(tri.dev_cuts == std::vector<double>{1.0, 2.0, 3.0});
    REQUIRE(tri.rows() == 3);
    // Z = 1 sits on the first cut, so it belongs to the second column.
    CHECK(tri.cells[0] == std::vector<double>{0.0, 100.0, 100.0});
    CHECK(tri.observed[0] == std::vector<char>{1, 1, 1});
    CHECK(tri.observed[1] == std::vector<char>{1, 1, 0});
    CHECK(tri.observed[2] == std::vector<char>{1, 0, 0});

    const RunoffTriangle counts = build_triangle(s, 1.0, 1.0, TriangleMeasure::count);
    CHECK(counts.cells[0] == std::vector<double>{0.0, 1.0, 1.0});
}

TEST_CASE("payments of one claim land in their own development columns") {
    Portfolio p;
    p.max_settlement = 3.0;
    p.claims.push_back({"A", 0.25, 0.25, {}});
    p.payments.push_back({0, 0.75, 10.0});  // Z = 0.5 -> first column
    p.payments.push_back({0, 1.75, 20.0});  // Z = 1.5 -> second column
    p.validate();
    const ObservedSnapshot s = snapshot(p, 3.0);
    const RunoffTriangle tri = build_triangle(s, 1.0, 1.0, TriangleMeasure::amount);
    CHECK(tri.cells[0] == std::vector<double>{10.0, 30.0, 30.0});
}

TEST_CASE("empty snapshot yields an all-zero triangle") {
    const Portfolio p = single_payment_portfolio();
    const ObservedSnapshot s = snapshot(p, 1.0);  // payment at 1.5 unobserved
    const RunoffTriangle tri = build_triangle(s, 1.0, 1.0, TriangleMeasure::amount);
    for (const auto& row : tri.cells)
        for (double v : row) CHECK(v == 0.0);
}

TEST_CASE("estimate_factors reproduces the classical ratios") {
    SECTION("amount weights: cumulative mass ratio") {
        Portfolio p;
        p.max_settlement = 4.0;
        p.claims.push_back({"A", 0.0, 0.0, {}});
        p.payments.push_back({0, 0.5, 100.0});  // Z < 1
        p.payments.push_back({0, 1.5, 50.0});   // Z < 2
        p.validate();
        const ObservedSnapshot s = snapshot(p, 4.0);
        const auto f = estimate_factors(s, {1.0, 2.0, 4.0}, ClWeight::amount);
        CHECK(f.factors[0] == Approx(1.5).epsilon(1e-12));
        CHECK(f.factors[1] == Approx(1.0));
    }
    SECTION("unit weights: count ratio") {
        Portfolio p;
        p.max_settlement = 4.0;
        p.claims.push_back({"A", 0.0, 0.0, {}});
        for (int k = 0; k < 8; ++k) p.payments.push_back({0, 0.1 + 0.1 * k, 5.0});
        p.payments.push_back({0, 1.2, 5.0});
        p.payments.push_back({0, 1.7, 5.0});
        p.validate();
        const ObservedSnapshot s = snapshot(p, 4.0);
        const auto f = estimate_factors(s, {1.0, 2.0, 4.0}, ClWeight::unit);
        CHECK(f.factors[0] == Approx(10.0 / 8.0).epsilon(1e-12));
    }
    SECTION("insufficient mass raises") {
        Portfolio p;
        p.max_settlement = 4.0;
        p.claims.push_back({"A", 0.0, 0.0, {}});
        p.payments.push_back({0, 1.5, 50.0});  // nothing before the first cut
        p.validate();
        const ObservedSnapshot s = snapshot(p, 4.0);
        CHECK_THROWS_AS(estimate_factors(s, {1.0, 2.0, 4.0}, ClWeight::amount),
                        std::invalid_argument);
    }
}

namespace {

GroundTruth homogeneous_truth(std::uint64_t seed, double claim_rate = 30.0) {
    SimConfig c;
    c.horizon = 18.0;
    c.claim_rate = claim_rate;
    c.omega = 12.0;
    c.reporting_hazard = {TimeGrid({0.0, 12.0}), {1.3}};
    c.payment_intensity = {TimeGrid({0.0, 4.0, 12.0}), {0.6, 0.2}};
    c.covariates = {};
    c.beta = {};
    c.alpha = {};
    c.amount_mu = 4.0;
    c.amount_sigma = 1.0;
    c.seed = seed;
    return simulate_portfolio(c);
}

}  // namespace

TEST_CASE("payment-level factors equal aggregated-triangle column ratios") {
    const GroundTruth truth = homogeneous_truth(314);
    const ObservedSnapshot s = snapshot(truth.population, 15.0);
    REQUIRE(s.n_paid > 100);

    for (const auto scheme : {ClWeight::amount, ClWeight::unit}) {
        const auto measure =
            scheme == ClWeight::unit ? TriangleMeasure::count : TriangleMeasure::amount;
        const RunoffTriangle tri = build_triangle(s, 1.0, 1.0, measure);
        const auto f = estimate_factors(s, tri.dev_cuts, scheme, 1.0);

        for (std::size_t n = 1; n < tri.dev_cuts.size(); ++n) {
            double num = 0.0, den = 0.0;
            for (std::size_t o = 0; o < tri.rows(); ++o) {
                if (!tri.observed[o][n]) continue;
                num += tri.cells[o][n];
                den += tri.cells[o][n - 1];
            }
            if (den > 0.0) CHECK(f.factors[n - 1] == Approx(num / den).epsilon(1e-12));
        }
    }
}

TEST_CASE("cl_project develops rows through the remaining factors") {
    RunoffTriangle tri;
    tri.origin_cuts = {0.0, 1.0, 2.0};
    tri.dev_cuts = {1.0, 2.0, 3.0};
    tri.measure = TriangleMeasure::amount;
    tri.valuation_time = 3.0;
    tri.cells = {{60.0, 90.0, 95.0}, {100.0, 0.0, 0.0}};
    tri.observed = {{1, 1, 1}, {1, 0, 0}};

    DevelopmentFactors f;
    f.dev_cuts = tri.dev_cuts;
    f.scheme = ClWeight::amount;

    SECTION("identity factors give zero reserve") {
        f.factors = {1.0, 1.0};
        const ClProjection proj = cl_project(tri, f);
        CHECK(proj.total_reserve == Approx(0.0));
    }
    SECTION("hand recursion") {
        f.factors = {1.5, 1.2};
        const ClProjection proj = cl_project(tri, f);
        CHECK(proj.ultimate[1] == Approx(180.0).epsilon(1e-12));
        CHECK(proj.reserve[1] == Approx(80.0).epsilon(1e-12));
        CHECK(proj.reserve[0] == Approx(0.0));  // fully observed row
        CHECK(proj.completed[1][1] == Approx(150.0));
        CHECK(proj.completed[1][2] == Approx(180.0));
    }
    SECTION("reserve scales with the cells") {
        f.factors = {1.5, 1.2};
        const double before = cl_project(tri, f).total_reserve;
        for (auto& row : tri.cells)
            for (double& v : row) v *= 7.5;
        CHECK(cl_project(tri, f).total_reserve == Approx(7.5 * before).epsilon(1e-12));
    }
}

TEST_CASE("implied factors from probability curves") {
    const auto f = implied_factors_from_probabilities({0.5, 0.75, 1.0}, {1.0, 2.0, 3.0});
    REQUIRE(f.factors.size() == 2);
    CHECK(f.factors[0] == Approx(1.5).epsilon(1e-12));
    CHECK(f.factors[1] == Approx(4.0 / 3.0).epsilon(1e-12));

    const auto flat = implied_factors_from_probabilities({0.4, 0.4, 0.4}, {1.0, 2.0, 3.0});
    CHECK(flat.factors == std::vector<double>{1.0, 1.0});

    // Telescoping: the product of factors is 1 / pi(t_0).
    double prod = 1.0;
    for (double x : f.factors) prod *= x;
    CHECK(prod == Approx(1.0 / 0.5).epsilon(1e-12));

    CHECK_THROWS_AS(implied_factors_from_probabilities({0.5, 0.4, 1.0}, {1.0, 2.0, 3.0}),
                    std::invalid_argument);
}

TEST_CASE("reverse hazard route agrees with the probability-ratio route") {
    SECTION("hand evaluation") {
        const auto f = reverse_hazard_factors({0.5, 0.75}, {1.0, 2.0});
        CHECK(f.factors[0] == Approx(1.5).epsilon(1e-12));
        const auto flat = reverse_hazard_factors({0.7, 0.7}, {1.0, 2.0});
        CHECK(flat.factors[0] == Approx(1.0));
    }
    SECTION("random monotone curves") {
        RandomField field(99);
        for (int rep = 0; rep < 1000; ++rep) {
            const std::size_t m = 2 + static_cast<std::size_t>(field.uniform(rep, 0, 0, 0) * 8);
            std::vector<double> curve(m), cuts(m);
            curve[0] = 0.05 + 0.5 * field.uniform(rep, 1, 0, 0);
            cuts[0] = 1.0 + field.uniform(rep, 2, 0, 0);
            for (std::size_t n = 1; n < m; ++n) {
                curve[n] = curve[n - 1] +
                           (1.0 - curve[n - 1]) * field.uniform(rep, 1, n, 0);
                cuts[n] = cuts[n - 1] + 0.25 + 3.0 * field.uniform(rep, 2, n, 0);
            }
            curve[m - 1] = 1.0;
            const auto a = implied_factors_from_probabilities(curve, cuts);
            const auto b = reverse_hazard_factors(curve, cuts);
            for (std::size_t n = 0; n + 1 < m; ++n)
                CHECK(a.factors[n] == Approx(b.factors[n]).epsilon(1e-12));
        }
    }
}

TEST_CASE("double chain-ladder decomposition") {
    Portfolio p;
    p.max_settlement = 24.0;
    p.claims.push_back({"A", 0.0, 0.0, {}});
    for (int k = 0; k < 10; ++k) p.payments.push_back({0, 0.5 + 0.1 * k, 25.0});
    p.validate();
    const ObservedSnapshot s = snapshot(p, 2.0);
    REQUIRE(s.n_paid == 10);

    SECTION("empty window gives zero") {
        CHECK(double_cl_decomposition(s, 1.0, 0.9, 0.95, 0.95) == Approx(0.0));
    }
    SECTION("hand product") {
        // N_hat = 10 / 0.8 = 12.5, p = 0.1, Ybar = (250 / 0.5) / 10 = 50.
        CHECK(double_cl_decomposition(s, 0.8, 0.4, 0.5, 0.6) == Approx(62.5).epsilon(1e-12));
    }
    SECTION("equality with the homogeneous incremental estimator") {
        RandomField field(55);
        for (int rep = 0; rep < 1000; ++rep) {
            const double pi_u = 0.2 + 0.8 * field.uniform(rep, 0, 0, 0);
            const double pi_v = 0.2 + 0.8 * field.uniform(rep, 1, 0, 0);
            const double pi_tau = pi_u * pi_v;
            const double pi_t1 = pi_tau + (1.0 - pi_tau) * field.uniform(rep, 2, 0, 0);
            const double pi_t2 = pi_t1 + (1.0 - pi_t1) * field.uniform(rep, 3, 0, 0);
            const double dcl = double_cl_decomposition(s, pi_u, pi_tau, pi_t1, pi_t2);
            const std::vector<double> amounts(10, 25.0);
            const double ipw = incremental_estimate(
                amounts, std::vector<double>(10, pi_tau), std::vector<double>(10, pi_t1),
                std::vector<double>(10, pi_t2));
            CHECK(dcl == Approx(ipw).epsilon(1e-12));
        }
    }
    SECTION("no payments is an error") {
        const ObservedSnapshot empty = snapshot(p, 0.2);
        CHECK_THROWS_AS(double_cl_decomposition(empty, 0.8, 0.4, 0.5, 0.6),
                        std::invalid_argument);
    }
}

TEST_CASE("ipw completion reproduces the chain-ladder projection cell by cell") {
    for (std::uint64_t seed : {41ULL, 42ULL, 43ULL}) {
        const GroundTruth truth = homogeneous_truth(seed);
        const ObservedSnapshot s = snapshot(truth.population, 15.0);

        for (const auto scheme : {ClWeight::amount, ClWeight::unit}) {
            const auto measure =
                scheme == ClWeight::unit ? TriangleMeasure::count : TriangleMeasure::amount;
            const RunoffTriangle tri = build_triangle(s, 1.0, 1.0, measure);
            const auto factors = estimate_factors(s, tri.dev_cuts, scheme, 1.0);
            const ClProjection cl = cl_project(tri, factors);
            const ClProjection ipw = ipw_complete_triangle(s, tri, scheme);

            for (std::size_t o = 0; o < tri.rows(); ++o)
                for (std::size_t d = 0; d < tri.columns(); ++d)
                    if (!tri.observed[o][d] && cl.completed[o][d] > 0.0)
                        CHECK(ipw.completed[o][d] ==
                              Approx(cl.completed[o][d]).epsilon(1e-10));
            CHECK(ipw.total_reserve == Approx(cl.total_reserve).epsilon(1e-10));
        }
    }
}

TEST_CASE("triangle and factor csv output") {
    const GroundTruth truth = homogeneous_truth(7, 5.0);
    const ObservedSnapshot s = snapshot(truth.population, 15.0);
    const RunoffTriangle tri = build_triangle(s, 2.0, 2.0, TriangleMeasure::amount);
    const auto factors = estimate_factors(s, tri.dev_cuts, ClWeight::amount, 2.0);

    TempDir dir("tri");
    write_triangle_csv(tri, dir / "triangle.csv");
    write_factors_csv(factors, dir / "factors.csv");

    const CsvTable t = read_csv(dir / "triangle.csv");
    REQUIRE(t.header.size() == tri.dev_cuts.size() + 1);
    CHECK(t.header[0] == "origin");
    REQUIRE(t.rows.size() == tri.rows());
    // Unobserved staircase cells are empty fields.
    for (std::size_t o = 0; o < tri.rows(); ++o)
        for (std::size_t d = 0; d < tri.columns(); ++d)
            CHECK(t.rows[o][d + 1].empty() == !tri.observed[o][d]);

    const CsvTable fcsv = read_csv(dir / "factors.csv");
    CHECK(fcsv.header ==
          std::vector<std::string>{"step", "from", "to", "factor", "weight_scheme"});
    REQUIRE(fcsv.rows.size() == factors.factors.size());
    CHECK(fcsv.rows[0][4] == "amount");
}
