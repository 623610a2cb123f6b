#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <string>

#include "ipwres/io.hpp"
#include "ipwres/portfolio.hpp"
#include "ipwres/rng.hpp"
#include "ipwres/simulate.hpp"
#include "test_support.hpp"

using namespace ipwres;
using Catch::Approx;
using test_support::TempDir;

TEST_CASE("load_portfolio handles headers-only files") {
    TempDir dir("data");
    const auto claims = dir.file("claims.csv", "claim_id,accident_time,reporting_time,size\n");
    const auto pays = dir.file("payments.csv", "claim_id,payment_time,amount\n");
    const Portfolio p = load_portfolio(claims, pays, 24.0);
    CHECK(p.claims.empty());
    CHECK(p.payments.empty());
    CHECK(p.feature_names == std::vector<std::string>{"size"});
}

TEST_CASE("load_portfolio reads a small portfolio") {
    TempDir dir("data");
    const auto claims =
        dir.file("claims.csv", "claim_id,accident_time,reporting_time\nA,0,1\n");
    const auto pays =
        dir.file("payments.csv", "claim_id,payment_time,amount\nA,2,100\nA,3,50\n");
    const Portfolio p = load_portfolio(claims, pays, 24.0);
    REQUIRE(p.claims.size() == 1);
    REQUIRE(p.payments.size() == 2);
    double total = 0.0;
    for (const Payment& pay : p.payments) total += pay.amount;
    CHECK(total == Approx(150.0));
}

TEST_CASE("load_portfolio reports referential and format failures") {
    TempDir dir("data");
    const auto claims =
        dir.file("claims.csv", "claim_id,accident_time,reporting_time\nA,0,1\n");

    SECTION("unknown claim carries the line number") {
        const auto pays =
            dir.file("payments.csv", "claim_id,payment_time,amount\nA,2,100\nB,3,50\n");
        try {
            load_portfolio(claims, pays, 24.0);
            FAIL("expected an error");
        } catch (const std::runtime_error& e) {
            const std::string what = e.what();
            CHECK(what.find("unknown claim") != std::string::npos);
            CHECK(what.find(":3:") != std::string::npos);
        }
    }
    SECTION("malformed number carries the line number") {
        const auto pays =
            dir.file("payments.csv", "claim_id,payment_time,amount\nA,2,100\nA,oops,50\n");
        try {
            load_portfolio(claims, pays, 24.0);
            FAIL("expected an error");
        } catch (const std::runtime_error& e) {
            const std::string what = e.what();
            CHECK(what.find("malformed") != std::string::npos);
            CHECK(what.find(":3:") != std::string::npos);
        }
    }
    SECTION("payment before reporting is rejected") {
        const auto pays = dir.file("payments.csv", "claim_id,payment_time,amount\nA,0.5,100\n");
        CHECK_THROWS_AS(load_portfolio(claims, pays, 24.0), std::invalid_argument);
    }
    SECTION("missing file") {
        CHECK_THROWS_AS(load_portfolio(claims, (dir.path / "nope.csv").string(), 24.0),
                        std::runtime_error);
    }
    SECTION("reporting before accident is rejected") {
        const auto bad = dir.file("claims2.csv", "claim_id,accident_time,reporting_time\nA,2,1\n");
        const auto pays = dir.file("payments.csv", "claim_id,payment_time,amount\n");
        CHECK_THROWS_AS(load_portfolio(bad, pays, 24.0), std::invalid_argument);
    }
    SECTION("total delay beyond max settlement is rejected") {
        const auto pays = dir.file("payments.csv", "claim_id,payment_time,amount\nA,30,10\n");
        CHECK_THROWS_AS(load_portfolio(claims, pays, 24.0), std::invalid_argument);
    }
}

namespace {

Portfolio tiny_portfolio() {
    Portfolio p;
    p.max_settlement = 24.0;
    p.claims.push_back({"A", 1.0, 2.0, {}});
    p.claims.push_back({"B", 0.0, 6.0, {}});
    p.payments.push_back({0, 3.0, 100.0});
    p.payments.push_back({0, 5.0, 50.0});
    p.payments.push_back({1, 6.5, 70.0});
    p.validate();
    return p;
}

}  // namespace

TEST_CASE("snapshot censors payments and claims at tau") {
    const Portfolio p = tiny_portfolio();
    const ObservedSnapshot s = snapshot(p, 4.0);

    // W = 5 at tau = 4 is excluded; claim B (R = 6) unreported.
    REQUIRE(s.payments.size() == 1);
    CHECK(s.membership == std::vector<char>{1, 0, 0});
    CHECK(s.n_paid == 1);
    CHECK(s.claim_reported == std::vector<char>{1, 0});
    CHECK(s.reported_claims == std::vector<std::size_t>{0});

    const ObservedPayment& o = s.payments[0];
    CHECK(o.reporting_delay == Approx(1.0));
    CHECK(o.payment_delay == Approx(1.0));
    CHECK(o.total_delay == Approx(2.0));
    CHECK(paid_amount(s) == Approx(100.0));
}

TEST_CASE("payment exactly at tau counts as observed") {
    const Portfolio p = tiny_portfolio();
    const ObservedSnapshot s = snapshot(p, 5.0);
    CHECK(s.n_paid == 2);
    CHECK(paid_amount(s) == Approx(150.0));
}

TEST_CASE("empty snapshot sums to zero") {
    const Portfolio p = tiny_portfolio();
    const ObservedSnapshot s = snapshot(p, 0.5);
    CHECK(s.payments.empty());
    CHECK(paid_amount(s) == 0.0);
}

TEST_CASE("snapshots grow monotonically and recover the population") {
    SimConfig config;
    config.horizon = 18.0;
    config.claim_rate = 6.0;
    config.omega = 24.0;
    config.reporting_hazard = {TimeGrid({0.0, 24.0}), {0.7}};
    config.payment_intensity = {TimeGrid({0.0, 24.0}), {0.12}};
    config.covariates = {{CovariateKind::symmetric_binary, "flag"}};
    config.beta = {0.3};
    config.alpha = {0.2};
    config.seed = 99;
    const GroundTruth truth = simulate_portfolio(config);
    const Portfolio& p = truth.population;
    REQUIRE(!p.payments.empty());

    double prev_paid = 0.0;
    std::vector<char> prev_membership(p.payments.size(), 0);
    for (double tau = 2.0; tau <= 48.0; tau += 3.0) {
        const ObservedSnapshot s = snapshot(p, tau);
        const double paid = paid_amount(s);
        CHECK(paid >= prev_paid);
        for (std::size_t i = 0; i < p.payments.size(); ++i)
            if (prev_membership[i]) CHECK(s.membership[i]);  // subset property
        prev_paid = paid;
        prev_membership = s.membership;

        double zsum_err = 0.0;
        for (const ObservedPayment& o : s.payments)
            zsum_err += std::abs(o.total_delay - (o.reporting_delay + o.payment_delay));
        CHECK(zsum_err == 0.0);  // Z = U + V exactly on stored times
    }

    // Far enough out the snapshot recovers the whole population.
    const ObservedSnapshot full = snapshot(p, config.horizon + config.omega + 1.0);
    CHECK(full.n_paid == p.payments.size());
    double total = 0.0;
    for (const Payment& pay : p.payments) total += pay.amount;
    CHECK(paid_amount(full) == Approx(total));
}

TEST_CASE("csv writers round-trip a portfolio") {
    SimConfig config;
    config.horizon = 10.0;
    config.claim_rate = 4.0;
    config.omega = 24.0;
    config.reporting_hazard = {TimeGrid({0.0, 24.0}), {0.8}};
    config.payment_intensity = {TimeGrid({0.0, 24.0}), {0.15}};
    config.covariates = {{CovariateKind::symmetric_binary, "flag"},
                         {CovariateKind::standard_normal, "score"}};
    config.beta = {0.3, -0.1};
    config.alpha = {0.2, 0.0};
    config.seed = 12;
    const Portfolio original = simulate_portfolio(config).population;

    TempDir dir("data");
    const auto claims_path = (dir.path / "claims.csv").string();
    const auto pays_path = (dir.path / "payments.csv").string();
    write_claims_csv(original, claims_path);
    write_payments_csv(original, pays_path);
    const Portfolio loaded = load_portfolio(claims_path, pays_path, config.omega);

    REQUIRE(loaded.claims.size() == original.claims.size());
    REQUIRE(loaded.payments.size() == original.payments.size());
    CHECK(loaded.feature_names == original.feature_names);
    for (std::size_t j = 0; j < loaded.claims.size(); ++j) {
        CHECK(loaded.claims[j].accident_time == original.claims[j].accident_time);
        CHECK(loaded.claims[j].reporting_time == original.claims[j].reporting_time);
        CHECK(loaded.claims[j].covariates == original.claims[j].covariates);
    }
    for (std::size_t i = 0; i < loaded.payments.size(); ++i) {
        CHECK(loaded.payments[i].payment_time == original.payments[i].payment_time);
        CHECK(loaded.payments[i].amount == original.payments[i].amount);
        CHECK(loaded.payments[i].claim_index == original.payments[i].claim_index);
    }
}
