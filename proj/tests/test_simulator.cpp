#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "ipwres/io.hpp"
#include "ipwres/simulate.hpp"
#include "test_support.hpp"

using namespace ipwres;
using Catch::Approx;
using test_support::TempDir;

namespace {

SimConfig base_config() {
    SimConfig c;
    c.horizon = 24.0;
    c.claim_rate = 8.0;
    c.omega = 24.0;
    c.reporting_hazard = {TimeGrid({0.0, 3.0, 24.0}), {1.2, 0.55}};
    c.payment_intensity = {TimeGrid({0.0, 6.0, 24.0}), {0.35, 0.08}};
    c.covariates = {{CovariateKind::symmetric_binary, "flag"},
                    {CovariateKind::standard_normal, "score"}};
    c.beta = {0.4, -0.25};
    c.alpha = {0.3, 0.1};
    c.alpha_u = 0.02;
    c.amount_mu = 4.0;
    c.amount_sigma = 0.8;
    c.seed = 2024;
    return c;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("zero claim rate gives an empty portfolio") {
    SimConfig c = base_config();
    c.claim_rate = 0.0;
    const GroundTruth truth = simulate_portfolio(c);
    CHECK(truth.population.claims.empty());
    CHECK(truth.population.payments.empty());
}

TEST_CASE("identical seeds produce byte-identical portfolios") {
    const SimConfig c = base_config();
    const GroundTruth a = simulate_portfolio(c);
    const GroundTruth b = simulate_portfolio(c);
    REQUIRE(a.population.claims.size() == b.population.claims.size());
    REQUIRE(a.population.payments.size() == b.population.payments.size());

    TempDir dir("sim");
    write_claims_csv(a.population, dir / "a_claims.csv");
    write_claims_csv(b.population, dir / "b_claims.csv");
    write_payments_csv(a.population, dir / "a_pays.csv");
    write_payments_csv(b.population, dir / "b_pays.csv");
    CHECK(slurp(dir / "a_claims.csv") == slurp(dir / "b_claims.csv"));
    CHECK(slurp(dir / "a_pays.csv") == slurp(dir / "b_pays.csv"));

    SimConfig other = c;
    other.seed = 2025;
    const GroundTruth d = simulate_portfolio(other);
    write_claims_csv(d.population, dir / "d_claims.csv");
    CHECK(slurp(dir / "a_claims.csv") != slurp(dir / "d_claims.csv"));
}

TEST_CASE("claim streams are stable when the portfolio grows") {
    // Doubling the claim rate only adds claims; shared indices are untouched.
    SimConfig lo = base_config();
    lo.claim_rate = 4.0;
    SimConfig hi = base_config();
    hi.claim_rate = 8.0;
    const Portfolio a = simulate_portfolio(lo).population;
    const Portfolio b = simulate_portfolio(hi).population;
    const std::size_t shared = std::min(a.claims.size(), b.claims.size());
    REQUIRE(shared > 10);
    for (std::size_t j = 0; j < shared; ++j) {
        CHECK(a.claims[j].accident_time == b.claims[j].accident_time);
        CHECK(a.claims[j].reporting_time == b.claims[j].reporting_time);
        CHECK(a.claims[j].covariates == b.claims[j].covariates);
    }
    // Payments of the shared claims match one for one.
    auto payments_of = [](const Portfolio& p, std::size_t j) {
        std::vector<std::pair<double, double>> out;
        for (const Payment& pay : p.payments)
            if (pay.claim_index == j) out.emplace_back(pay.payment_time, pay.amount);
        return out;
    };
    for (std::size_t j = 0; j < shared; ++j) CHECK(payments_of(a, j) == payments_of(b, j));
}

TEST_CASE("claim counts follow the configured Poisson mean") {
    SimConfig c = base_config();
    c.claim_rate = 10.0;
    c.horizon = 36.0;
    const int reps = 200;
    double total = 0.0;
    for (int r = 0; r < reps; ++r) {
        c.seed = 5000 + r;
        total += static_cast<double>(simulate_portfolio(c).population.claims.size());
    }
    const double mean = total / reps;
    CHECK(std::abs(mean - 360.0) < 3.0 * std::sqrt(360.0 / reps));
}

TEST_CASE("ground truth bookkeeping identities") {
    const GroundTruth truth = simulate_portfolio(base_config());
    for (double tau : {0.5, 6.0, 14.0, 30.0, 60.0}) {
        const TrueReserves r = true_reserves(truth, tau);
        CHECK(r.ibns == r.rbns + r.ibnr);
        CHECK(r.total_liability == r.paid + r.ibns);
    }
    // Far past all settlement everything is paid.
    const TrueReserves done = true_reserves(truth, truth.config.horizon + truth.config.omega);
    CHECK(done.ibns == 0.0);
    CHECK(done.rbns == 0.0);
    CHECK(done.ibnr == 0.0);
    // Before the first accident there is no population at all.
    const TrueReserves none = true_reserves(truth, -1.0);
    CHECK(none.n_total == 0);
    CHECK(none.total_liability == 0.0);
}

TEST_CASE("oracle probabilities re-derive from raw rates") {
    const SimConfig c = base_config();
    const GroundTruth truth = simulate_portfolio(c);
    const double tau = 15.0;
    std::size_t checked = 0;
    for (const Claim& claim : truth.population.claims) {
        if (claim.accident_time > tau || checked >= 100) continue;
        ++checked;
        const double u = claim.reporting_time - claim.accident_time;
        const OracleProbabilities o = oracle_probabilities(c, claim, u, tau);

        // Independent re-derivation straight from the configured rates.
        double lp = 0.0;
        for (std::size_t k = 0; k < c.beta.size(); ++k) lp += c.beta[k] * claim.covariates[k];
        const double mult = std::exp(lp);
        auto cum = [&](const PiecewiseIntensity& pw, double t) {
            double total = 0.0;
            for (std::size_t n = 0; n < pw.grid.intervals(); ++n) {
                const double w =
                    std::min(std::max(t - pw.grid.lower(n), 0.0), pw.grid.width(n));
                total += pw.rates[n] * w;
            }
            return total;
        };
        const double num_u = 1.0 - std::exp(-mult * cum(c.reporting_hazard,
                                                        std::min(tau - claim.accident_time,
                                                                 c.omega)));
        const double den_u = 1.0 - std::exp(-mult * cum(c.reporting_hazard, c.omega));
        const double expect_u = tau - claim.accident_time >= c.omega ? 1.0 : num_u / den_u;
        CHECK(o.pi_u == Approx(expect_u).epsilon(1e-12));

        const double window = c.omega - u;
        double expect_v = 1.0;
        if (window > 0.0 && tau - claim.reporting_time < window) {
            expect_v = tau - claim.reporting_time <= 0.0
                ? 0.0
                : cum(c.payment_intensity, tau - claim.reporting_time) /
                    cum(c.payment_intensity, window);
        }
        CHECK(o.pi_v == Approx(expect_v).epsilon(1e-12));
        CHECK(o.pi == o.pi_u * o.pi_v);
    }
    CHECK(checked > 50);
}

TEST_CASE("empirical reporting fraction matches the mean oracle pi_u") {
    SimConfig c = base_config();
    c.claim_rate = 40.0;
    c.seed = 909;
    const GroundTruth truth = simulate_portfolio(c);
    const double tau = 12.0;
    double reported = 0.0, expected = 0.0, var = 0.0;
    std::size_t n = 0;
    for (const Claim& claim : truth.population.claims) {
        if (claim.accident_time > tau) continue;
        ++n;
        if (claim.reporting_time <= tau) reported += 1.0;
        const double pu =
            oracle_probabilities(c, claim, claim.reporting_time - claim.accident_time, tau).pi_u;
        expected += pu;
        var += pu * (1.0 - pu);
    }
    REQUIRE(n > 200);
    CHECK(std::abs(reported - expected) < 3.0 * std::sqrt(var));
}

TEST_CASE("payments per claim match the intensity mass") {
    SimConfig c = base_config();
    c.claim_rate = 40.0;
    c.seed = 910;
    const GroundTruth truth = simulate_portfolio(c);
    std::vector<double> counts(truth.population.claims.size(), 0.0);
    for (const Payment& p : truth.population.payments) counts[p.claim_index] += 1.0;

    double observed = 0.0, expected = 0.0;
    for (std::size_t j = 0; j < truth.population.claims.size(); ++j) {
        const Claim& claim = truth.population.claims[j];
        const double u = claim.reporting_time - claim.accident_time;
        double lp = c.alpha_u * u;
        for (std::size_t k = 0; k < c.alpha.size(); ++k) lp += c.alpha[k] * claim.covariates[k];
        expected += std::exp(lp) * c.payment_intensity.cumulative(c.omega - u);
        observed += counts[j];
    }
    CHECK(std::abs(observed - expected) < 3.0 * std::sqrt(expected));
}

TEST_CASE("oracle and model evaluation agree up to the truncation mass") {
    const SimConfig c = base_config();
    const GroundTruth truth = simulate_portfolio(c);

    PemModel reporting;
    reporting.kind = ModelKind::reporting_delay;
    reporting.grid = c.reporting_hazard.grid;
    for (double r : c.reporting_hazard.rates) reporting.log_baseline.push_back(std::log(r));
    reporting.coefficients = c.beta;
    reporting.feature_names = {"flag", "score"};

    PemModel payment;
    payment.kind = ModelKind::payment_intensity;
    payment.grid = c.payment_intensity.grid;
    for (double r : c.payment_intensity.rates) payment.log_baseline.push_back(std::log(r));
    payment.coefficients = {c.alpha[0], c.alpha[1], c.alpha_u};
    payment.feature_names = {"flag", "score", "reporting_delay"};

    const double tau = 15.0;
    std::size_t checked = 0;
    for (const Claim& claim : truth.population.claims) {
        if (claim.accident_time > tau || claim.reporting_time > tau || checked >= 50) continue;
        ++checked;
        const double u = claim.reporting_time - claim.accident_time;
        const OracleProbabilities o = oracle_probabilities(c, claim, u, tau);
        // The model evaluation skips the omega renormalization, so it equals
        // the oracle scaled by the claim's own F(omega | x).
        const double f_omega = reporting.cdf(c.omega, claim.covariates);
        const double model_u = reporting_inclusion_probability(reporting, claim, tau);
        CHECK(model_u == Approx(o.pi_u * f_omega).epsilon(1e-10));
        const double model_v = payment_inclusion_probability(payment, claim, u, tau);
        CHECK(model_v == Approx(o.pi_v).epsilon(1e-12));
    }
    CHECK(checked == 50);
}

TEST_CASE("truth files are written with oracle columns") {
    const SimConfig c = base_config();
    const GroundTruth truth = simulate_portfolio(c);
    TempDir dir("truth");
    write_truth_csv(truth, 12.0, dir / "truth.csv");
    const CsvTable table = read_csv(dir / "truth.csv");
    CHECK(table.header ==
          std::vector<std::string>{"payment_row", "pi_u", "pi_v", "pi", "reported_by_tau",
                                   "paid_by_tau"});
    REQUIRE(table.rows.size() == truth.population.payments.size());

    const auto j = reserves_truth_json(truth, 12.0);
    CHECK(j.at("tau").get<double>() == 12.0);
    CHECK(j.at("ibns").get<double>() ==
          Approx(true_reserves(truth, 12.0).ibns));
}

TEST_CASE("config validation rejects inconsistent generators") {
    SimConfig c = base_config();
    c.beta = {0.1};  // wrong length
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);

    c = base_config();
    c.reporting_hazard.rates = {0.01, 0.01};  // too little mass before omega
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);

    c = base_config();
    c.payment_intensity.grid = TimeGrid({0.0, 12.0});  // grid not ending at omega
    c.payment_intensity.rates = {0.3};
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}
