#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ipwres/csv.hpp"
#include "ipwres/inclusion.hpp"
#include "ipwres/portfolio.hpp"
#include "ipwres/rng.hpp"
#include "ipwres/time_grid.hpp"

namespace ipwres {

//! Piecewise-constant rate function on a grid ending at omega.
struct PiecewiseIntensity {
    TimeGrid grid{std::vector<double>{0.0, 1.0}};
    std::vector<double> rates;

    void validate() const {
        if (rates.size() != grid.intervals())
            throw std::invalid_argument("PiecewiseIntensity: one rate per grid interval");
        for (double r : rates)
            if (!(r >= 0.0)) throw std::invalid_argument("PiecewiseIntensity: rates must be >= 0");
    }

    double cumulative(double t) const {
        double total = 0.0;
        for (std::size_t n = 0; n < grid.intervals(); ++n) total += rates[n] * grid.overlap(n, t);
        return total;
    }

    //! Smallest t with cumulative(t) = target (piecewise-linear inversion).
    double inverse_cumulative(double target) const {
        if (target <= 0.0) return 0.0;
        double acc = 0.0;
        for (std::size_t n = 0; n < grid.intervals(); ++n) {
            const double mass = rates[n] * grid.width(n);
            if (acc + mass >= target && rates[n] > 0.0)
                return grid.lower(n) + (target - acc) / rates[n];
            acc += mass;
        }
        return grid.omega();
    }
};

enum class CovariateKind { symmetric_binary, standard_normal };

struct CovariateSpec {
    CovariateKind kind = CovariateKind::symmetric_binary;
    std::string name;
};

struct SimConfig {
    double horizon = 36.0;      // months of accident arrivals
    double claim_rate = 10.0;   // accidents per month (homogeneous Poisson)
    double omega = 24.0;        // max settlement time from the accident

    PiecewiseIntensity reporting_hazard;
    std::vector<double> beta;   // reporting covariate effects

    PiecewiseIntensity payment_intensity;
    std::vector<double> alpha;  // payment covariate effects
    double alpha_u = 0.0;       // effect of the realized reporting delay

    std::vector<CovariateSpec> covariates;

    double amount_mu = 0.0;     // log-normal payment sizes
    double amount_sigma = 1.0;
    // Stress knob: adds corr * (V / omega) to log Y, making the sampling
    // informative. Zero keeps amounts independent of the delays.
    double amount_delay_corr = 0.0;

    std::uint64_t seed = 1;

    void validate() const {
        if (!(horizon > 0.0)) throw std::invalid_argument("SimConfig: horizon must be positive");
        if (!(claim_rate >= 0.0)) throw std::invalid_argument("SimConfig: claim_rate must be >= 0");
        if (!(omega > 0.0)) throw std::invalid_argument("SimConfig: omega must be positive");
        reporting_hazard.validate();
        payment_intensity.validate();
        if (std::abs(reporting_hazard.grid.omega() - omega) > 1e-9 ||
            std::abs(payment_intensity.grid.omega() - omega) > 1e-9)
            throw std::invalid_argument("SimConfig: model grids must end at omega");
        if (beta.size() != covariates.size() || alpha.size() != covariates.size())
            throw std::invalid_argument("SimConfig: coefficient vectors must match covariates");
        if (!(amount_sigma >= 0.0)) throw std::invalid_argument("SimConfig: sigma must be >= 0");
        // Pre-truncation reporting mass beyond omega must be negligible so the
        // hard truncation at omega is a no-op in distribution.
        if (std::exp(-reporting_hazard.cumulative(omega)) >= 1e-6)
            throw std::invalid_argument(
                "SimConfig: baseline reporting mass beyond omega exceeds 1e-6; add hazard mass");
    }
};

//! The uncensored population together with the generator that produced it.
struct GroundTruth {
    SimConfig config;
    Portfolio population;
};

namespace detail {

// Draw purposes: the (stream, purpose, index, draw) coordinates of every
// random quantity. Stream = claim index; the claim-count draw lives on a
// reserved stream, so adding claims never perturbs existing ones.
enum SimPurpose : std::uint64_t {
    kAccident = 0,
    kCovariate = 1,
    kReportingDelay = 2,
    kPaymentCount = 3,
    kPaymentTime = 4,
    kPaymentAmount = 5,
};
constexpr std::uint64_t kClaimCountStream = ~std::uint64_t{0};

}  // namespace detail

inline GroundTruth simulate_portfolio(const SimConfig& config) {
    config.validate();
    const RandomField field(config.seed);

    GroundTruth truth;
    truth.config = config;
    Portfolio& portfolio = truth.population;
    portfolio.max_settlement = config.omega;
    for (std::size_t k = 0; k < config.covariates.size(); ++k) {
        const std::string& name = config.covariates[k].name;
        portfolio.feature_names.push_back(name.empty() ? "x" + std::to_string(k + 1) : name);
    }

    DrawSequence count_draws(field, detail::kClaimCountStream, detail::kAccident, 0);
    const std::uint64_t n_claims = sample_poisson(count_draws, config.claim_rate * config.horizon);

    const double report_mass = config.reporting_hazard.cumulative(config.omega);
    for (std::uint64_t i = 0; i < n_claims; ++i) {
        Claim claim;
        claim.id = "C" + std::to_string(i + 1);
        claim.accident_time =
            field.uniform(i, detail::kAccident, 0, 0) * config.horizon;

        double lp_report = 0.0, lp_pay = 0.0;
        for (std::size_t k = 0; k < config.covariates.size(); ++k) {
            const double u = field.uniform(i, detail::kCovariate, k, 0);
            const double x = config.covariates[k].kind == CovariateKind::symmetric_binary
                ? (u < 0.5 ? -1.0 : 1.0)
                : sample_normal(u);
            claim.covariates.push_back(x);
            lp_report += config.beta[k] * x;
            lp_pay += config.alpha[k] * x;
        }

        // Reporting delay: inverse CDF of the omega-truncated distribution.
        const double q = field.uniform(i, detail::kReportingDelay, 0, 0);
        const double multiplier = std::exp(lp_report);
        const double f_omega = -std::expm1(-multiplier * report_mass);
        const double target = -std::log1p(-q * f_omega) / multiplier;
        const double delay_u = config.reporting_hazard.inverse_cumulative(target);
        claim.reporting_time = claim.accident_time + delay_u;
        lp_pay += config.alpha_u * delay_u;

        // Payment process: per-interval Poisson counts plus uniform order
        // statistics, restricted to the remaining window (0, omega - U].
        const double window = config.omega - delay_u;
        const double pay_multiplier = std::exp(lp_pay);
        const std::size_t claim_index = portfolio.claims.size();
        std::vector<Payment> claim_payments;
        const TimeGrid& pgrid = config.payment_intensity.grid;
        for (std::size_t n = 0; n < pgrid.intervals(); ++n) {
            const double seg = pgrid.overlap(n, window);
            if (seg <= 0.0) continue;
            const double mean = pay_multiplier * config.payment_intensity.rates[n] * seg;
            DrawSequence count_seq(field, i, detail::kPaymentCount, n);
            const std::uint64_t count = sample_poisson(count_seq, mean);
            for (std::uint64_t j = 0; j < count; ++j) {
                const double v =
                    pgrid.lower(n) + field.uniform(i, detail::kPaymentTime, n, j) * seg;
                const double z = sample_normal(field.uniform(i, detail::kPaymentAmount, n, j));
                Payment payment;
                payment.claim_index = claim_index;
                payment.payment_time = claim.reporting_time + v;
                payment.amount = std::exp(config.amount_mu + config.amount_sigma * z +
                                          config.amount_delay_corr * (v / config.omega));
                claim_payments.push_back(payment);
            }
        }
        std::stable_sort(claim_payments.begin(), claim_payments.end(),
                         [](const Payment& a, const Payment& b) {
                             return a.payment_time < b.payment_time;
                         });
        portfolio.claims.push_back(std::move(claim));
        portfolio.payments.insert(portfolio.payments.end(), claim_payments.begin(),
                                  claim_payments.end());
    }
    portfolio.validate();
    return truth;
}

struct OracleProbabilities {
    double pi_u = 1.0;
    double pi_v = 1.0;
    double pi = 1.0;
};

//! Closed-form inclusion probabilities of the generator. pi_u is the
//! omega-truncated reporting CDF; pi_v the timing ratio of the payment
//! process on the claim's remaining window (0, omega - U].
inline OracleProbabilities oracle_probabilities(const SimConfig& config, const Claim& claim,
                                                double reporting_delay, double tau) {
    OracleProbabilities out;
    double lp_report = 0.0;
    for (std::size_t k = 0; k < config.beta.size(); ++k)
        lp_report += config.beta[k] * claim.covariates[k];
    const double multiplier = std::exp(lp_report);
    const double elapsed_t = tau - claim.accident_time;
    if (elapsed_t <= 0.0) {
        out.pi_u = 0.0;
    } else if (elapsed_t >= config.omega) {
        out.pi_u = 1.0;
    } else {
        const double num = -std::expm1(-multiplier * config.reporting_hazard.cumulative(elapsed_t));
        const double den =
            -std::expm1(-multiplier * config.reporting_hazard.cumulative(config.omega));
        out.pi_u = num / den;
    }

    const double window = config.omega - reporting_delay;
    const double elapsed_r = tau - (claim.accident_time + reporting_delay);
    if (window <= 0.0 || elapsed_r >= window) {
        out.pi_v = 1.0;
    } else if (elapsed_r <= 0.0) {
        out.pi_v = 0.0;
    } else {
        const double den = config.payment_intensity.cumulative(window);
        if (den <= 0.0) throw std::invalid_argument("oracle_probabilities: degenerate intensity");
        out.pi_v = config.payment_intensity.cumulative(elapsed_r) / den;
    }
    out.pi = out.pi_u * out.pi_v;
    return out;
}

//! Oracle probabilities arranged per observed payment, ready for the
//! estimators.
inline InclusionProbabilities oracle_inclusion(const SimConfig& config,
                                               const ObservedSnapshot& snapshot,
                                               double floor = 1e-6) {
    InclusionProbabilities out;
    out.valuation_time = snapshot.valuation_time;
    out.floor = floor;
    for (const ObservedPayment& p : snapshot.payments) {
        const Claim& c = snapshot.claim(p.claim_index);
        OracleProbabilities o =
            oracle_probabilities(config, c, p.reporting_delay, snapshot.valuation_time);
        double pu = o.pi_u, pv = o.pi_v;
        if (pu < floor) { pu = floor; ++out.n_floored; }
        if (pv < floor) { pv = floor; ++out.n_floored; }
        out.pi_u.push_back(pu);
        out.pi_v.push_back(pv);
        out.pi.push_back(pu * pv);
    }
    return out;
}

inline InclusionProbabilities oracle_inclusion(const GroundTruth& truth,
                                               const ObservedSnapshot& snapshot,
                                               double floor = 1e-6) {
    return oracle_inclusion(truth.config, snapshot, floor);
}

struct TrueReserves {
    double total_liability = 0.0;
    double paid = 0.0;
    double ibns = 0.0;
    double rbns = 0.0;
    double ibnr = 0.0;
    double count_outstanding = 0.0;
    std::size_t n_total = 0;
    std::size_t n_paid = 0;
};

//! Direct bookkeeping on the uncensored population: IBNS collects payments
//! with W > tau of claims with T <= tau, split by reporting status at tau.
inline TrueReserves true_reserves(const GroundTruth& truth, double tau) {
    TrueReserves r;
    const Portfolio& pop = truth.population;
    for (const Payment& p : pop.payments) {
        const Claim& c = pop.claims[p.claim_index];
        if (c.accident_time > tau) continue;
        ++r.n_total;
        if (p.payment_time <= tau) {
            r.paid += p.amount;
            ++r.n_paid;
        } else {
            r.count_outstanding += 1.0;
            if (c.reporting_time <= tau) r.rbns += p.amount;
            else r.ibnr += p.amount;
        }
    }
    // Derived so the bookkeeping identities hold exactly on the stored values.
    r.ibns = r.rbns + r.ibnr;
    r.total_liability = r.paid + r.ibns;
    return r;
}

//! Population cumulative claims: payments of claims with T <= tau made by t.
inline double true_cumulative(const GroundTruth& truth, double tau, double t) {
    double total = 0.0;
    for (const Payment& p : truth.population.payments) {
        const Claim& c = truth.population.claims[p.claim_index];
        if (c.accident_time <= tau && p.payment_time <= t) total += p.amount;
    }
    return total;
}

inline void write_truth_csv(const GroundTruth& truth, double tau, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << "payment_row,pi_u,pi_v,pi,reported_by_tau,paid_by_tau\n";
    const Portfolio& pop = truth.population;
    for (std::size_t i = 0; i < pop.payments.size(); ++i) {
        const Payment& p = pop.payments[i];
        const Claim& c = pop.claims[p.claim_index];
        const OracleProbabilities o =
            oracle_probabilities(truth.config, c, c.reporting_time - c.accident_time, tau);
        out << i << ',' << format_double(o.pi_u) << ',' << format_double(o.pi_v) << ','
            << format_double(o.pi) << ',' << (c.reporting_time <= tau ? 1 : 0) << ','
            << (p.payment_time <= tau ? 1 : 0) << '\n';
    }
}

inline nlohmann::json reserves_truth_json(const GroundTruth& truth, double tau) {
    const TrueReserves r = true_reserves(truth, tau);
    return nlohmann::json{{"tau", tau},
                          {"total_liability", r.total_liability},
                          {"paid", r.paid},
                          {"ibns", r.ibns},
                          {"rbns", r.rbns},
                          {"ibnr", r.ibnr},
                          {"count_outstanding", r.count_outstanding},
                          {"n_total", r.n_total},
                          {"n_paid", r.n_paid}};
}

}  // namespace ipwres
