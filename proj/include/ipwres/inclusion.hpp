#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "ipwres/pem.hpp"
#include "ipwres/portfolio.hpp"
#include "ipwres/stats.hpp"

namespace ipwres {

//! Per-payment inclusion probabilities at a valuation date. pi = pi_u * pi_v
//! exactly; all payments of one claim share the same pi_u. Values are floored
//! at `floor` before the product, and the number of raised entries recorded.
struct InclusionProbabilities {
    double valuation_time = 0.0;
    std::vector<double> pi_u;
    std::vector<double> pi_v;
    std::vector<double> pi;
    double floor = 1e-6;
    std::size_t n_floored = 0;
};

inline InclusionProbabilities compute_inclusion_probabilities(const PemModel& reporting,
                                                              const PemModel& payment,
                                                              const ObservedSnapshot& snapshot,
                                                              double floor = 1e-6) {
    if (reporting.kind != ModelKind::reporting_delay ||
        payment.kind != ModelKind::payment_intensity)
        throw std::invalid_argument("compute_inclusion_probabilities: model kinds mixed up");
    const double omega = snapshot.portfolio->max_settlement;
    if (std::abs(reporting.grid.omega() - omega) > 1e-9 ||
        std::abs(payment.grid.omega() - omega) > 1e-9)
        throw std::invalid_argument(
            "compute_inclusion_probabilities: model grids must end at the portfolio's omega");
    if (!(floor > 0.0 && floor < 1.0))
        throw std::invalid_argument("compute_inclusion_probabilities: floor must be in (0,1)");

    const double tau = snapshot.valuation_time;
    std::vector<double> claim_pi_u(snapshot.portfolio->claims.size(), -1.0);
    std::vector<double> claim_mean_amount;
    if (!payment.feature_names.empty() && payment.feature_names.back() == "claim_mean_amount") {
        claim_mean_amount.assign(snapshot.portfolio->claims.size(), 0.0);
        std::vector<double> events(snapshot.portfolio->claims.size(), 0.0);
        for (const ObservedPayment& p : snapshot.payments) {
            claim_mean_amount[p.claim_index] += p.amount;
            events[p.claim_index] += 1.0;
        }
        for (std::size_t j = 0; j < events.size(); ++j)
            if (events[j] > 0.0) claim_mean_amount[j] /= events[j];
    }

    InclusionProbabilities out;
    out.valuation_time = tau;
    out.floor = floor;
    out.pi_u.reserve(snapshot.payments.size());
    out.pi_v.reserve(snapshot.payments.size());
    out.pi.reserve(snapshot.payments.size());
    for (const ObservedPayment& p : snapshot.payments) {
        const Claim& c = snapshot.claim(p.claim_index);
        double& cached = claim_pi_u[p.claim_index];
        if (cached < 0.0) cached = reporting_inclusion_probability(reporting, c, tau);
        const double mean_amount =
            claim_mean_amount.empty() ? 0.0 : claim_mean_amount[p.claim_index];
        double pu = cached;
        double pv = payment_inclusion_probability(payment, c, p.reporting_delay, tau, mean_amount);
        if (pu < floor) { pu = floor; ++out.n_floored; }
        if (pv < floor) { pv = floor; ++out.n_floored; }
        out.pi_u.push_back(pu);
        out.pi_v.push_back(pv);
        out.pi.push_back(pu * pv);
    }
    return out;
}

//! Normal pseudo-residuals of the probability-integral transform under right
//! truncation: Phi^{-1}( F(event) / F(observation bound) ), the ratio clamped
//! to [1e-12, 1 - 1e-12]. One residual per reported claim for the reporting
//! model, one per observed payment for the payment model.
inline std::vector<double> pseudo_residuals(const PemModel& model,
                                            const ObservedSnapshot& snapshot) {
    const double tau = snapshot.valuation_time;
    const double omega = model.grid.omega();
    std::vector<double> residuals;
    auto transform = [](double ratio) {
        return normal_quantile(std::clamp(ratio, 1e-12, 1.0 - 1e-12));
    };
    if (model.kind == ModelKind::reporting_delay) {
        residuals.reserve(snapshot.reported_claims.size());
        for (std::size_t j : snapshot.reported_claims) {
            const Claim& c = snapshot.claim(j);
            const double delay = c.reporting_time - c.accident_time;
            const double bound = std::min(tau - c.accident_time, omega);
            const double num = model.cdf(std::min(delay, omega), c.covariates);
            const double den = model.cdf(bound, c.covariates);
            residuals.push_back(transform(den > 0.0 ? num / den : 1.0));
        }
    } else {
        // Timing distribution of payments: F_V(v) = Lambda0(v) / Lambda0(window);
        // the proportional covariate factor cancels in the ratio.
        residuals.reserve(snapshot.payments.size());
        for (const ObservedPayment& p : snapshot.payments) {
            const double window = omega - p.reporting_delay;
            const double bound = std::min(tau - p.reporting_time, window);
            const double num = model.cumulative_baseline(std::min(p.payment_delay, window));
            const double den = model.cumulative_baseline(bound);
            residuals.push_back(transform(den > 0.0 ? num / den : 1.0));
        }
    }
    return residuals;
}

}  // namespace ipwres
