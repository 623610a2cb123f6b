#pragma once

#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ipwres {

//! A claim: accident at calendar time T, reported at R >= T, with a fixed
//! covariate vector (categoricals pre-encoded as indicator columns). All
//! calendar times are months since the run epoch.
struct Claim {
    std::string id;
    double accident_time = 0.0;   // T
    double reporting_time = 0.0;  // R
    std::vector<double> covariates;
};

struct Payment {
    std::size_t claim_index = 0;  // resolved reference into Portfolio::claims
    double payment_time = 0.0;    // W
    double amount = 0.0;          // Y >= 0
};

//! The full payment population: every claim and every payment, with no
//! censoring applied. max_settlement (omega) bounds the total delay W - T.
struct Portfolio {
    std::vector<Claim> claims;
    std::vector<Payment> payments;
    std::vector<std::string> feature_names;
    double max_settlement = 0.0;  // omega, months

    void validate() const {
        for (std::size_t j = 0; j < claims.size(); ++j) {
            const Claim& c = claims[j];
            if (c.reporting_time < c.accident_time)
                fail("claim '" + c.id + "': reporting time precedes accident time");
            if (c.covariates.size() != feature_names.size())
                fail("claim '" + c.id + "': covariate count does not match feature names");
        }
        for (std::size_t i = 0; i < payments.size(); ++i) {
            const Payment& p = payments[i];
            if (p.claim_index >= claims.size())
                fail("payment " + std::to_string(i) + ": unresolved claim reference");
            const Claim& c = claims[p.claim_index];
            if (p.payment_time < c.reporting_time)
                fail("payment " + std::to_string(i) + " of claim '" + c.id +
                     "': payment precedes reporting");
            if (p.amount < 0.0)
                fail("payment " + std::to_string(i) + ": negative amount");
            if (p.payment_time - c.accident_time > max_settlement + 1e-9)
                fail("payment " + std::to_string(i) + " of claim '" + c.id +
                     "': total delay exceeds max settlement time");
        }
    }

  private:
    [[noreturn]] static void fail(const std::string& what) {
        throw std::invalid_argument("portfolio: " + what);
    }
};

//! One payment as seen at the valuation date, with the derived delays
//! U = R - T, V = W - R and Z = W - T attached.
struct ObservedPayment {
    std::size_t payment_index = 0;  // position in Portfolio::payments
    std::size_t claim_index = 0;
    double amount = 0.0;
    double payment_time = 0.0;      // W
    double accident_time = 0.0;     // T
    double reporting_time = 0.0;    // R
    double reporting_delay = 0.0;   // U
    double payment_delay = 0.0;     // V
    double total_delay = 0.0;       // Z = U + V
};

//! View of a portfolio censored at valuation time tau. Holds a pointer to the
//! source portfolio, which must outlive the snapshot.
struct ObservedSnapshot {
    const Portfolio* portfolio = nullptr;
    double valuation_time = 0.0;
    std::vector<ObservedPayment> payments;      // W <= tau, in portfolio order
    std::vector<char> membership;               // per population payment
    std::vector<char> claim_reported;           // per claim: R <= tau
    std::vector<std::size_t> reported_claims;   // indices with R <= tau
    std::size_t n_paid = 0;                     // N^P(tau)
    std::size_t n_total = 0;                    // population size (simulation)

    const Claim& claim(std::size_t index) const { return portfolio->claims[index]; }
};

//! Censors the portfolio at tau. Payments with W exactly equal to tau count
//! as observed (closed interval, matching the membership indicator).
inline ObservedSnapshot snapshot(const Portfolio& portfolio, double tau) {
    ObservedSnapshot s;
    s.portfolio = &portfolio;
    s.valuation_time = tau;
    s.n_total = portfolio.payments.size();
    s.claim_reported.resize(portfolio.claims.size(), 0);
    for (std::size_t j = 0; j < portfolio.claims.size(); ++j) {
        if (portfolio.claims[j].reporting_time <= tau) {
            s.claim_reported[j] = 1;
            s.reported_claims.push_back(j);
        }
    }
    s.membership.resize(portfolio.payments.size(), 0);
    for (std::size_t i = 0; i < portfolio.payments.size(); ++i) {
        const Payment& p = portfolio.payments[i];
        if (p.payment_time > tau) continue;
        const Claim& c = portfolio.claims[p.claim_index];
        s.membership[i] = 1;
        ObservedPayment o;
        o.payment_index = i;
        o.claim_index = p.claim_index;
        o.amount = p.amount;
        o.payment_time = p.payment_time;
        o.accident_time = c.accident_time;
        o.reporting_time = c.reporting_time;
        o.reporting_delay = c.reporting_time - c.accident_time;
        o.payment_delay = p.payment_time - c.reporting_time;
        // Z is derived as U + V so the identity holds exactly on stored values.
        o.total_delay = o.reporting_delay + o.payment_delay;
        s.payments.push_back(o);
    }
    s.n_paid = s.payments.size();
    return s;
}

//! L^P(tau): the paid amount, a plain sum over observed payments.
inline double paid_amount(const ObservedSnapshot& s) {
    double total = 0.0;
    for (const ObservedPayment& p : s.payments) total += p.amount;
    return total;
}

//! Paid amount per claim at the snapshot date (used as fit weights under the
//! amount scheme).
inline std::vector<double> claim_paid_amounts(const ObservedSnapshot& s) {
    std::vector<double> paid(s.portfolio->claims.size(), 0.0);
    for (const ObservedPayment& p : s.payments) paid[p.claim_index] += p.amount;
    return paid;
}

}  // namespace ipwres
